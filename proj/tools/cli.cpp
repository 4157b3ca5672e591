// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "rvrank/datastore.hpp"
#include "rvrank/eval.hpp"
#include "rvrank/reranker.hpp"
#include "rvrank/retrieval.hpp"
#include "rvrank/synthgen.hpp"
#include "rvrank/verifier.hpp"

namespace rvrank::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  // inputs
  std::string meta;
  std::string features;
  std::string parts;
  std::string pairs_dir;
  std::string model;
  std::string oracle;
  std::string ranked;
  std::string out;
  std::string per_query;
  std::string split = "test";

  // ranking
  std::string metric = "euclidean";
  RankingConfig ranking;
  std::string stages = "none";
  std::vector<std::size_t> L_values;
  std::size_t k_max = 20;

  // training
  std::uint64_t seed = 7;
  std::size_t epochs = 80;
  double lr = 3.5e-4;
  std::size_t batch_size = 16;
  std::size_t hidden_global = 32;
  std::size_t hidden_part = 16;

  // explain
  std::size_t query = 0;
  std::size_t top = 5;

  SynthConfig synth;
};

void add_bundle_inputs(CLI::App* sub, Options& o, bool need_features = true) {
  sub->add_option("--meta", o.meta, "metadata CSV")->required();
  auto* f = sub->add_option("--features", o.features, "global feature file (RVR1)");
  if (need_features) f->required();
  sub->add_option("--parts", o.parts, "part feature file (RVP1)");
}

void add_metric(CLI::App* sub, Options& o) {
  sub->add_option("--metric", o.metric, "distance metric")->check(CLI::IsMember({"euclidean", "cosine"}));
}

void add_split(CLI::App* sub, Options& o) {
  sub->add_option("--split", o.split, "query/gallery roles: test (Q/G) or valid (VQ/VG)")
      ->check(CLI::IsMember({"test", "valid"}));
}

void add_scorer(CLI::App* sub, Options& o) {
  auto* m = sub->add_option("--model", o.model, "verifier checkpoint");
  auto* g = sub->add_option("--oracle", o.oracle, "groundtruth.json; scores with planted details");
  m->excludes(g);
}

std::pair<Role, Role> roles(const Options& o) {
  return o.split == "valid" ? std::pair{Role::VQ, Role::VG} : std::pair{Role::Q, Role::G};
}

Metric metric_of(const Options& o) { return *parse_metric(o.metric); }

json ranking_json(const RankingConfig& r) {
  json j;
  j["P"] = r.P;
  j["L"] = r.L;
  j["Q"] = r.Q;
  j["margin"] = r.margin;
  j["k1"] = r.k1;
  j["k2"] = r.k2;
  j["lambda"] = r.lambda;
  return j;
}

/// The exact settings of one invocation, echoed into every artifact.
json run_config(const std::string& subcommand, const Options& o) {
  json j;
  j["subcommand"] = subcommand;
  if (subcommand == "synth") {
    j["synth"] = json::parse(synth_config_json(o.synth));
    j["out"] = o.out;
    return j;
  }
  json in = json::object();
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) in[key] = v;
  };
  put("meta", o.meta);
  put("features", o.features);
  put("parts", o.parts);
  put("pairs", o.pairs_dir);
  put("model", o.model);
  put("oracle", o.oracle);
  put("ranked", o.ranked);
  j["inputs"] = in;
  j["ranking"] = ranking_json(o.ranking);
  j["metric"] = o.metric;
  j["split"] = o.split;
  j["out"] = o.out;
  if (subcommand == "rerank") j["stages"] = o.stages;
  if (subcommand == "train") {
    j["seed"] = o.seed;
    j["epochs"] = o.epochs;
    j["lr"] = o.lr;
    j["batch_size"] = o.batch_size;
    j["hidden_global"] = o.hidden_global;
    j["hidden_part"] = o.hidden_part;
  }
  if (subcommand == "sweep-l") j["L_values"] = o.L_values;
  if (subcommand == "eval") {
    j["k_max"] = o.k_max;
    j["per_query"] = o.per_query;
  }
  if (subcommand == "explain") {
    j["query"] = o.query;
    j["top"] = o.top;
  }
  return j;
}

std::vector<std::string> config_comments(const json& cfg) { return {"config " + cfg.dump()}; }

void write_sidecar(const fs::path& artifact, const json& cfg) {
  std::ofstream out(artifact.string() + ".config.json", std::ios::trunc);
  out << cfg.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot write config sidecar for " + artifact.string());
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

DatasetBundle load(const Options& o) { return load_bundle(o.meta, o.features, optional_path(o.parts)); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

// Holds whichever scorer the flags selected.
struct ScorerHolder {
  std::optional<VerifierModel> model;
  std::optional<GroundTruth> truth;
  std::unique_ptr<PairScorer> scorer;
};

ScorerHolder make_scorer(const Options& o, const DatasetBundle& bundle) {
  ScorerHolder h;
  if (!o.model.empty()) {
    h.model = load_model(o.model);
    const auto& s = h.model->shape();
    if (s.D != bundle.dims().D || (s.Dp > 0 && (s.Dp != bundle.dims().Dp || s.K != bundle.dims().K))) {
      throw Error(ErrorCode::kDimensionMismatch, "model shape (D=" + std::to_string(s.D) + " Dp=" +
                                                     std::to_string(s.Dp) + " K=" + std::to_string(s.K) +
                                                     ") does not match the bundle");
    }
    h.scorer = std::make_unique<VerifierScorer>(*h.model);
  } else if (!o.oracle.empty()) {
    h.truth = read_groundtruth_json(o.oracle);
    h.scorer = std::make_unique<DetailOracleScorer>(*h.truth);
  }
  return h;
}

int cmd_synth(const Options& o) {
  const json cfg = run_config("synth", o);
  const SynthOutput data = generate(o.synth);
  const fs::path dir(o.out);
  ensure_dir(dir);
  write_bundle(data.bundle, dir / "meta.csv", dir / "features.bin", dir / "parts.bin", config_comments(cfg));
  write_sidecar(dir / "features.bin", cfg);
  write_sidecar(dir / "parts.bin", cfg);
  write_groundtruth_json(data.truth, dir / "groundtruth.json", cfg.dump());
  std::cout << fmt::format("synth: {} records (T={} VQ={} VG={} Q={} G={}) -> {}\n", data.bundle.total_records(),
                           data.bundle.split(Role::T).size(), data.bundle.split(Role::VQ).size(),
                           data.bundle.split(Role::VG).size(), data.bundle.split(Role::Q).size(),
                           data.bundle.split(Role::G).size(), dir.string());
  return 0;
}

int cmd_validate(const Options& o) {
  const DatasetBundle bundle = load(o);
  const auto violations = validate_bundle(bundle);
  for (const auto& v : violations) std::cerr << "violation: " << v.to_string() << '\n';
  std::cout << fmt::format("validate: {} records, D={} Dp={} K={}, {} violation(s)\n", bundle.total_records(),
                           bundle.dims().D, bundle.dims().Dp, bundle.dims().K, violations.size());
  return violations.empty() ? 0 : 1;
}

int cmd_retrieve(const Options& o) {
  const json cfg = run_config("retrieve", o);
  const DatasetBundle bundle = load(o);
  const auto [qrole, grole] = roles(o);
  PairSet pairs = build_eval_pairs(qrole, grole, bundle, o.ranking.P, metric_of(o));
  pairs.provenance = PairProvenance::kCandidates;
  ensure_parent(o.out);
  write_pairs_csv(pairs, o.out, config_comments(cfg));
  std::cout << fmt::format("retrieve: {} candidates for {} queries -> {}\n", pairs.pairs.size(),
                           bundle.split(qrole).size(), o.out);
  return 0;
}

int cmd_pairs(const Options& o) {
  const json cfg = run_config("pairs", o);
  const DatasetBundle bundle = load(o);
  const Metric metric = metric_of(o);
  const fs::path dir(o.out);
  ensure_dir(dir);
  TrainPairReport report;
  const PairSet train = build_train_pairs(bundle, o.ranking.P, metric, &report);
  PairSet valid = build_eval_pairs(Role::VQ, Role::VG, bundle, o.ranking.P, metric);
  valid.provenance = PairProvenance::kValid;
  const PairSet test = build_eval_pairs(Role::Q, Role::G, bundle, o.ranking.P, metric);
  const auto comments = config_comments(cfg);
  write_pairs_csv(train, dir / "train_pairs.csv", comments);
  write_pairs_csv(valid, dir / "valid_pairs.csv", comments);
  write_pairs_csv(test, dir / "test_pairs.csv", comments);
  if (!report.dropped_no_positive.empty() || !report.dropped_no_negative.empty()) {
    warn(fmt::format("pairs: dropped {} training anchor(s) without a positive and {} without a negative",
                     report.dropped_no_positive.size(), report.dropped_no_negative.size()));
  }
  std::cout << fmt::format("pairs: train={} ({} of {} anchors) valid={} test={} -> {}\n", train.pairs.size(),
                           report.anchors_kept, report.anchors_total, valid.pairs.size(), test.pairs.size(),
                           dir.string());
  return 0;
}

int cmd_train(const Options& o) {
  const json cfg = run_config("train", o);
  const DatasetBundle bundle = load(o);
  const fs::path pairs_dir(o.pairs_dir);
  const PairSet train_pairs = read_pairs_csv(pairs_dir / "train_pairs.csv");
  const PairSet valid_pairs = read_pairs_csv(pairs_dir / "valid_pairs.csv");

  VerifierShape shape{bundle.dims().D, bundle.has_parts() ? bundle.dims().Dp : 0, bundle.dims().K,
                      o.hidden_global, o.hidden_part};
  VerifierHyper hyper;
  hyper.margin = o.ranking.margin;
  hyper.learning_rate = o.lr;
  hyper.epochs = o.epochs;
  hyper.batch_size = o.batch_size;
  const VerifierModel initial(shape, o.seed, hyper);
  const RankingConfig rc = o.ranking.clamped();
  TrainOptions topt;
  topt.window_L = rc.L;
  topt.window_Q = rc.Q;
  const TrainResult result = train(initial, train_pairs, valid_pairs, bundle, topt);

  const fs::path dir(o.out);
  ensure_dir(dir);
  save_model(result.model, dir / "model.bin");
  write_sidecar(dir / "model.bin", cfg);
  write_history_csv(result.history, dir / "history.csv", config_comments(cfg));
  const auto& best = result.history.at(result.best_epoch);
  std::cout << fmt::format("train: best epoch {} (valid rank-1 {:.4f}, L={:.6g}) -> {}\n", result.best_epoch,
                           best.valid_rank1, best.loss, dir.string());
  return 0;
}

int cmd_rerank(const Options& o) {
  const json cfg = run_config("rerank", o);
  const auto stages = parse_stages(o.stages);
  if (!stages) throw Error(ErrorCode::kInvalidArgument, "unknown --stages value: " + o.stages);
  const DatasetBundle bundle = load(o);
  const ScorerHolder holder = make_scorer(o, bundle);
  if (stages->window && !holder.scorer) {
    throw Error(ErrorCode::kInvalidArgument, "the window stage needs --model or --oracle");
  }
  const auto [qrole, grole] = roles(o);
  PipelineStats stats;
  const auto lists =
      rerank_pipeline(bundle, qrole, grole, metric_of(o), holder.scorer.get(), o.ranking, *stages, &stats);
  ensure_parent(o.out);
  write_ranked_csv(lists, o.out, config_comments(cfg));
  std::cout << fmt::format("rerank: {} queries, stages={}, scorer calls={}, global-head fallbacks={} -> {}\n",
                           lists.size(), stages_name(*stages), stats.total_scorer_calls, stats.fallback_queries,
                           o.out);
  return 0;
}

int cmd_eval(const Options& o) {
  const json cfg = run_config("eval", o);
  const DatasetBundle bundle = bundle_from_metadata(load_metadata(o.meta));
  const auto lists = read_ranked_csv(o.ranked);
  const auto [qrole, grole] = roles(o);
  const EvalReport report = evaluate(lists, bundle, qrole, grole, o.k_max);
  const std::string text = eval_report_json(report, cfg.dump());
  if (!o.out.empty()) {
    ensure_parent(o.out);
    std::ofstream out(o.out, std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + o.out);
  }
  if (!o.per_query.empty()) {
    ensure_parent(o.per_query);
    write_per_query_csv(report, o.per_query, config_comments(cfg));
  }
  std::cout << fmt::format("eval: rank-1 {:.4f}  rank-5 {:.4f}  rank-10 {:.4f}  mAP {:.4f}  AUC {:.4f}  ({} queries, "
                           "{} excluded)\n",
                           report.rank(1), report.cmc.size() >= 5 ? report.rank(5) : 0.0,
                           report.cmc.size() >= 10 ? report.rank(10) : 0.0, report.map_score, report.auc,
                           report.evaluated_queries, report.excluded_queries);
  return 0;
}

int cmd_sweep(const Options& o) {
  const json cfg = run_config("sweep-l", o);
  const DatasetBundle bundle = load(o);
  const ScorerHolder holder = make_scorer(o, bundle);
  if (!holder.scorer) throw Error(ErrorCode::kInvalidArgument, "sweep-l needs --model or --oracle");
  const auto [qrole, grole] = roles(o);
  std::vector<std::size_t> Ls = o.L_values;
  if (Ls.empty()) {
    for (std::size_t L = 1; L <= o.ranking.Q; ++L) Ls.push_back(L);
  }
  const auto orders = retrieval_orders(bundle, qrole, grole, metric_of(o), o.ranking, false);
  const SweepResult sweep = sweep_L(bundle, qrole, grole, orders, *holder.scorer, Ls, o.ranking.Q);

  std::cout << fmt::format("{:>4}  {:>8}  {:>8}\n", "L", "rank-1", "rank-10");
  for (const auto& row : sweep.rows) std::cout << fmt::format("{:>4}  {:>8.4f}  {:>8.4f}\n", row.L, row.rank1, row.rank10);
  if (sweep.rank10_flat_beyond_threshold) {
    std::cout << fmt::format("rank-10 constant for L > Q-10: {}\n", *sweep.rank10_flat_beyond_threshold ? "yes" : "no");
  }
  if (!o.out.empty()) {
    ensure_parent(o.out);
    std::ofstream out(o.out, std::ios::trunc);
    out << "# config " << cfg.dump() << '\n' << "L,rank1,rank10\n";
    for (const auto& row : sweep.rows) out << row.L << ',' << format_real(row.rank1) << ',' << format_real(row.rank10) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + o.out);
  }
  return 0;
}

int cmd_explain(const Options& o) {
  const json cfg = run_config("explain", o);
  const DatasetBundle bundle = load(o);
  if (o.model.empty()) throw Error(ErrorCode::kInvalidArgument, "explain needs --model");
  const ScorerHolder holder = make_scorer(o, bundle);
  const VerifierModel& model = *holder.model;
  const auto [qrole, grole] = roles(o);
  const auto queries = bundle.split(qrole);
  const auto gallery = bundle.split(grole);
  if (o.query >= queries.size()) {
    throw Error(ErrorCode::kUnresolvableRef, "query index " + std::to_string(o.query) + " out of range");
  }
  const auto lists = top_candidates(queries.subspan(o.query, 1), gallery, o.top, metric_of(o));
  const auto& query = queries[o.query];
  const auto& entries = lists.at(0).entries;

  std::ofstream csv;
  if (!o.out.empty()) {
    ensure_parent(o.out);
    csv.open(o.out, std::ios::trunc);
    csv << "# config " << cfg.dump() << '\n'
        << "query_index,cand_index,rank,same_identity,part,present,contribution,argmax\n";
  }

  std::cout << fmt::format("query {} (identity {}, cloth {})\n", o.query, query.identity, query.cloth);
  std::cout << fmt::format("{:>6}", "part");
  for (std::size_t r = 0; r < entries.size(); ++r) std::cout << fmt::format("  {:>11}", fmt::format("g{}", entries[r].gallery_index));
  std::cout << '\n';

  std::vector<std::optional<PartScore>> scores;
  std::vector<double> globals;
  for (const auto& e : entries) {
    const auto rep = make_pair_representation(query, gallery[e.gallery_index]);
    globals.push_back(score_global(model, rep));
    scores.push_back(model.has_part_head() && rep.any_joint_present() ? std::optional(score_part(model, rep))
                                                                      : std::nullopt);
  }
  for (std::size_t k = 0; k < model.shape().K; ++k) {
    std::cout << fmt::format("{:>6}", k);
    for (std::size_t r = 0; r < entries.size(); ++r) {
      std::string cell = "-";
      bool flagged = false;
      if (scores[r] && scores[r]->contributions[k]) {
        flagged = scores[r]->argmax == k;
        cell = fmt::format("{:+.4f}{}", *scores[r]->contributions[k], flagged ? "*" : " ");
      }
      std::cout << fmt::format("  {:>11}", cell);
      if (csv.is_open()) {
        const bool present = scores[r] && scores[r]->contributions[k].has_value();
        csv << o.query << ',' << entries[r].gallery_index << ',' << r + 1 << ','
            << (gallery[entries[r].gallery_index].identity == query.identity ? 1 : 0) << ',' << k << ','
            << (present ? 1 : 0) << ',' << (present ? format_real(*scores[r]->contributions[k]) : std::string()) << ','
            << (flagged ? 1 : 0) << '\n';
      }
    }
    std::cout << '\n';
  }
  std::cout << fmt::format("{:>6}", "sim_S");
  for (const auto& s : scores) std::cout << fmt::format("  {:>11}", s ? fmt::format("{:+.4f} ", s->sim_s) : "- ");
  std::cout << '\n' << fmt::format("{:>6}", "sim_G");
  for (double g : globals) std::cout << fmt::format("  {:>11}", fmt::format("{:+.4f} ", g));
  std::cout << '\n' << fmt::format("{:>6}", "match");
  for (const auto& e : entries) {
    std::cout << fmt::format("  {:>11}", gallery[e.gallery_index].identity == query.identity ? "yes " : "no ");
  }
  std::cout << "\n(* marks the max-pooled part)\n";
  if (csv.is_open() && !csv) throw Error(ErrorCode::kIo, "write failed: " + o.out);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Retrieval-verification re-ranking for cloth-changing person re-identification"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset bundle");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seed", o.synth.seed, "generator seed");
  synth->add_option("--identities", o.synth.n_identities);
  synth->add_option("--clothes", o.synth.clothes_per_identity);
  synth->add_option("--images", o.synth.images_per_cloth, "images per (identity, cloth)");
  synth->add_option("--group-size", o.synth.confuser_group_size, "identities per confuser group");
  synth->add_option("--D", o.synth.D);
  synth->add_option("--Dp", o.synth.Dp);
  synth->add_option("--K", o.synth.K);
  synth->add_option("--group-spread", o.synth.group_spread);
  synth->add_option("--identity-spread", o.synth.identity_spread);
  synth->add_option("--general-noise", o.synth.general_noise);
  synth->add_option("--detail-noise", o.synth.detail_noise);
  synth->add_option("--cloth-shift", o.synth.cloth_shift);
  synth->add_option("--part-dropout", o.synth.part_dropout);
  synth->add_option("--train-fraction", o.synth.train_fraction);
  synth->add_option("--valid-fraction", o.synth.valid_fraction);

  auto* validate = app.add_subcommand("validate", "check a dataset bundle against its invariants");
  add_bundle_inputs(validate, o);

  auto* retrieve = app.add_subcommand("retrieve", "emit top-P candidate lists");
  add_bundle_inputs(retrieve, o);
  add_metric(retrieve, o);
  add_split(retrieve, o);
  retrieve->add_option("--P", o.ranking.P, "candidates per query");
  retrieve->add_option("--out", o.out, "candidate CSV")->required();

  auto* pairs = app.add_subcommand("pairs", "build Train/Valid/Test pair sets");
  add_bundle_inputs(pairs, o);
  add_metric(pairs, o);
  pairs->add_option("--P", o.ranking.P, "candidates per query and positives/negatives per anchor");
  pairs->add_option("--out", o.out, "output directory")->required();

  auto* trn = app.add_subcommand("train", "train the pair verifier");
  add_bundle_inputs(trn, o);
  trn->add_option("--pairs", o.pairs_dir, "directory holding train_pairs.csv and valid_pairs.csv")
      ->required();
  trn->add_option("--out", o.out, "output directory")->required();
  trn->add_option("--seed", o.seed, "initialisation and shuffling seed");
  trn->add_option("--epochs", o.epochs);
  trn->add_option("--lr", o.lr, "base learning rate");
  trn->add_option("--margin", o.ranking.margin, "triplet margin");
  trn->add_option("--batch-size", o.batch_size, "anchors per step");
  trn->add_option("--hidden-global", o.hidden_global);
  trn->add_option("--hidden-part", o.hidden_part);
  trn->add_option("--L", o.ranking.L, "window length for validation");
  trn->add_option("--Q", o.ranking.Q, "re-ranked depth for validation");

  auto* rerank = app.add_subcommand("rerank", "rank the gallery for every query");
  add_bundle_inputs(rerank, o);
  add_metric(rerank, o);
  add_split(rerank, o);
  add_scorer(rerank, o);
  rerank->add_option("--stages", o.stages, "none | kreciprocal | window | both");
  rerank->add_option("--P", o.ranking.P);
  rerank->add_option("--L", o.ranking.L);
  rerank->add_option("--Q", o.ranking.Q);
  rerank->add_option("--k1", o.ranking.k1);
  rerank->add_option("--k2", o.ranking.k2);
  rerank->add_option("--lambda", o.ranking.lambda);
  rerank->add_option("--out", o.out, "ranked-list CSV")->required();

  auto* ev = app.add_subcommand("eval", "CMC / mAP / AUC of ranked lists");
  ev->add_option("--meta", o.meta, "metadata CSV")->required();
  ev->add_option("--ranked", o.ranked, "ranked-list CSV")->required();
  add_split(ev, o);
  ev->add_option("--kmax", o.k_max, "CMC depth");
  ev->add_option("--out", o.out, "JSON report");
  ev->add_option("--per-query", o.per_query, "per-query CSV");

  auto* sweep = app.add_subcommand("sweep-l", "rank-1 / rank-10 over window lengths");
  add_bundle_inputs(sweep, o);
  add_metric(sweep, o);
  add_split(sweep, o);
  add_scorer(sweep, o);
  sweep->add_option("--Q", o.ranking.Q);
  sweep->add_option("--L", o.L_values, "window lengths (default 1..Q)")->delimiter(',');
  sweep->add_option("--out", o.out, "CSV table");

  auto* explain = app.add_subcommand("explain", "per-part contributions for a query's candidates");
  add_bundle_inputs(explain, o);
  add_metric(explain, o);
  add_split(explain, o);
  explain->add_option("--model", o.model, "verifier checkpoint")->required();
  explain->add_option("--query", o.query, "query index");
  explain->add_option("--top", o.top, "candidates to show");
  explain->add_option("--out", o.out, "CSV (long format)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*validate) return cmd_validate(o);
    if (*retrieve) return cmd_retrieve(o);
    if (*pairs) return cmd_pairs(o);
    if (*trn) return cmd_train(o);
    if (*rerank) return cmd_rerank(o);
    if (*ev) return cmd_eval(o);
    if (*sweep) return cmd_sweep(o);
    if (*explain) return cmd_explain(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rvrank::cli
