// SPDX-License-Identifier: Apache-2.0
#include "rvrank/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "binary_io.hpp"
#include "rvrank/reranker.hpp"
#include "rvrank/rng.hpp"
#include "text_util.hpp"

namespace rvrank {

namespace {

constexpr std::string_view kModelMagic = "RVM1";
constexpr std::string_view kHistoryHeader = "epoch,L,L_g,L_p,valid_rank1";

void fuse(std::span<const float> a, std::span<const float> b, std::vector<double>& out) {
  const std::size_t n = a.size();
  out.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i], y = b[i];
    out[i] = std::abs(x - y);
    out[n + i] = x * y;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// hidden = tanh(W x + b), W row-major (rows = hidden width).
void dense_tanh(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                std::vector<double>& hidden) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  hidden.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    hidden[r] = std::tanh(b[r] + dot(w.subspan(r * cols, cols), x));
  }
}

// Backprop through dense_tanh: dpre = dhidden * (1 - h^2).
void dense_tanh_backward(std::span<const double> x, std::span<const double> hidden,
                         std::span<const double> dhidden, std::span<double> dw, std::span<double> db) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < hidden.size(); ++r) {
    const double dpre = dhidden[r] * (1.0 - hidden[r] * hidden[r]);
    if (dpre == 0.0) continue;
    db[r] += dpre;
    auto row = dw.subspan(r * cols, cols);
    for (std::size_t c = 0; c < cols; ++c) row[c] += dpre * x[c];
  }
}

struct PartForward {
  std::vector<std::vector<double>> hidden;  // per part, empty if absent
  std::vector<std::optional<double>> contributions;
  std::size_t argmax = 0;
  double pooled = 0.0;
  double sim = 0.0;
};

PartForward part_forward(const VerifierModel& model, const PairRepresentation& rep) {
  const auto& shape = model.shape();
  if (!model.has_part_head() || rep.part_pairs.size() != shape.K) {
    throw Error(ErrorCode::kNoPresentParts, "model has no part head for this representation");
  }
  auto wp = model.tensor(VerifierModel::kPartW);
  auto bp = model.tensor(VerifierModel::kPartB);
  auto mixer_w = model.tensor(VerifierModel::kMixerW);
  auto mixer_b = model.tensor(VerifierModel::kMixerB);

  PartForward f;
  f.hidden.resize(shape.K);
  f.contributions.assign(shape.K, std::nullopt);
  bool any = false;
  for (std::size_t k = 0; k < shape.K; ++k) {
    const auto& part = rep.part_pairs[k];
    if (!part.joint_present) continue;
    if (part.values.size() != 2 * shape.Dp) {
      throw Error(ErrorCode::kDimensionMismatch, "part pair width does not match model Dp");
    }
    dense_tanh(wp, bp, part.values, f.hidden[k]);
    const double c = mixer_b[k] + dot(mixer_w.subspan(k * shape.hidden_part, shape.hidden_part), f.hidden[k]);
    f.contributions[k] = c;
    if (!any || c > f.pooled) {
      f.pooled = c;
      f.argmax = k;
    }
    any = true;
  }
  if (!any) throw Error(ErrorCode::kNoPresentParts, "no jointly present part in pair");
  const double scale = std::exp(model.tensor(VerifierModel::kOutLogScale)[0]);
  f.sim = std::tanh(scale * f.pooled + model.tensor(VerifierModel::kOutBias)[0]);
  return f;
}

}  // namespace

bool PairRepresentation::any_joint_present() const {
  return std::any_of(part_pairs.begin(), part_pairs.end(), [](const Part& p) { return p.joint_present; });
}

PairRepresentation make_pair_representation(const ImageRecord& q, const ImageRecord& g) {
  if (q.global_feature.size() != g.global_feature.size() || q.parts.size() != g.parts.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pair records have different dimensions");
  }
  PairRepresentation rep;
  fuse(q.global_feature, g.global_feature, rep.global_pair);
  rep.part_pairs.resize(q.parts.size());
  for (std::size_t k = 0; k < q.parts.size(); ++k) {
    const auto& a = q.parts[k];
    const auto& b = g.parts[k];
    auto& out = rep.part_pairs[k];
    out.joint_present = a.present && b.present;
    if (!out.joint_present) continue;
    if (a.values.size() != b.values.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "part " + std::to_string(k) + " has different widths");
    }
    fuse(a.values, b.values, out.values);
  }
  return rep;
}

double learning_rate_scale(std::size_t epoch) {
  if (epoch > 60) return 0.01;
  if (epoch > 30) return 0.1;
  return 1.0;
}

void VerifierModel::layout() {
  const auto& s = shape_;
  const std::size_t g_in = 2 * s.D;
  const std::size_t p_in = 2 * s.Dp;
  const std::size_t part_k = s.Dp > 0 ? s.K : 0;
  const std::size_t part_h = s.Dp > 0 ? s.hidden_part : 0;
  struct Spec {
    const char* name;
    std::size_t size;
    std::size_t fan_in;
  };
  const Spec specs[kTensorCount] = {
      {"global_w1", s.hidden_global * g_in, g_in},
      {"global_b1", s.hidden_global, g_in},
      {"global_w2", s.hidden_global, s.hidden_global},
      {"global_b2", 1, s.hidden_global},
      {"part_w", part_h * p_in, p_in},
      {"part_b", part_h, p_in},
      {"mixer_w", part_k * part_h, part_h},
      {"mixer_b", part_k, part_h},
      {"out_log_scale", s.Dp > 0 ? 1u : 0u, 1},
      {"out_bias", s.Dp > 0 ? 1u : 0u, 1},
  };
  tensors_.clear();
  std::size_t offset = 0;
  for (const auto& spec : specs) {
    tensors_.push_back({spec.name, offset, spec.size, std::max<std::size_t>(spec.fan_in, 1)});
    offset += spec.size;
  }
  params_.assign(offset, 0.0);
}

VerifierModel::VerifierModel(const VerifierShape& shape, std::uint64_t seed, const VerifierHyper& hyper)
    : shape_(shape), seed_(seed), hyper_(hyper) {
  layout();
  Rng rng(seed);
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    if (t == kOutLogScale || t == kOutBias) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(tensors_[t].fan_in));
    // Drawn at float precision so a fresh model equals its own checkpoint.
    for (double& w : tensor(static_cast<Tensor>(t))) w = static_cast<float>(rng.uniform(-bound, bound));
  }
}

VerifierModel VerifierModel::zeros(const VerifierShape& shape, const VerifierHyper& hyper,
                                  std::uint64_t seed) {
  VerifierModel m;
  m.shape_ = shape;
  m.seed_ = seed;
  m.hyper_ = hyper;
  m.layout();
  return m;
}

bool VerifierModel::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

void VerifierModel::round_to_float() {
  for (double& w : params_) w = static_cast<double>(static_cast<float>(w));
}

double score_global(const VerifierModel& model, const PairRepresentation& rep) {
  if (rep.global_pair.size() != 2 * model.shape().D) {
    throw Error(ErrorCode::kDimensionMismatch, "global pair width does not match model D");
  }
  std::vector<double> hidden;
  dense_tanh(model.tensor(VerifierModel::kGlobalW1), model.tensor(VerifierModel::kGlobalB1), rep.global_pair,
             hidden);
  const double z = model.tensor(VerifierModel::kGlobalB2)[0] + dot(model.tensor(VerifierModel::kGlobalW2), hidden);
  return std::tanh(z);
}

double score_global_backward(const VerifierModel& model, const PairRepresentation& rep, double upstream,
                             std::span<double> grad) {
  auto w1 = model.tensor(VerifierModel::kGlobalW1);
  auto b1 = model.tensor(VerifierModel::kGlobalB1);
  auto w2 = model.tensor(VerifierModel::kGlobalW2);
  std::vector<double> hidden;
  dense_tanh(w1, b1, rep.global_pair, hidden);
  const double s = std::tanh(model.tensor(VerifierModel::kGlobalB2)[0] + dot(w2, hidden));
  const double dz = upstream * (1.0 - s * s);
  if (dz == 0.0) return s;

  const auto& info = model.tensors();
  auto slice = [&](VerifierModel::Tensor t) { return grad.subspan(info[t].offset, info[t].size); };
  auto gw2 = slice(VerifierModel::kGlobalW2);
  slice(VerifierModel::kGlobalB2)[0] += dz;
  std::vector<double> dhidden(hidden.size());
  for (std::size_t r = 0; r < hidden.size(); ++r) {
    gw2[r] += dz * hidden[r];
    dhidden[r] = dz * w2[r];
  }
  dense_tanh_backward(rep.global_pair, hidden, dhidden, slice(VerifierModel::kGlobalW1),
                      slice(VerifierModel::kGlobalB1));
  return s;
}

PartScore score_part(const VerifierModel& model, const PairRepresentation& rep) {
  PartForward f = part_forward(model, rep);
  return {f.sim, std::move(f.contributions), f.argmax};
}

double score_part_backward(const VerifierModel& model, const PairRepresentation& rep, double upstream,
                           std::span<double> grad) {
  PartForward f = part_forward(model, rep);
  const double log_scale = model.tensor(VerifierModel::kOutLogScale)[0];
  const double scale = std::exp(log_scale);
  const double dpre = upstream * (1.0 - f.sim * f.sim);
  if (dpre == 0.0) return f.sim;

  const auto& shape = model.shape();
  const auto& info = model.tensors();
  auto slice = [&](VerifierModel::Tensor t) { return grad.subspan(info[t].offset, info[t].size); };
  slice(VerifierModel::kOutBias)[0] += dpre;
  slice(VerifierModel::kOutLogScale)[0] += dpre * scale * f.pooled;

  // Max-pool routes the gradient to the argmax part only.
  const std::size_t k = f.argmax;
  const double dc = dpre * scale;
  const std::size_t h = shape.hidden_part;
  auto mixer_w = model.tensor(VerifierModel::kMixerW).subspan(k * h, h);
  auto gmixer_w = slice(VerifierModel::kMixerW).subspan(k * h, h);
  slice(VerifierModel::kMixerB)[k] += dc;
  const auto& hidden = f.hidden[k];
  std::vector<double> dhidden(h);
  for (std::size_t r = 0; r < h; ++r) {
    gmixer_w[r] += dc * hidden[r];
    dhidden[r] = dc * mixer_w[r];
  }
  dense_tanh_backward(rep.part_pairs[k].values, hidden, dhidden, slice(VerifierModel::kPartW),
                      slice(VerifierModel::kPartB));
  return f.sim;
}

double triplet_hinge(double sim_pos, double sim_neg, double margin) {
  return std::max(sim_neg - sim_pos + margin, 0.0);
}

std::vector<AnchorGroup> group_by_anchor(const PairSet& pairs) {
  std::vector<AnchorGroup> groups;
  std::map<std::pair<int, std::size_t>, std::size_t> slot;
  for (const auto& p : pairs.pairs) {
    auto key = std::make_pair(static_cast<int>(p.query.role), p.query.index);
    auto [it, inserted] = slot.try_emplace(key, groups.size());
    if (inserted) groups.push_back({p.query, {}, {}});
    auto& g = groups[it->second];
    (p.label ? g.positives : g.negatives).push_back(p.candidate);
  }
  return groups;
}

TripletBatch make_triplets(std::span<const AnchorGroup> groups) {
  TripletBatch batch;
  for (const auto& g : groups) {
    for (const auto& pos : g.positives) {
      for (const auto& neg : g.negatives) batch.triplets.push_back({g.anchor, pos, neg});
    }
  }
  return batch;
}

namespace {

struct PairKey {
  RecordRef a;
  RecordRef b;
  bool operator<(const PairKey& o) const {
    auto t = [](const PairKey& k) {
      return std::make_tuple(static_cast<int>(k.a.role), k.a.index, static_cast<int>(k.b.role), k.b.index);
    };
    return t(*this) < t(o);
  }
};

struct PairState {
  PairRepresentation rep;
  double sim_g = 0.0;
  std::optional<double> sim_s;
  double up_g = 0.0;
  double up_s = 0.0;
};

// Scores every distinct (anchor, other) pair once, accumulates hinge terms
// and, when `grad` is non-empty, upstream derivatives per pair.
LossTerms evaluate_batch(const VerifierModel& model, const TripletBatch& batch, const DatasetBundle& bundle,
                         std::span<double> grad) {
  std::map<PairKey, PairState> cache;
  auto state_for = [&](const RecordRef& a, const RecordRef& b) -> PairState& {
    auto [it, inserted] = cache.try_emplace(PairKey{a, b});
    if (inserted) {
      auto& st = it->second;
      st.rep = make_pair_representation(bundle.resolve(a), bundle.resolve(b));
      st.sim_g = score_global(model, st.rep);
      if (model.has_part_head() && st.rep.any_joint_present()) st.sim_s = score_part(model, st.rep).sim_s;
    }
    return it->second;
  };

  const double m = model.hyper().margin;
  LossTerms loss;
  for (const auto& t : batch.triplets) {
    PairState& pos = state_for(t.anchor, t.positive);
    PairState& neg = state_for(t.anchor, t.negative);
    const double hg = triplet_hinge(pos.sim_g, neg.sim_g, m);
    loss.global += hg;
    if (hg > 0.0) {
      pos.up_g -= 1.0;
      neg.up_g += 1.0;
    }
    if (pos.sim_s && neg.sim_s) {
      const double hp = triplet_hinge(*pos.sim_s, *neg.sim_s, m);
      loss.part += hp;
      if (hp > 0.0) {
        pos.up_s -= 1.0;
        neg.up_s += 1.0;
      }
    }
  }
  loss.total = loss.global + loss.part;

  if (!grad.empty()) {
    for (auto& [key, st] : cache) {
      if (st.up_g != 0.0) score_global_backward(model, st.rep, st.up_g, grad);
      if (st.up_s != 0.0) score_part_backward(model, st.rep, st.up_s, grad);
    }
  }
  return loss;
}

}  // namespace

LossTerms batch_loss(const VerifierModel& model, const TripletBatch& batch, const DatasetBundle& bundle) {
  return evaluate_batch(model, batch, bundle, {});
}

LossTerms batch_loss_and_gradient(const VerifierModel& model, const TripletBatch& batch,
                                  const DatasetBundle& bundle, std::span<double> grad) {
  if (grad.size() != model.parameters().size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient buffer size does not match parameter count");
  }
  return evaluate_batch(model, batch, bundle, grad);
}

double validation_rank1(const VerifierModel& model, const PairSet& valid_pairs, const DatasetBundle& bundle,
                        const TrainOptions& options) {
  // Queries with an eligible positive anywhere in the gallery role.
  auto gallery = bundle.split(options.valid_gallery_role);
  auto has_positive = [&](const ImageRecord& q) {
    return std::any_of(gallery.begin(), gallery.end(), [&](const ImageRecord& g) {
      return g.identity == q.identity && g.cloth != q.cloth;
    });
  };

  std::map<std::size_t, std::vector<const LabeledPair*>> by_query;
  for (const auto& p : valid_pairs.pairs) {
    if (p.query.role == options.valid_query_role) by_query[p.query.index].push_back(&p);
  }
  std::size_t denominator = 0;
  for (const auto& q : bundle.split(options.valid_query_role)) denominator += has_positive(q) ? 1 : 0;
  if (denominator == 0) return std::numeric_limits<double>::quiet_NaN();

  VerifierScorer scorer(model);
  std::size_t hits = 0;
  for (auto& [qi, list] : by_query) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
    const auto& query = bundle.resolve({options.valid_query_role, qi});
    if (!has_positive(query) || list.empty()) continue;
    CandidateList order;
    order.query_index = qi;
    for (const auto* p : list) order.entries.push_back({p->candidate.index, p->score});
    const auto scores = score_top_candidates(query, gallery, order, options.window_Q, scorer);
    std::vector<std::size_t> positions(list.size());
    std::iota(positions.begin(), positions.end(), 0);
    const auto reranked = window_rerank(positions, scores, options.window_L, options.window_Q);
    if (list[reranked.front()]->label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(denominator);
}

TrainResult train(const VerifierModel& initial, const PairSet& train_pairs, const PairSet& valid_pairs,
                  const DatasetBundle& bundle, const TrainOptions& options) {
  std::vector<AnchorGroup> groups;
  for (auto& g : group_by_anchor(train_pairs)) {
    if (!g.positives.empty() && !g.negatives.empty()) groups.push_back(std::move(g));
  }
  if (groups.empty()) throw Error(ErrorCode::kNoValidAnchors, "training pairs hold no anchor with both polarities");

  const VerifierHyper& hyper = initial.hyper();
  const std::size_t batch_size = std::max<std::size_t>(1, hyper.batch_size);
  const TripletBatch all_triplets = make_triplets(groups);

  TrainResult result;
  VerifierModel model = initial;

  auto record_epoch = [&](std::size_t epoch) {
    const LossTerms loss = batch_loss(model, all_triplets, bundle);
    if (!std::isfinite(loss.total) || !model.all_finite()) {
      throw Error(ErrorCode::kDivergence, "non-finite loss or weights after epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, loss.total, loss.global, loss.part, validation_rank1(model, valid_pairs, bundle, options)};
    result.history.push_back(rec);
    return rec;
  };

  record_epoch(0);
  double best_rank1 = -1.0;
  Rng rng(initial.seed() ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.parameters().size());

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const double lr = hyper.learning_rate * learning_rate_scale(epoch);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<AnchorGroup> chunk;
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) chunk.push_back(groups[order[i]]);
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossTerms loss = batch_loss_and_gradient(model, make_triplets(chunk), bundle, grad);
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorCode::kDivergence, "non-finite batch loss in epoch " + std::to_string(epoch));
      }
      auto params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    }
    const EpochRecord rec = record_epoch(epoch);
    const double rank1 = std::isnan(rec.valid_rank1) ? 0.0 : rec.valid_rank1;
    if (rank1 > best_rank1 || (std::isnan(rec.valid_rank1) && epoch == hyper.epochs)) {
      best_rank1 = rank1;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  if (hyper.epochs == 0) {
    result.model = model;
    result.best_epoch = 0;
  }
  result.model.round_to_float();
  return result;
}

void save_model(const VerifierModel& model, const std::filesystem::path& path) {
  const auto& s = model.shape();
  const auto& h = model.hyper();
  detail::ByteWriter out;
  out.put_bytes(kModelMagic);
  for (std::size_t v : {s.D, s.Dp, s.K, s.hidden_global, s.hidden_part}) out.put_u32(static_cast<std::uint32_t>(v));
  out.put_u64(model.seed());
  out.put_u64(std::bit_cast<std::uint64_t>(h.margin));
  out.put_u64(std::bit_cast<std::uint64_t>(h.learning_rate));
  out.put_u32(static_cast<std::uint32_t>(h.epochs));
  out.put_u32(static_cast<std::uint32_t>(h.batch_size));
  for (double w : model.parameters()) out.put_f32(static_cast<float>(w));
  out.write_to(path);
}

VerifierModel load_model(const std::filesystem::path& path) {
  auto in = detail::ByteReader::from_file(path);
  in.expect_magic(kModelMagic);
  VerifierShape s;
  s.D = in.get_u32();
  s.Dp = in.get_u32();
  s.K = in.get_u32();
  s.hidden_global = in.get_u32();
  s.hidden_part = in.get_u32();
  const std::uint64_t seed = in.get_u64();
  VerifierHyper h;
  h.margin = std::bit_cast<double>(in.get_u64());
  h.learning_rate = std::bit_cast<double>(in.get_u64());
  h.epochs = in.get_u32();
  h.batch_size = in.get_u32();
  VerifierModel model = VerifierModel::zeros(s, h, seed);
  auto params = model.parameters();
  in.require(params.size() * 4);
  for (double& w : params) w = in.get_f32();
  in.expect_end();
  if (!model.all_finite()) throw Error(ErrorCode::kNonFinite, path.string() + ": non-finite weight");
  return model;
}

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path,
                       std::span<const std::string> comments) {
  auto out = detail::open_for_write(path);
  for (const auto& c : comments) out << (c.starts_with("#") ? "" : "# ") << c << '\n';
  out << kHistoryHeader << '\n';
  for (const auto& r : history) {
    out << r.epoch << ',' << format_real(r.loss) << ',' << format_real(r.loss_global) << ','
        << format_real(r.loss_part) << ',' << format_real(r.valid_rank1) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

PairScores VerifierScorer::score(const ImageRecord& query, const ImageRecord& candidate) const {
  const PairRepresentation rep = make_pair_representation(query, candidate);
  PairScores out;
  out.global = score_global(*model_, rep);
  if (model_->has_part_head() && rep.any_joint_present()) out.specialized = score_part(*model_, rep).sim_s;
  return out;
}

}  // namespace rvrank
