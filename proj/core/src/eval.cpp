// SPDX-License-Identifier: Apache-2.0
#include "rvrank/eval.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "text_util.hpp"

namespace rvrank {

namespace {

struct QueryMetrics {
  std::optional<std::size_t> first_hit;
  double ap = 0.0;
};

QueryMetrics score_list(std::span<const std::size_t> order, std::span<const ImageRecord> gallery,
                        const ImageRecord& query, std::size_t positives) {
  QueryMetrics m;
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t r = 0; r < order.size() && hits < positives; ++r) {
    if (gallery[order[r]].identity != query.identity) continue;
    ++hits;
    if (!m.first_hit) m.first_hit = r + 1;
    precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  m.ap = positives ? precision_sum / static_cast<double>(positives) : 0.0;
  return m;
}

}  // namespace

EvalReport evaluate(std::span<const RankedList> ranked, const DatasetBundle& bundle, Role query_role,
                    Role gallery_role, std::size_t k_max) {
  if (k_max == 0) throw Error(ErrorCode::kInvalidArgument, "k_max must be >= 1");
  auto queries = bundle.split(query_role);
  auto gallery = bundle.split(gallery_role);
  if (ranked.size() != queries.size()) {
    throw Error(ErrorCode::kNotPermutation, "expected one ranked list per query: got " +
                                                std::to_string(ranked.size()) + " lists for " +
                                                std::to_string(queries.size()) + " queries");
  }

  EvalReport report;
  report.cmc.assign(k_max, 0.0);
  std::vector<char> seen_query(queries.size(), 0);
  std::vector<char> seen(gallery.size());
  std::vector<std::size_t> hit_counts(k_max, 0);
  double ap_sum = 0.0;

  for (const auto& list : ranked) {
    const std::size_t qi = list.query_index;
    if (qi >= queries.size() || seen_query[qi]) {
      throw Error(ErrorCode::kNotPermutation, "ranked list for query " + std::to_string(qi) +
                                                  " is out of range or duplicated");
    }
    seen_query[qi] = 1;
    const auto& query = queries[qi];

    std::size_t eligible = 0;
    std::size_t positives = 0;
    for (const auto& g : gallery) {
      if (query.same_identity_and_cloth(g)) continue;
      ++eligible;
      positives += g.identity == query.identity ? 1 : 0;
    }
    std::fill(seen.begin(), seen.end(), 0);
    bool ok = list.order.size() == eligible;
    for (std::size_t gi : list.order) {
      if (!ok) break;
      ok = gi < gallery.size() && !seen[gi] && !query.same_identity_and_cloth(gallery[gi]);
      if (ok) seen[gi] = 1;
    }
    if (!ok) {
      throw Error(ErrorCode::kNotPermutation,
                  "ranked list for query " + std::to_string(qi) + " is not a permutation of its eligible gallery");
    }

    QueryEval qe;
    qe.query_index = qi;
    if (positives == 0) {
      qe.excluded = true;
      ++report.excluded_queries;
      report.per_query.push_back(qe);
      continue;
    }
    const QueryMetrics m = score_list(list.order, gallery, query, positives);
    qe.first_hit_rank = m.first_hit;
    qe.average_precision = m.ap;
    ++report.evaluated_queries;
    ap_sum += m.ap;
    for (std::size_t k = *m.first_hit; k <= k_max; ++k) ++hit_counts[k - 1];
    report.per_query.push_back(qe);
  }

  std::sort(report.per_query.begin(), report.per_query.end(),
            [](const QueryEval& a, const QueryEval& b) { return a.query_index < b.query_index; });
  if (report.evaluated_queries > 0) {
    const double n = static_cast<double>(report.evaluated_queries);
    for (std::size_t k = 0; k < k_max; ++k) report.cmc[k] = static_cast<double>(hit_counts[k]) / n;
    report.map_score = ap_sum / n;
  }
  report.auc = std::accumulate(report.cmc.begin(), report.cmc.end(), 0.0) / static_cast<double>(k_max);
  return report;
}

std::string eval_report_json(const EvalReport& report, const std::string& config_json) {
  nlohmann::ordered_json j;
  if (!config_json.empty()) j["config"] = nlohmann::ordered_json::parse(config_json);
  j["cmc"] = report.cmc;
  j["map"] = report.map_score;
  j["auc"] = report.auc;
  j["evaluated_queries"] = report.evaluated_queries;
  j["excluded_queries"] = report.excluded_queries;
  return j.dump(2) + "\n";
}

void write_per_query_csv(const EvalReport& report, const std::filesystem::path& path,
                         std::span<const std::string> comments) {
  auto out = detail::open_for_write(path);
  for (const auto& c : comments) out << (c.starts_with("#") ? "" : "# ") << c << '\n';
  out << "query_index,excluded,first_hit_rank,average_precision\n";
  for (const auto& q : report.per_query) {
    out << q.query_index << ',' << (q.excluded ? 1 : 0) << ','
        << (q.first_hit_rank ? std::to_string(*q.first_hit_rank) : std::string()) << ','
        << format_real(q.average_precision) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

SweepResult sweep_L(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                    std::span<const CandidateList> orders, const PairScorer& scorer,
                    std::span<const std::size_t> L_values, std::size_t Q) {
  if (Q == 0) throw Error(ErrorCode::kInvalidArgument, "Q must be >= 1");
  auto queries = bundle.split(query_role);
  auto gallery = bundle.split(gallery_role);

  SweepResult result;
  std::vector<std::vector<double>> scores(orders.size());
  std::vector<std::vector<std::size_t>> ids(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    scores[i] = score_top_candidates(queries[orders[i].query_index], gallery, orders[i], Q, scorer);
    result.scorer_calls += scores[i].size();
    for (const auto& e : orders[i].entries) ids[i].push_back(e.gallery_index);
  }

  const std::size_t k_max = 10;
  for (std::size_t L : L_values) {
    std::vector<RankedList> lists;
    lists.reserve(orders.size());
    for (std::size_t i = 0; i < orders.size(); ++i) {
      lists.push_back({orders[i].query_index, window_rerank(ids[i], scores[i], L, Q), RankProvenance::kWindow});
    }
    const EvalReport report = evaluate(lists, bundle, query_role, gallery_role, k_max);
    result.rows.push_back({L, report.rank(1), report.rank(10)});
  }

  std::optional<double> reference;
  for (const auto& row : result.rows) {
    if (row.L + 10 <= Q) continue;
    if (!reference) {
      reference = row.rank10;
      result.rank10_flat_beyond_threshold = true;
    } else if (row.rank10 != *reference) {
      result.rank10_flat_beyond_threshold = false;
    }
  }
  return result;
}

}  // namespace rvrank
