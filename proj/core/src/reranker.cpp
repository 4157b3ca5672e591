// SPDX-License-Identifier: Apache-2.0
#include "rvrank/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvrank/parallel.hpp"
#include "text_util.hpp"

namespace rvrank {

namespace {

constexpr std::string_view kRankedHeader = "query_index,rank,gallery_index,stage_provenance";

}  // namespace

RankingConfig RankingConfig::clamped() const {
  if (P == 0 || L == 0 || Q == 0 || k1 == 0 || k2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "P, L, Q, k1, k2 must all be >= 1");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  }
  if (margin < 0.0) throw Error(ErrorCode::kInvalidArgument, "margin must be >= 0");
  RankingConfig out = *this;
  if (out.Q > out.P) {
    warn("Q=" + std::to_string(out.Q) + " exceeds P=" + std::to_string(out.P) + "; clamping Q to P");
    out.Q = out.P;
  }
  if (out.L > out.Q) {
    warn("L=" + std::to_string(out.L) + " exceeds Q=" + std::to_string(out.Q) + "; clamping L to Q");
    out.L = out.Q;
  }
  return out;
}

std::string_view rank_provenance_name(RankProvenance p) {
  switch (p) {
    case RankProvenance::kRetrieval:
      return "retrieval";
    case RankProvenance::kWindow:
      return "window";
    case RankProvenance::kKReciprocal:
      return "kreciprocal";
    case RankProvenance::kComposed:
      return "composed";
  }
  return "?";
}

std::optional<RankProvenance> parse_rank_provenance(std::string_view token) {
  for (auto p : {RankProvenance::kRetrieval, RankProvenance::kWindow, RankProvenance::kKReciprocal,
                 RankProvenance::kComposed}) {
    if (rank_provenance_name(p) == token) return p;
  }
  return std::nullopt;
}

std::vector<std::size_t> window_rerank(std::span<const std::size_t> retrieval_order,
                                       std::span<const double> scores, std::size_t L, std::size_t Q) {
  if (L == 0) throw Error(ErrorCode::kInvalidArgument, "window size L must be >= 1");
  const std::size_t n = retrieval_order.size();
  const std::size_t top = std::min(Q, n);
  if (scores.size() < top) {
    throw Error(ErrorCode::kMissingScore, "missing score for retrieval position " + std::to_string(scores.size()));
  }
  for (std::size_t i = 0; i < top; ++i) {
    if (std::isnan(scores[i])) {
      throw Error(ErrorCode::kMissingScore, "missing score for retrieval position " + std::to_string(i));
    }
  }

  std::vector<std::size_t> out;
  out.reserve(n);
  // Window holds retrieval positions, kept in ascending order so the first
  // maximum found is also the best-ranked one.
  std::vector<std::size_t> window;
  std::size_t next = std::min(L, top);
  for (std::size_t i = 0; i < next; ++i) window.push_back(i);
  while (!window.empty()) {
    std::size_t best = 0;
    for (std::size_t w = 1; w < window.size(); ++w) {
      if (scores[window[w]] > scores[window[best]]) best = w;
    }
    out.push_back(retrieval_order[window[best]]);
    window.erase(window.begin() + static_cast<std::ptrdiff_t>(best));
    if (next < top) window.push_back(next++);
  }
  for (std::size_t i = top; i < n; ++i) out.push_back(retrieval_order[i]);
  return out;
}

DistanceMatrix kreciprocal_prepare(const DistanceMatrix& union_dist) {
  const std::size_t n = union_dist.rows();
  DistanceMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double col_max = 0.0;
    for (std::size_t k = 0; k < n; ++k) col_max = std::max(col_max, union_dist(k, i) * union_dist(k, i));
    for (std::size_t j = 0; j < n; ++j) {
      const double sq = union_dist(j, i) * union_dist(j, i);
      out(i, j) = col_max > 0.0 ? sq / col_max : 0.0;
    }
  }
  return out;
}

namespace {

// Indices of row i sorted by distance, ties by index.
std::vector<std::vector<std::size_t>> initial_ranks(const DistanceMatrix& dist) {
  const std::size_t n = dist.rows();
  std::vector<std::vector<std::size_t>> ranks(n);
  parallel_for(n, [&](std::size_t i) {
    auto& r = ranks[i];
    r.resize(n);
    std::iota(r.begin(), r.end(), 0);
    std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) { return dist(i, a) < dist(i, b); });
  });
  return ranks;
}

// k-reciprocal neighbours of `i`: members j of i's first k+1 ranks whose
// own first k+1 ranks contain i. Result is in i's rank order.
std::vector<std::size_t> reciprocal_set(const std::vector<std::vector<std::size_t>>& ranks, std::size_t i,
                                        std::size_t k) {
  const std::size_t width = std::min(k + 1, ranks[i].size());
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < width; ++a) {
    const std::size_t j = ranks[i][a];
    const auto& rj = ranks[j];
    if (std::find(rj.begin(), rj.begin() + static_cast<std::ptrdiff_t>(std::min(k + 1, rj.size())), i) !=
        rj.begin() + static_cast<std::ptrdiff_t>(std::min(k + 1, rj.size()))) {
      out.push_back(j);
    }
  }
  return out;
}

struct SparseVec {
  std::vector<std::size_t> index;  // ascending
  std::vector<double> value;
};

}  // namespace

KReciprocalResult kreciprocal_rerank(const DistanceMatrix& union_dist, std::size_t num_queries, std::size_t k1,
                                     std::size_t k2, double lambda) {
  const std::size_t n = union_dist.rows();
  if (union_dist.cols() != n) throw Error(ErrorCode::kInvalidArgument, "k-reciprocal input must be square");
  if (num_queries > n) throw Error(ErrorCode::kInvalidArgument, "num_queries exceeds matrix size");
  for (std::size_t i = 0; i < n; ++i) {
    if (union_dist(i, i) != 0.0) throw Error(ErrorCode::kInvalidArgument, "k-reciprocal input needs a zero diagonal");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  if (k1 == 0 || k2 == 0) throw Error(ErrorCode::kInvalidArgument, "k1 and k2 must be >= 1");
  if (n > 0 && k1 + 1 > n) {
    warn("k1=" + std::to_string(k1) + " exceeds set size " + std::to_string(n) + "; clamping");
    k1 = n - 1;
  }
  if (n > 0 && k2 > n) {
    warn("k2=" + std::to_string(k2) + " exceeds set size " + std::to_string(n) + "; clamping");
    k2 = n;
  }
  const std::size_t num_gallery = n - num_queries;

  const auto ranks = initial_ranks(union_dist);
  const std::size_t half_k1 = static_cast<std::size_t>(std::nearbyint(static_cast<double>(k1) / 2.0));

  // Gaussian-weighted encoding over the expanded reciprocal set.
  std::vector<SparseVec> V(n);
  parallel_for(n, [&](std::size_t i) {
    const auto base = reciprocal_set(ranks, i, k1);
    std::vector<std::size_t> expanded = base;
    std::vector<std::size_t> base_sorted = base;
    std::sort(base_sorted.begin(), base_sorted.end());
    for (std::size_t candidate : base) {
      const auto cand_set = reciprocal_set(ranks, candidate, half_k1);
      std::size_t overlap = 0;
      for (std::size_t c : cand_set) overlap += std::binary_search(base_sorted.begin(), base_sorted.end(), c) ? 1 : 0;
      if (static_cast<double>(overlap) > 2.0 / 3.0 * static_cast<double>(cand_set.size())) {
        expanded.insert(expanded.end(), cand_set.begin(), cand_set.end());
      }
    }
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());
    double total = 0.0;
    std::vector<double> w(expanded.size());
    for (std::size_t a = 0; a < expanded.size(); ++a) {
      w[a] = std::exp(-union_dist(i, expanded[a]));
      total += w[a];
    }
    for (double& x : w) x /= total;
    V[i] = {std::move(expanded), std::move(w)};
  });

  // Local query expansion: average the encodings of the k2 nearest.
  if (k2 != 1) {
    std::vector<SparseVec> expanded(n);
    parallel_for(n, [&](std::size_t i) {
      std::vector<double> dense(n, 0.0);
      for (std::size_t a = 0; a < k2; ++a) {
        const auto& v = V[ranks[i][a]];
        for (std::size_t t = 0; t < v.index.size(); ++t) dense[v.index[t]] += v.value[t];
      }
      auto& out = expanded[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (dense[j] != 0.0) {
          out.index.push_back(j);
          out.value.push_back(dense[j] / static_cast<double>(k2));
        }
      }
    });
    V = std::move(expanded);
  }

  // Inverted index: for each column, the rows with a nonzero entry.
  std::vector<std::vector<std::pair<std::size_t, double>>> inverted(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < V[i].index.size(); ++t) inverted[V[i].index[t]].emplace_back(i, V[i].value[t]);
  }

  KReciprocalResult result{DistanceMatrix(num_queries, num_gallery), DistanceMatrix(num_queries, num_gallery)};
  parallel_for(num_queries, [&](std::size_t q) {
    std::vector<double> shared(n, 0.0);
    const auto& vq = V[q];
    for (std::size_t t = 0; t < vq.index.size(); ++t) {
      for (const auto& [row, value] : inverted[vq.index[t]]) shared[row] += std::min(vq.value[t], value);
    }
    for (std::size_t g = 0; g < num_gallery; ++g) {
      const double s = shared[num_queries + g];
      const double jac = 1.0 - s / (2.0 - s);
      result.jaccard(q, g) = jac;
      result.final_dist(q, g) = jac * (1.0 - lambda) + union_dist(q, num_queries + g) * lambda;
    }
  });
  return result;
}

RankProvenance Stages::provenance() const {
  if (kreciprocal && window) return RankProvenance::kComposed;
  if (kreciprocal) return RankProvenance::kKReciprocal;
  if (window) return RankProvenance::kWindow;
  return RankProvenance::kRetrieval;
}

std::optional<Stages> parse_stages(std::string_view token) {
  if (token == "none" || token.empty()) return Stages{};
  if (token == "both") return Stages{true, true};
  Stages s;
  for (auto part : detail::split_csv(token)) {
    if (part == "kreciprocal") {
      s.kreciprocal = true;
    } else if (part == "window") {
      s.window = true;
    } else {
      return std::nullopt;
    }
  }
  return s;
}

std::string stages_name(const Stages& stages) {
  if (stages.kreciprocal && stages.window) return "both";
  if (stages.kreciprocal) return "kreciprocal";
  if (stages.window) return "window";
  return "none";
}

std::vector<double> score_top_candidates(const ImageRecord& query, std::span<const ImageRecord> gallery,
                                         const CandidateList& order, std::size_t Q, const PairScorer& scorer,
                                         bool* used_fallback) {
  const std::size_t top = std::min(Q, order.entries.size());
  std::vector<PairScores> raw;
  raw.reserve(top);
  for (std::size_t i = 0; i < top; ++i) raw.push_back(scorer.score(query, gallery[order.entries[i].gallery_index]));
  const bool fallback = std::any_of(raw.begin(), raw.end(), [](const PairScores& s) { return !s.specialized; });
  if (used_fallback) *used_fallback = fallback && top > 0;
  std::vector<double> scores(top);
  for (std::size_t i = 0; i < top; ++i) scores[i] = fallback ? raw[i].global : *raw[i].specialized;
  return scores;
}

std::vector<RankedList> window_stage(std::span<const ImageRecord> queries, std::span<const ImageRecord> gallery,
                                     std::span<const CandidateList> orders, const PairScorer& scorer,
                                     const RankingConfig& config, RankProvenance provenance, PipelineStats* stats) {
  std::vector<RankedList> out(orders.size());
  std::vector<std::size_t> calls(orders.size(), 0);
  std::vector<char> fallback(orders.size(), 0);
  parallel_for(orders.size(), [&](std::size_t i) {
    const auto& order = orders[i];
    bool used_fallback = false;
    const auto scores =
        score_top_candidates(queries[order.query_index], gallery, order, config.Q, scorer, &used_fallback);
    calls[i] = scores.size();
    fallback[i] = used_fallback ? 1 : 0;
    std::vector<std::size_t> ids(order.entries.size());
    for (std::size_t r = 0; r < ids.size(); ++r) ids[r] = order.entries[r].gallery_index;
    try {
      out[i] = {order.query_index, window_rerank(ids, scores, config.L, config.Q), provenance};
    } catch (const Error& e) {
      throw Error(e.code(), "query " + std::to_string(order.query_index) + ": " + e.what());
    }
  });
  if (stats) {
    stats->scorer_calls = calls;
    stats->total_scorer_calls = std::accumulate(calls.begin(), calls.end(), std::size_t{0});
    stats->fallback_queries = static_cast<std::size_t>(std::count(fallback.begin(), fallback.end(), 1));
  }
  return out;
}

std::vector<CandidateList> retrieval_orders(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                                            Metric metric, const RankingConfig& config, bool kreciprocal) {
  auto queries = bundle.split(query_role);
  auto gallery = bundle.split(gallery_role);
  if (gallery.empty()) throw Error(ErrorCode::kEmptyInput, "empty gallery");
  if (!kreciprocal) return rank_eligible(queries, gallery, distance_matrix(queries, gallery, metric));

  std::vector<ImageRecord> all(queries.begin(), queries.end());
  all.insert(all.end(), gallery.begin(), gallery.end());
  const DistanceMatrix prepared = kreciprocal_prepare(distance_matrix(all, all, metric));
  const auto result = kreciprocal_rerank(prepared, queries.size(), config.k1, config.k2, config.lambda);
  return rank_eligible(queries, gallery, result.final_dist);
}

std::vector<RankedList> rerank_pipeline(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                                        Metric metric, const PairScorer* scorer, const RankingConfig& config,
                                        const Stages& stages, PipelineStats* stats) {
  const RankingConfig cfg = config.clamped();
  const auto orders = retrieval_orders(bundle, query_role, gallery_role, metric, cfg, stages.kreciprocal);
  const RankProvenance provenance = stages.provenance();
  if (stages.window) {
    if (!scorer) throw Error(ErrorCode::kInvalidArgument, "window stage requires a scorer");
    return window_stage(bundle.split(query_role), bundle.split(gallery_role), orders, *scorer, cfg, provenance,
                        stats);
  }
  std::vector<RankedList> out;
  out.reserve(orders.size());
  for (const auto& o : orders) {
    RankedList list{o.query_index, {}, provenance};
    list.order.reserve(o.entries.size());
    for (const auto& e : o.entries) list.order.push_back(e.gallery_index);
    out.push_back(std::move(list));
  }
  if (stats) *stats = PipelineStats{std::vector<std::size_t>(out.size(), 0), 0, 0};
  return out;
}

void write_ranked_csv(std::span<const RankedList> lists, const std::filesystem::path& path,
                      std::span<const std::string> comments) {
  auto out = detail::open_for_write(path);
  for (const auto& c : comments) out << (c.starts_with("#") ? "" : "# ") << c << '\n';
  out << kRankedHeader << '\n';
  for (const auto& list : lists) {
    const auto prov = rank_provenance_name(list.provenance);
    for (std::size_t r = 0; r < list.order.size(); ++r) {
      out << list.query_index << ',' << r + 1 << ',' << list.order[r] << ',' << prov << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<RankedList> read_ranked_csv(const std::filesystem::path& path) {
  detail::CsvReader csv(path);
  csv.expect_header(kRankedHeader);
  std::vector<RankedList> lists;
  while (auto row = csv.next_row(4)) {
    const auto& f = *row;
    auto q = detail::parse_int<std::size_t>(f[0]);
    auto rank = detail::parse_int<std::size_t>(f[1]);
    auto g = detail::parse_int<std::size_t>(f[2]);
    auto prov = parse_rank_provenance(f[3]);
    if (!q || !rank || !g || !prov) csv.fail("malformed ranked-list row");
    if (lists.empty() || lists.back().query_index != *q) {
      lists.push_back({*q, {}, *prov});
    }
    auto& list = lists.back();
    if (*rank != list.order.size() + 1) csv.fail("rank out of sequence for query " + std::to_string(*q));
    list.order.push_back(*g);
  }
  return lists;
}

}  // namespace rvrank
