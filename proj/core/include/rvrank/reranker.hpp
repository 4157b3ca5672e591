// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvrank/datastore.hpp"
#include "rvrank/retrieval.hpp"
#include "rvrank/scorer.hpp"

namespace rvrank {

struct RankingConfig {
  std::size_t P = kDefaultCandidateCount;
  std::size_t L = 10;
  std::size_t Q = 20;
  double margin = 0.3;
  std::size_t k1 = 20;
  std::size_t k2 = 6;
  double lambda = 0.3;

  /// Copy with L <= Q <= P enforced (clamped, with a warning). Throws
  /// kInvalidArgument for zero counts or lambda outside [0, 1].
  RankingConfig clamped() const;
};

enum class RankProvenance { kRetrieval, kWindow, kKReciprocal, kComposed };

std::string_view rank_provenance_name(RankProvenance p);
std::optional<RankProvenance> parse_rank_provenance(std::string_view token);

struct RankedList {
  std::size_t query_index = 0;
  std::vector<std::size_t> order;  // gallery indices, best first
  RankProvenance provenance = RankProvenance::kRetrieval;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Windowed ranking over the top Q of a retrieval order.
///
/// The window starts as the first L entries. Each step emits the window
/// entry with the highest score (ties go to the better retrieval rank) and
/// refills the window with the next unconsumed entry among the first Q.
/// After Q emissions the remaining entries follow in retrieval order.
/// `scores[i]` belongs to `retrieval_order[i]` and must be present for the
/// first min(Q, n) positions.
std::vector<std::size_t> window_rerank(std::span<const std::size_t> retrieval_order,
                                       std::span<const double> scores, std::size_t L, std::size_t Q);

/// Squares and column-normalizes a union distance matrix, transposed, which
/// is the usual input conditioning for k-reciprocal encoding.
DistanceMatrix kreciprocal_prepare(const DistanceMatrix& union_dist);

struct KReciprocalResult {
  DistanceMatrix final_dist;  // queries x gallery
  DistanceMatrix jaccard;     // queries x gallery
};

/// k-reciprocal re-ranking on an (n_query + n_gallery) square matrix whose
/// first `num_queries` rows/columns are the queries. k1/k2 larger than the
/// set are clamped with a warning.
KReciprocalResult kreciprocal_rerank(const DistanceMatrix& union_dist, std::size_t num_queries,
                                     std::size_t k1, std::size_t k2, double lambda);

struct Stages {
  bool kreciprocal = false;
  bool window = false;

  RankProvenance provenance() const;
};

/// Accepts none | kreciprocal | window | both (or a comma list of the two).
std::optional<Stages> parse_stages(std::string_view token);
std::string stages_name(const Stages& stages);

struct PipelineStats {
  std::vector<std::size_t> scorer_calls;  // per query
  std::size_t total_scorer_calls = 0;
  std::size_t fallback_queries = 0;       // ranked by the global head
};

/// Scores of the top-Q candidates for one query, one scorer call each.
/// Uses the specialized score when every candidate has one, else the
/// global score for all of them.
std::vector<double> score_top_candidates(const ImageRecord& query, std::span<const ImageRecord> gallery,
                                         const CandidateList& order, std::size_t Q, const PairScorer& scorer,
                                         bool* used_fallback = nullptr);

/// Window stage over precomputed full retrieval orders.
std::vector<RankedList> window_stage(std::span<const ImageRecord> queries, std::span<const ImageRecord> gallery,
                                     std::span<const CandidateList> orders, const PairScorer& scorer,
                                     const RankingConfig& config, RankProvenance provenance,
                                     PipelineStats* stats = nullptr);

/// Full eligible retrieval orders for two roles, optionally adjusted by
/// k-reciprocal re-ranking.
std::vector<CandidateList> retrieval_orders(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                                            Metric metric, const RankingConfig& config, bool kreciprocal);

/// Retrieval, then k-reciprocal (if enabled), then the window stage with
/// the scorer (if enabled). `scorer` may be null only without the window
/// stage.
std::vector<RankedList> rerank_pipeline(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                                        Metric metric, const PairScorer* scorer, const RankingConfig& config,
                                        const Stages& stages, PipelineStats* stats = nullptr);

/// CSV `query_index,rank,gallery_index,stage_provenance`.
void write_ranked_csv(std::span<const RankedList> lists, const std::filesystem::path& path,
                      std::span<const std::string> comments = {});
std::vector<RankedList> read_ranked_csv(const std::filesystem::path& path);

}  // namespace rvrank
