// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvrank/datastore.hpp"
#include "rvrank/reranker.hpp"
#include "rvrank/scorer.hpp"

namespace rvrank {

struct QueryEval {
  std::size_t query_index = 0;
  bool excluded = false;                     // no eligible positive in the gallery
  std::optional<std::size_t> first_hit_rank;  // 1-based
  double average_precision = 0.0;
};

struct EvalReport {
  std::vector<double> cmc;  // cmc[k-1] = rank-k accuracy, k = 1..k_max
  double map_score = 0.0;
  double auc = 0.0;         // mean of cmc over k = 1..k_max
  std::size_t evaluated_queries = 0;
  std::size_t excluded_queries = 0;
  std::vector<QueryEval> per_query;

  double rank(std::size_t k) const { return cmc.at(k - 1); }
};

/// Cross-clothes CMC / mAP / AUC. Every ranked list must be a permutation
/// of its query's eligible gallery (same identity and same cloth removed),
/// with one list per query; otherwise throws kNotPermutation.
EvalReport evaluate(std::span<const RankedList> ranked, const DatasetBundle& bundle, Role query_role,
                    Role gallery_role, std::size_t k_max);

/// JSON object with `cmc`, `map`, `auc`, `excluded_queries`,
/// `evaluated_queries`, plus `config` when `config_json` is non-empty.
std::string eval_report_json(const EvalReport& report, const std::string& config_json = {});

void write_per_query_csv(const EvalReport& report, const std::filesystem::path& path,
                         std::span<const std::string> comments = {});

struct SweepRow {
  std::size_t L = 0;
  double rank1 = 0.0;
  double rank10 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t scorer_calls = 0;
  /// rank-10 is the same for every swept L > Q - 10; empty if no such L.
  std::optional<bool> rank10_flat_beyond_threshold;
};

/// Window re-ranking at each L with Q fixed. The scorer is invoked once per
/// top-Q candidate and its scores are reused across L values.
SweepResult sweep_L(const DatasetBundle& bundle, Role query_role, Role gallery_role,
                    std::span<const CandidateList> orders, const PairScorer& scorer,
                    std::span<const std::size_t> L_values, std::size_t Q);

}  // namespace rvrank
