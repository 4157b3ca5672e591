// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvrank/common.hpp"
#include "rvrank/datastore.hpp"

namespace rvrank {

inline constexpr std::size_t kDefaultCandidateCount = 20;  // P

/// Dense row-major matrix of query-gallery distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Euclidean distance, or cosine distance 1 - cos(a, b) (a zero vector is at
/// distance 1 from everything). Throws kDimensionMismatch on unequal sizes.
double feature_distance(std::span<const float> a, std::span<const float> b, Metric metric);

DistanceMatrix distance_matrix(std::span<const ImageRecord> queries,
                               std::span<const ImageRecord> gallery, Metric metric);

struct Candidate {
  std::size_t gallery_index = 0;
  double score = 0.0;  // -distance

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Gallery entries for one query, best first; equal scores are ordered by
/// ascending gallery index.
struct CandidateList {
  std::size_t query_index = 0;
  std::vector<Candidate> entries;
};

/// Ranks every eligible gallery entry (same identity and same cloth as the
/// query are excluded) for each query, truncated to `limit` when given.
std::vector<CandidateList> rank_eligible(std::span<const ImageRecord> queries,
                                         std::span<const ImageRecord> gallery,
                                         const DistanceMatrix& dist,
                                         std::optional<std::size_t> limit = std::nullopt);

/// Top-P eligible candidates per query. Throws kEmptyInput for an empty
/// gallery and kInvalidArgument for P == 0.
std::vector<CandidateList> top_candidates(std::span<const ImageRecord> queries,
                                          std::span<const ImageRecord> gallery, std::size_t P,
                                          Metric metric);

enum class PairProvenance { kTrain, kValid, kTest, kCandidates };

std::string_view provenance_name(PairProvenance p);

struct LabeledPair {
  RecordRef query;
  RecordRef candidate;
  std::size_t rank = 0;  // 1-based within the query's list (per polarity for training pairs)
  double score = 0.0;
  bool label = false;    // same identity

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct PairSet {
  PairProvenance provenance = PairProvenance::kTest;
  std::vector<LabeledPair> pairs;
};

/// One pair per (query, candidate) of top_candidates over the two roles.
PairSet build_eval_pairs(Role query_role, Role gallery_role, const DatasetBundle& bundle,
                         std::size_t P, Metric metric);

struct TrainPairReport {
  std::size_t anchors_total = 0;
  std::size_t anchors_kept = 0;
  std::vector<std::size_t> dropped_no_positive;
  std::vector<std::size_t> dropped_no_negative;
};

/// For each training anchor: up to P nearest same-identity/different-cloth
/// positives and up to P nearest different-identity negatives, retrieved
/// from the training split itself. Anchors lacking either are dropped.
PairSet build_train_pairs(const DatasetBundle& bundle, std::size_t P, Metric metric,
                          TrainPairReport* report = nullptr);

/// CSV `query_role,query_index,rank,cand_role,cand_index,score,label`.
void write_pairs_csv(const PairSet& pairs, const std::filesystem::path& path,
                     std::span<const std::string> comments = {});
PairSet read_pairs_csv(const std::filesystem::path& path);

}  // namespace rvrank
