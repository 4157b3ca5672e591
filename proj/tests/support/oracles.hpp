// SPDX-License-Identifier: Apache-2.0
// Reference implementations used only by tests. Each one is written
// directly from the formulas with plain loops and shares no code with the
// library beyond the record types.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rvrank/datastore.hpp"
#include "rvrank/rng.hpp"
#include "rvrank/verifier.hpp"

namespace rvrank::testing {

using Dense = std::vector<std::vector<double>>;

double ref_euclidean(std::span<const float> a, std::span<const float> b);
double ref_cosine_distance(std::span<const float> a, std::span<const float> b);

/// Eligible gallery indices for `query`, sorted by (distance, index).
std::vector<std::size_t> ref_sorted_eligible(const ImageRecord& query, std::span<const ImageRecord> gallery,
                                             Metric metric);

/// Window procedure simulated on an explicit list.
std::vector<std::size_t> ref_window(const std::vector<std::size_t>& order, const std::vector<double>& scores,
                                    std::size_t L, std::size_t Q);

struct RefMetrics {
  std::vector<double> cmc;
  double map = 0.0;
  double auc = 0.0;
  std::size_t evaluated = 0;
};

/// CMC/AP from labels: `relevant[q][r]` says whether rank r+1 of query q is
/// a true match. Queries with no relevant entry are skipped.
RefMetrics ref_metrics(const std::vector<std::vector<bool>>& relevant, std::size_t k_max);

struct RefKReciprocal {
  Dense final_dist;
  Dense jaccard;
};

/// Dense k-reciprocal re-ranking over an already conditioned union matrix.
RefKReciprocal ref_kreciprocal(const Dense& dist, std::size_t num_queries, std::size_t k1, std::size_t k2,
                               double lambda);

/// sim_G and (if any joint part) sim_S recomputed from the flat parameters.
struct RefScores {
  double global = 0.0;
  bool has_part = false;
  double part = 0.0;
};
RefScores ref_verifier(const VerifierModel& model, const ImageRecord& q, const ImageRecord& g);

/// L_g, L_p by looping over every triplet with fresh forward passes.
std::pair<double, double> ref_loss(const VerifierModel& model, const TripletBatch& batch,
                                   const DatasetBundle& bundle);

struct RandomBundleSpec {
  std::size_t n_train = 0;
  std::size_t n_query = 4;
  std::size_t n_gallery = 12;
  std::size_t n_valid_query = 2;
  std::size_t n_valid_gallery = 6;
  std::uint32_t identities = 5;
  std::uint32_t clothes = 2;
  std::size_t D = 4;
  std::size_t Dp = 3;
  std::size_t K = 4;
  double part_presence = 0.8;
};

/// Bundle with random labels and standard-normal features in every role.
DatasetBundle random_bundle(Rng& rng, const RandomBundleSpec& spec);

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace rvrank::testing
