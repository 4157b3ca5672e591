// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rvrank/datastore.hpp"
#include "rvrank/scorer.hpp"

namespace rvrank {

/// Synthetic cloth-changing scenario.
///
/// Identities come in confuser groups that share a general-appearance
/// centroid. Each identity adds a small private offset to it; each cloth
/// adds a shift of length `cloth_shift` in a random direction. Part
/// features carry a planted per-identity detail vector plus noise, so they
/// separate confusers that the global feature cannot.
struct SynthConfig {
  std::size_t n_identities = 160;
  std::size_t clothes_per_identity = 2;
  std::size_t images_per_cloth = 3;
  std::size_t confuser_group_size = 4;
  std::size_t D = 16;
  std::size_t Dp = 8;
  std::size_t K = kDefaultPartCount;
  double group_spread = 3.0;     // std-dev of group centroids, per coordinate
  double identity_spread = 0.25; // std-dev of identity offsets, per coordinate
  double general_noise = 0.1;    // per-image global noise
  double detail_noise = 0.3;     // per-image part noise
  double cloth_shift = 1.5;
  double part_dropout = 0.1;
  double train_fraction = 0.5;   // of confuser groups
  double valid_fraction = 0.15;
  std::uint64_t seed = 7;

  /// Throws kInvalidArgument for zero counts or out-of-range probabilities.
  void check() const;
};

struct GroundTruth {
  SynthConfig config;
  std::vector<std::uint32_t> group_of_identity;
  std::vector<Role> split_of_identity;  // T, VQ (valid), or Q (test)
  /// planted[identity][part] -> Dp detail vector
  std::vector<std::vector<std::vector<float>>> planted;
};

struct SynthOutput {
  DatasetBundle bundle;
  GroundTruth truth;
};

/// Pure function of the config. Throws kInfeasible when a split would get
/// no confuser group.
SynthOutput generate(const SynthConfig& config);

std::string synth_config_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

/// `run_config_json`, when given, is embedded under "run_config".
void write_groundtruth_json(const GroundTruth& truth, const std::filesystem::path& path,
                            const std::string& run_config_json = {});
GroundTruth read_groundtruth_json(const std::filesystem::path& path);

/// Cosine similarity of the planted detail vectors of the two identities:
/// exactly 1 for the same person, below 1 otherwise.
class DetailOracleScorer : public PairScorer {
 public:
  explicit DetailOracleScorer(const GroundTruth& truth) : truth_(&truth) {}
  PairScores score(const ImageRecord& query, const ImageRecord& candidate) const override;

 private:
  const GroundTruth* truth_;
};

/// 1 for a true match, 0 otherwise.
class IdentityOracleScorer : public PairScorer {
 public:
  PairScores score(const ImageRecord& query, const ImageRecord& candidate) const override {
    const double s = query.identity == candidate.identity ? 1.0 : 0.0;
    return {s, s};
  }
};

}  // namespace rvrank
