// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "rvrank/datastore.hpp"

namespace rvrank {

/// Scores produced by one verifier invocation on a (query, candidate) pair.
/// `specialized` is empty when the pair has no jointly present part.
struct PairScores {
  std::optional<double> specialized;
  double global = 0.0;
};

/// Anything that can verify a query-candidate pair: the trained verifier,
/// or a ground-truth oracle on synthetic data.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual PairScores score(const ImageRecord& query, const ImageRecord& candidate) const = 0;
};

}  // namespace rvrank
