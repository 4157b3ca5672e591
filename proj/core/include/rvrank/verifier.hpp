// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvrank/datastore.hpp"
#include "rvrank/retrieval.hpp"
#include "rvrank/scorer.hpp"

namespace rvrank {

/// Symmetric fusion of two records: [|a - b| ; a * b] for the global
/// feature and for every part.
struct PairRepresentation {
  struct Part {
    bool joint_present = false;
    std::vector<double> values;  // 2 * Dp
  };

  std::vector<double> global_pair;  // 2 * D
  std::vector<Part> part_pairs;     // K

  bool any_joint_present() const;
};

PairRepresentation make_pair_representation(const ImageRecord& q, const ImageRecord& g);

struct VerifierShape {
  std::size_t D = 0;
  std::size_t Dp = 0;
  std::size_t K = kDefaultPartCount;
  std::size_t hidden_global = 32;
  std::size_t hidden_part = 16;

  friend bool operator==(const VerifierShape&, const VerifierShape&) = default;
};

struct VerifierHyper {
  double margin = 0.3;
  double learning_rate = 3.5e-4;
  std::size_t epochs = 80;
  std::size_t batch_size = 16;  // anchors per gradient step

  friend bool operator==(const VerifierHyper&, const VerifierHyper&) = default;
};

/// Learning-rate multiplier for a 1-based epoch: 1 through epoch 30, 0.1
/// through epoch 60, 0.01 afterwards.
double learning_rate_scale(std::size_t epoch);

/// Two scoring heads over a PairRepresentation.
///
/// Global head:  sim_G = tanh(w2 . tanh(W1 x + b1) + b2), x = global pair.
/// Part head:    h_k = tanh(Wp x_k + bp) shared across parts,
///               c_k = u_k . h_k + v_k  (per-part contribution),
///               sim_S = tanh(exp(s) * max_k c_k + t) over jointly present parts.
///
/// All parameters live in one flat vector; `tensors()` names the slices in
/// checkpoint order.
class VerifierModel {
 public:
  enum Tensor : std::size_t {
    kGlobalW1,
    kGlobalB1,
    kGlobalW2,
    kGlobalB2,
    kPartW,
    kPartB,
    kMixerW,
    kMixerB,
    kOutLogScale,
    kOutBias,
    kTensorCount,
  };

  struct TensorInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::size_t fan_in = 0;
  };

  VerifierModel() = default;

  /// Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the output
  /// log-scale and bias start at zero.
  VerifierModel(const VerifierShape& shape, std::uint64_t seed, const VerifierHyper& hyper = {});

  /// All parameters zero (both heads then output exactly 0).
  static VerifierModel zeros(const VerifierShape& shape, const VerifierHyper& hyper = {},
                             std::uint64_t seed = 0);

  const VerifierShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  const VerifierHyper& hyper() const { return hyper_; }
  void set_hyper(const VerifierHyper& hyper) { hyper_ = hyper; }
  bool has_part_head() const { return shape_.Dp > 0 && shape_.K > 0; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> tensor(Tensor t) { return parameters().subspan(tensors_[t].offset, tensors_[t].size); }
  std::span<const double> tensor(Tensor t) const {
    return parameters().subspan(tensors_[t].offset, tensors_[t].size);
  }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  bool all_finite() const;

  /// Rounds every parameter to the nearest float so the in-memory model
  /// equals its checkpoint.
  void round_to_float();

 private:
  void layout();

  VerifierShape shape_;
  std::uint64_t seed_ = 0;
  VerifierHyper hyper_;
  std::vector<double> params_;
  std::vector<TensorInfo> tensors_;
};

double score_global(const VerifierModel& model, const PairRepresentation& rep);

struct PartScore {
  double sim_s = 0.0;
  std::vector<std::optional<double>> contributions;  // K entries; empty for absent parts
  std::size_t argmax = 0;
};

/// Throws kNoPresentParts when no part is jointly present.
PartScore score_part(const VerifierModel& model, const PairRepresentation& rep);

/// Backward passes: add upstream * d(score)/d(params) into `grad`. Return
/// the forward score.
double score_global_backward(const VerifierModel& model, const PairRepresentation& rep, double upstream,
                             std::span<double> grad);
double score_part_backward(const VerifierModel& model, const PairRepresentation& rep, double upstream,
                           std::span<double> grad);

/// max(sim_neg - sim_pos + m, 0): zero once the positive leads by the margin.
double triplet_hinge(double sim_pos, double sim_neg, double margin);

struct Triplet {
  RecordRef anchor;
  RecordRef positive;
  RecordRef negative;
};

struct TripletBatch {
  std::vector<Triplet> triplets;
};

/// Positives and negatives listed for one anchor in a training PairSet.
struct AnchorGroup {
  RecordRef anchor;
  std::vector<RecordRef> positives;
  std::vector<RecordRef> negatives;
};

/// Groups pairs by query, preserving first-seen anchor order and rank order.
std::vector<AnchorGroup> group_by_anchor(const PairSet& pairs);

/// Full positive x negative cross product for each group.
TripletBatch make_triplets(std::span<const AnchorGroup> groups);

struct LossTerms {
  double total = 0.0;   // L = L_g + L_p
  double global = 0.0;  // L_g
  double part = 0.0;    // L_p
};

/// Summed triplet hinge over both heads. The part term skips triplets in
/// which either pair lacks a jointly present part.
LossTerms batch_loss(const VerifierModel& model, const TripletBatch& batch, const DatasetBundle& bundle);

/// As batch_loss, also accumulating dL/dparams into `grad` (same layout as
/// model.parameters()).
LossTerms batch_loss_and_gradient(const VerifierModel& model, const TripletBatch& batch,
                                  const DatasetBundle& bundle, std::span<double> grad);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before training
  double loss = 0.0;
  double loss_global = 0.0;
  double loss_part = 0.0;
  double valid_rank1 = 0.0;
};

struct TrainOptions {
  std::size_t window_L = 10;
  std::size_t window_Q = 20;
  Role valid_query_role = Role::VQ;
  Role valid_gallery_role = Role::VG;
};

struct TrainResult {
  VerifierModel model;  // checkpoint with best validation rank-1
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Mini-batch gradient descent on the summed dual triplet loss with a fixed
/// seed and the stepped learning-rate schedule. History row 0 is the
/// initial model. Throws kNoValidAnchors and kDivergence.
TrainResult train(const VerifierModel& initial, const PairSet& train_pairs, const PairSet& valid_pairs,
                  const DatasetBundle& bundle, const TrainOptions& options = {});

/// Rank-1 of window re-ranking each validation query's candidate list with
/// the model. Queries without an eligible positive in the gallery role are
/// left out of the denominator. NaN when no query qualifies.
double validation_rank1(const VerifierModel& model, const PairSet& valid_pairs, const DatasetBundle& bundle,
                        const TrainOptions& options);

void save_model(const VerifierModel& model, const std::filesystem::path& path);
VerifierModel load_model(const std::filesystem::path& path);

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path,
                       std::span<const std::string> comments = {});

/// Adapter used by the re-ranker: one call computes both heads.
class VerifierScorer : public PairScorer {
 public:
  explicit VerifierScorer(const VerifierModel& model) : model_(&model) {}
  PairScores score(const ImageRecord& query, const ImageRecord& candidate) const override;

 private:
  const VerifierModel* model_;
};

}  // namespace rvrank
