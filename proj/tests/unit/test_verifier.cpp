// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rvrank/retrieval.hpp"
#include "rvrank/synthgen.hpp"
#include "rvrank/verifier.hpp"

namespace rvrank {
namespace {

// Recorded once from the implementation for the fixed-seed case below.
constexpr double kGoldenGlobal = 0.5056276985171464;
constexpr double kGoldenPart = 0.40342416348756771;

ImageRecord make_record(std::vector<float> global, std::size_t K, std::size_t Dp, std::uint32_t id = 0) {
  ImageRecord r;
  r.identity = id;
  r.global_feature = std::move(global);
  r.parts.resize(K);
  for (auto& p : r.parts) p.values.assign(Dp, 0.0f);
  return r;
}

void set_part(ImageRecord& r, std::size_t k, std::vector<float> v) {
  r.parts[k].present = true;
  r.parts[k].values = std::move(v);
}

ImageRecord random_record(Rng& rng, std::size_t D, std::size_t Dp, std::size_t K, double presence) {
  ImageRecord r = make_record({}, K, Dp);
  for (std::size_t i = 0; i < D; ++i) r.global_feature.push_back(static_cast<float>(rng.normal()));
  for (std::size_t k = 0; k < K; ++k) {
    if (!rng.bernoulli(presence)) continue;
    std::vector<float> v;
    for (std::size_t j = 0; j < Dp; ++j) v.push_back(static_cast<float>(rng.normal()));
    set_part(r, k, v);
  }
  return r;
}

TEST(PairRepresentation, IdenticalInputs) {
  ImageRecord a = make_record({1.5f, -2.0f}, 2, 2);
  set_part(a, 0, {3.0f, 0.5f});
  const auto rep = make_pair_representation(a, a);
  EXPECT_EQ(rep.global_pair, (std::vector<double>{0.0, 0.0, 2.25, 4.0}));
  EXPECT_TRUE(rep.part_pairs[0].joint_present);
  EXPECT_EQ(rep.part_pairs[0].values, (std::vector<double>{0.0, 0.0, 9.0, 0.25}));
  EXPECT_FALSE(rep.part_pairs[1].joint_present);
}

TEST(PairRepresentation, Symmetric) {
  Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_record(rng, 6, 3, 5, 0.6);
    const auto b = random_record(rng, 6, 3, 5, 0.6);
    const auto ab = make_pair_representation(a, b);
    const auto ba = make_pair_representation(b, a);
    EXPECT_EQ(ab.global_pair, ba.global_pair);
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_EQ(ab.part_pairs[k].joint_present, ba.part_pairs[k].joint_present);
      EXPECT_EQ(ab.part_pairs[k].values, ba.part_pairs[k].values);
      EXPECT_EQ(ab.part_pairs[k].joint_present, a.parts[k].present && b.parts[k].present);
    }
  }
}

TEST(PairRepresentation, OneSidedPartIsNotJoint) {
  ImageRecord a = make_record({0.0f}, 3, 1);
  ImageRecord b = make_record({0.0f}, 3, 1);
  set_part(a, 1, {1.0f});
  EXPECT_FALSE(make_pair_representation(a, b).part_pairs[1].joint_present);
  EXPECT_FALSE(make_pair_representation(a, b).any_joint_present());
}

TEST(PairRepresentation, DimensionMismatchThrows) {
  const ImageRecord a = make_record({0.0f, 1.0f}, 3, 1);
  const ImageRecord b = make_record({0.0f}, 3, 1);
  EXPECT_THROW(make_pair_representation(a, b), Error);
}

TEST(ScoreGlobal, ZeroModelScoresZero) {
  Rng rng(22);
  const auto model = VerifierModel::zeros(VerifierShape{4, 2, 3});
  for (int i = 0; i < 10; ++i) {
    const auto a = random_record(rng, 4, 2, 3, 1.0);
    const auto b = random_record(rng, 4, 2, 3, 1.0);
    const auto rep = make_pair_representation(a, b);
    EXPECT_EQ(score_global(model, rep), 0.0);
    EXPECT_EQ(score_part(model, rep).sim_s, 0.0);
  }
}

TEST(ScoreGlobal, SymmetricAndBounded) {
  Rng rng(23);
  const VerifierModel model(VerifierShape{5, 3, 4}, 9);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_record(rng, 5, 3, 4, 0.8);
    const auto b = random_record(rng, 5, 3, 4, 0.8);
    const double ab = score_global(model, make_pair_representation(a, b));
    EXPECT_EQ(ab, score_global(model, make_pair_representation(b, a)));
    EXPECT_GT(ab, -1.0);
    EXPECT_LT(ab, 1.0);
  }
}

TEST(ScoreGlobal, FixedSeedGolden) {
  const VerifierModel model(VerifierShape{3, 2, 2, 4, 3}, 1234);
  ImageRecord a = make_record({0.5f, -1.0f, 2.0f}, 2, 2);
  ImageRecord b = make_record({1.5f, 0.25f, -0.5f}, 2, 2);
  set_part(a, 0, {1.0f, 2.0f});
  set_part(b, 0, {0.5f, -1.0f});
  set_part(a, 1, {-0.5f, 0.0f});
  set_part(b, 1, {0.75f, 0.25f});
  const auto rep = make_pair_representation(a, b);
  EXPECT_DOUBLE_EQ(score_global(model, rep), kGoldenGlobal);
  EXPECT_DOUBLE_EQ(score_part(model, rep).sim_s, kGoldenPart);
}

TEST(ScoreGlobal, MatchesScalarOracle) {
  Rng rng(24);
  for (int i = 0; i < 20; ++i) {
    const VerifierModel model(VerifierShape{4, 3, 5, 6, 4}, rng.below(1000));
    const auto a = random_record(rng, 4, 3, 5, 0.7);
    const auto b = random_record(rng, 4, 3, 5, 0.7);
    const auto rep = make_pair_representation(a, b);
    const auto ref = testing::ref_verifier(model, a, b);
    EXPECT_NEAR(score_global(model, rep), ref.global, 1e-12);
    ASSERT_EQ(rep.any_joint_present(), ref.has_part);
    if (ref.has_part) EXPECT_NEAR(score_part(model, rep).sim_s, ref.part, 1e-12);
  }
}

TEST(ScorePart, SinglePresentPartDeterminesScore) {
  Rng rng(25);
  const VerifierModel model(VerifierShape{2, 3, 4}, 5);
  ImageRecord a = random_record(rng, 2, 3, 4, 1.0);
  ImageRecord b = random_record(rng, 2, 3, 4, 0.0);
  set_part(b, 2, {0.1f, 0.2f, 0.3f});
  const double before = score_part(model, make_pair_representation(a, b)).sim_s;
  for (std::size_t k : {0u, 1u, 3u}) a.parts[k].values.assign(3, 0.0f);
  const auto after = score_part(model, make_pair_representation(a, b));
  EXPECT_EQ(after.sim_s, before);
  EXPECT_EQ(after.argmax, 2u);
  for (std::size_t k : {0u, 1u, 3u}) EXPECT_FALSE(after.contributions[k].has_value());
}

TEST(ScorePart, DuplicatingArgmaxPartWithSharedMixerKeepsScore) {
  Rng rng(26);
  VerifierModel model(VerifierShape{2, 3, 4}, 6);
  // Give every slot the same mixer so a part's contribution depends only on
  // its features.
  auto mixer = model.tensor(VerifierModel::kMixerW);
  const std::size_t h = model.shape().hidden_part;
  for (std::size_t k = 1; k < 4; ++k) {
    for (std::size_t r = 0; r < h; ++r) mixer[k * h + r] = mixer[r];
  }
  auto bias = model.tensor(VerifierModel::kMixerB);
  for (std::size_t k = 1; k < 4; ++k) bias[k] = bias[0];

  ImageRecord a = random_record(rng, 2, 3, 4, 1.0);
  ImageRecord b = random_record(rng, 2, 3, 4, 1.0);
  const auto base = score_part(model, make_pair_representation(a, b));
  const std::size_t other = (base.argmax + 1) % 4;
  a.parts[other] = a.parts[base.argmax];
  b.parts[other] = b.parts[base.argmax];
  EXPECT_EQ(score_part(model, make_pair_representation(a, b)).sim_s, base.sim_s);
}

TEST(ScorePart, DefaultContributionLength) {
  Rng rng(27);
  const VerifierModel model(VerifierShape{2, 2}, 7);
  const auto a = random_record(rng, 2, 2, kDefaultPartCount, 1.0);
  const auto b = random_record(rng, 2, 2, kDefaultPartCount, 1.0);
  EXPECT_EQ(score_part(model, make_pair_representation(a, b)).contributions.size(), 15u);
}

TEST(ScorePart, NoJointPartThrows) {
  const VerifierModel model(VerifierShape{1, 1, 2}, 8);
  const auto a = make_record({0.0f}, 2, 1);
  try {
    score_part(model, make_pair_representation(a, a));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoPresentParts);
  }
}

TEST(TripletHinge, Examples) {
  EXPECT_DOUBLE_EQ(triplet_hinge(0.8, 0.2, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(triplet_hinge(0.5, 0.5, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(triplet_hinge(0.2, 0.8, 0.3), 0.9);
}

// Hand-built model whose heads score tanh(3 tanh(-5 d)) for the distance d
// between the first coordinates.
VerifierModel distance_model() {
  VerifierModel m = VerifierModel::zeros(VerifierShape{1, 1, 2, 1, 1});
  m.tensor(VerifierModel::kGlobalW1)[0] = -5.0;
  m.tensor(VerifierModel::kGlobalW2)[0] = 3.0;
  m.tensor(VerifierModel::kPartW)[0] = -5.0;
  m.tensor(VerifierModel::kMixerW)[0] = 3.0;
  m.tensor(VerifierModel::kMixerW)[1] = 3.0;
  return m;
}

DatasetBundle line_bundle(const std::vector<std::pair<std::uint32_t, float>>& points) {
  DatasetBundle b(Dims{1, 1, 2}, true);
  for (const auto& [id, x] : points) {
    ImageRecord r = make_record({x}, 2, 1, id);
    r.index = b.split(Role::T).size();
    r.cloth = static_cast<std::uint32_t>(r.index);
    set_part(r, 0, {x});
    set_part(r, 1, {x});
    b.mutable_split(Role::T).push_back(r);
  }
  return b;
}

double closed_form(double d) { return std::tanh(3.0 * std::tanh(-5.0 * d)); }

TEST(BatchLoss, SeparatedBatchIsZero) {
  const auto bundle = line_bundle({{0, 0.0f}, {0, 0.0f}, {1, 1.0f}, {2, 2.0f}});
  TripletBatch batch;
  batch.triplets.push_back({{Role::T, 0}, {Role::T, 1}, {Role::T, 2}});
  batch.triplets.push_back({{Role::T, 0}, {Role::T, 1}, {Role::T, 3}});
  const auto loss = batch_loss(distance_model(), batch, bundle);
  EXPECT_EQ(loss.total, 0.0);
  EXPECT_EQ(loss.global, 0.0);
  EXPECT_EQ(loss.part, 0.0);
}

TEST(BatchLoss, SingleTripletHandComputed) {
  const auto bundle = line_bundle({{0, 0.0f}, {0, 0.25f}, {1, 0.125f}});
  TripletBatch batch;
  batch.triplets.push_back({{Role::T, 0}, {Role::T, 1}, {Role::T, 2}});
  const auto loss = batch_loss(distance_model(), batch, bundle);
  const double expected = closed_form(0.125) - closed_form(0.25) + 0.3;
  EXPECT_NEAR(loss.global, expected, 1e-12);
  EXPECT_NEAR(loss.part, expected, 1e-12);
  EXPECT_NEAR(loss.total, 2 * expected, 1e-12);
}

TEST(BatchLoss, MatchesScalarOracle) {
  Rng rng(28);
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_grad_case(rng);
    const auto loss = batch_loss(c.model, c.batch, c.bundle);
    const auto [lg, lp] = testing::ref_loss(c.model, c.batch, c.bundle);
    EXPECT_NEAR(loss.global, lg, 1e-9);
    EXPECT_NEAR(loss.part, lp, 1e-9);
    EXPECT_NEAR(loss.total, lg + lp, 1e-9);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(29);
  int checked = 0;
  while (checked < 10) {
    const auto c = testing::random_grad_case(rng);
    if (testing::kink_distance(c) < 1e-3) continue;
    const auto r = testing::check_gradient(c, 1e-6);
    EXPECT_LT(r.relative_error, 1e-4);
    ++checked;
  }
}

TEST(Triplets, CrossProductPerAnchor) {
  PairSet pairs;
  pairs.pairs.push_back({{Role::T, 0}, {Role::T, 1}, 1, 0.0, true});
  pairs.pairs.push_back({{Role::T, 0}, {Role::T, 2}, 1, 0.0, false});
  pairs.pairs.push_back({{Role::T, 0}, {Role::T, 3}, 2, 0.0, false});
  pairs.pairs.push_back({{Role::T, 4}, {Role::T, 5}, 1, 0.0, true});
  const auto groups = group_by_anchor(pairs);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].positives.size(), 1u);
  EXPECT_EQ(groups[0].negatives.size(), 2u);
  const auto batch = make_triplets(groups);
  ASSERT_EQ(batch.triplets.size(), 2u);
  EXPECT_EQ(batch.triplets[1].negative.index, 3u);
}

TEST(LearningRate, StepSchedule) {
  EXPECT_EQ(learning_rate_scale(1), 1.0);
  EXPECT_EQ(learning_rate_scale(30), 1.0);
  EXPECT_DOUBLE_EQ(learning_rate_scale(31), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate_scale(60), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate_scale(61), 0.01);
  EXPECT_DOUBLE_EQ(learning_rate_scale(80), 0.01);
}

struct SmallTraining {
  SynthOutput data;
  PairSet train_pairs;
  PairSet valid_pairs;
};

SmallTraining small_training() {
  SynthConfig cfg;
  cfg.n_identities = 40;
  cfg.D = 6;
  cfg.Dp = 3;
  cfg.K = 4;
  cfg.cloth_shift = 3.0;
  cfg.detail_noise = 0.0;
  cfg.seed = 3;
  SmallTraining s{generate(cfg), {}, {}};
  s.train_pairs = build_train_pairs(s.data.bundle, 20, Metric::kEuclidean);
  s.valid_pairs = build_eval_pairs(Role::VQ, Role::VG, s.data.bundle, 20, Metric::kEuclidean);
  s.valid_pairs.provenance = PairProvenance::kValid;
  return s;
}

TEST(Train, ZeroLearningRateKeepsWeights) {
  const auto s = small_training();
  VerifierHyper hyper;
  hyper.learning_rate = 0.0;
  hyper.epochs = 3;
  const VerifierModel initial(VerifierShape{6, 3, 4}, 11, hyper);
  const auto result = train(initial, s.train_pairs, s.valid_pairs, s.data.bundle);
  ASSERT_EQ(result.model.parameters().size(), initial.parameters().size());
  for (std::size_t i = 0; i < initial.parameters().size(); ++i) {
    EXPECT_EQ(result.model.parameters()[i], initial.parameters()[i]);
  }
  ASSERT_EQ(result.history.size(), 4u);
  EXPECT_EQ(result.history[0].loss, result.history[3].loss);
}

TEST(Train, ReducesLossAndDoesNotHurtValidation) {
  const auto s = small_training();
  VerifierHyper hyper;
  hyper.epochs = 15;
  const VerifierModel initial(VerifierShape{6, 3, 4}, 12, hyper);
  const auto result = train(initial, s.train_pairs, s.valid_pairs, s.data.bundle);
  EXPECT_LT(result.history.back().loss, result.history.front().loss);

  // Retrieval-only rank-1 over the same validation queries.
  TrainOptions opt;
  opt.window_L = 1;
  const double retrieval_rank1 = validation_rank1(initial, s.valid_pairs, s.data.bundle, opt);
  EXPECT_GE(result.history[result.best_epoch].valid_rank1, retrieval_rank1);
  EXPECT_GE(result.best_epoch, 1u);
}

TEST(Train, Deterministic) {
  const auto s = small_training();
  VerifierHyper hyper;
  hyper.epochs = 4;
  const VerifierModel initial(VerifierShape{6, 3, 4}, 13, hyper);
  const auto a = train(initial, s.train_pairs, s.valid_pairs, s.data.bundle);
  const auto b = train(initial, s.train_pairs, s.valid_pairs, s.data.bundle);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  for (std::size_t i = 0; i < a.model.parameters().size(); ++i) {
    EXPECT_EQ(a.model.parameters()[i], b.model.parameters()[i]);
  }
}

TEST(Train, NoValidAnchorsThrows) {
  const auto s = small_training();
  PairSet only_pos;
  for (const auto& p : s.train_pairs.pairs) {
    if (p.label) only_pos.pairs.push_back(p);
  }
  const VerifierModel initial(VerifierShape{6, 3, 4}, 14);
  try {
    train(initial, only_pos, s.valid_pairs, s.data.bundle);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoValidAnchors);
  }
}

TEST(Train, DivergenceIsReported) {
  const auto s = small_training();
  VerifierHyper hyper;
  hyper.learning_rate = std::numeric_limits<double>::infinity();
  hyper.epochs = 1;
  const VerifierModel initial(VerifierShape{6, 3, 4}, 15, hyper);
  try {
    train(initial, s.train_pairs, s.valid_pairs, s.data.bundle);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
  }
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  VerifierHyper hyper;
  hyper.margin = 0.25;
  hyper.learning_rate = 1e-3;
  hyper.epochs = 7;
  hyper.batch_size = 5;
  VerifierModel model(VerifierShape{3, 2, 4, 5, 6}, 77, hyper);
  model.round_to_float();
  testing::TempDir dir;
  save_model(model, dir / "m.bin");
  const auto back = load_model(dir / "m.bin");
  EXPECT_EQ(back.shape(), model.shape());
  EXPECT_EQ(back.hyper(), model.hyper());
  EXPECT_EQ(back.seed(), 77u);
  ASSERT_EQ(back.parameters().size(), model.parameters().size());
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    EXPECT_EQ(back.parameters()[i], model.parameters()[i]);
  }
}

TEST(Checkpoint, GlobalOnlyModelHasNoPartTensors) {
  const VerifierModel model(VerifierShape{3, 0, 15}, 1);
  EXPECT_FALSE(model.has_part_head());
  EXPECT_EQ(model.tensor(VerifierModel::kPartW).size(), 0u);
  EXPECT_EQ(model.tensor(VerifierModel::kOutBias).size(), 0u);
}

TEST(Scorer, ReportsMissingSpecializedScore) {
  const VerifierModel model(VerifierShape{1, 1, 2}, 2);
  const VerifierScorer scorer(model);
  ImageRecord a = make_record({0.5f}, 2, 1);
  ImageRecord b = make_record({0.25f}, 2, 1);
  EXPECT_FALSE(scorer.score(a, b).specialized.has_value());
  set_part(a, 0, {1.0f});
  set_part(b, 0, {1.0f});
  EXPECT_TRUE(scorer.score(a, b).specialized.has_value());
}

}  // namespace
}  // namespace rvrank
