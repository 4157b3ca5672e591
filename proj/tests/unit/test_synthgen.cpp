// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "rvrank/eval.hpp"
#include "rvrank/synthgen.hpp"

namespace rvrank {
namespace {

double retrieval_rank1(const DatasetBundle& b) {
  const auto lists = rerank_pipeline(b, Role::Q, Role::G, Metric::kEuclidean, nullptr, {}, Stages{});
  return evaluate(lists, b, Role::Q, Role::G, 1).rank(1);
}

TEST(Generate, NoShiftNoNoiseIsPerfectForRetrieval) {
  SynthConfig cfg;
  cfg.n_identities = 60;
  cfg.cloth_shift = 0.0;
  cfg.general_noise = 0.0;
  cfg.detail_noise = 0.0;
  const auto out = generate(cfg);
  EXPECT_EQ(retrieval_rank1(out.bundle), 1.0);
}

TEST(Generate, OracleSeparatesGroupsThatRetrievalConfuses) {
  SynthConfig cfg;
  cfg.n_identities = 80;
  cfg.cloth_shift = 3.0;
  cfg.detail_noise = 0.0;
  const auto out = generate(cfg);
  const DetailOracleScorer oracle(out.truth);
  const auto queries = out.bundle.split(Role::Q);
  const auto gallery = out.bundle.split(Role::G);
  for (const auto& q : queries) {
    double best_match = -2.0, best_other = -2.0;
    for (const auto& g : gallery) {
      if (q.same_identity_and_cloth(g)) continue;
      if (out.truth.group_of_identity[g.identity] != out.truth.group_of_identity[q.identity]) continue;
      const double s = *oracle.score(q, g).specialized;
      (g.identity == q.identity ? best_match : best_other) = std::max(
          g.identity == q.identity ? best_match : best_other, s);
    }
    EXPECT_GT(best_match, best_other);
  }

  // Retrieval places a same-group confuser first for some queries.
  const auto lists = rerank_pipeline(out.bundle, Role::Q, Role::G, Metric::kEuclidean, nullptr, {}, Stages{});
  std::size_t confused = 0;
  for (const auto& l : lists) {
    const auto& q = queries[l.query_index];
    const auto& top = gallery[l.order[0]];
    if (top.identity != q.identity &&
        out.truth.group_of_identity[top.identity] == out.truth.group_of_identity[q.identity]) {
      ++confused;
    }
  }
  EXPECT_GT(confused, 0u);
}

TEST(Generate, SameSeedIsByteIdentical) {
  SynthConfig cfg;
  cfg.n_identities = 30;
  testing::TempDir dir;
  for (const char* tag : {"a", "b"}) {
    const auto out = generate(cfg);
    const std::string t(tag);
    write_bundle(out.bundle, dir / (t + ".csv"), dir / (t + ".bin"), dir / (t + ".parts"));
    write_groundtruth_json(out.truth, dir / (t + ".json"));
  }
  for (const char* ext : {".csv", ".bin", ".parts", ".json"}) {
    EXPECT_EQ(testing::read_file(dir / (std::string("a") + ext)), testing::read_file(dir / (std::string("b") + ext)));
  }
  cfg.seed += 1;
  const auto other = generate(cfg);
  write_bundle(other.bundle, dir / "c.csv", dir / "c.bin", dir / "c.parts");
  EXPECT_NE(testing::read_file(dir / "a.bin"), testing::read_file(dir / "c.bin"));
}

TEST(Generate, SplitsAreIdentityDisjoint) {
  SynthConfig cfg;
  cfg.n_identities = 57;
  cfg.confuser_group_size = 3;
  const auto out = generate(cfg);
  std::map<std::uint32_t, std::set<int>> where;
  auto side = [](Role r) { return r == Role::T ? 0 : (r == Role::VQ || r == Role::VG ? 1 : 2); };
  for (Role r : kAllRoles) {
    for (const auto& rec : out.bundle.split(r)) where[rec.identity].insert(side(r));
  }
  EXPECT_EQ(where.size(), 57u);
  for (const auto& [id, sides] : where) {
    EXPECT_EQ(sides.size(), 1u) << id;
    EXPECT_EQ(*sides.begin(), side(out.truth.split_of_identity[id]));
  }
  // every group sits in one split
  for (std::uint32_t id = 0; id < 57; ++id) {
    EXPECT_EQ(out.truth.split_of_identity[id],
              out.truth.split_of_identity[out.truth.group_of_identity[id] * cfg.confuser_group_size]);
  }
  EXPECT_TRUE(validate_bundle(out.bundle).empty());
}

TEST(Generate, RetrievalRankOneFallsWithClothShift) {
  double previous = 2.0;
  for (double shift : {0.5, 1.5, 4.0}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SynthConfig cfg;
      cfg.n_identities = 80;
      cfg.cloth_shift = shift;
      cfg.seed = seed;
      total += retrieval_rank1(generate(cfg).bundle);
    }
    EXPECT_LE(total / 5.0, previous) << "shift " << shift;
    previous = total / 5.0;
  }
}

TEST(Generate, PartDropoutExtremes) {
  SynthConfig cfg;
  cfg.n_identities = 20;
  cfg.part_dropout = 1.0;
  const auto none = generate(cfg);
  for (Role r : kAllRoles) {
    for (const auto& rec : none.bundle.split(r)) {
      for (const auto& p : rec.parts) EXPECT_FALSE(p.present);
    }
  }
  cfg.part_dropout = 0.0;
  const auto all = generate(cfg);
  for (Role r : kAllRoles) {
    for (const auto& rec : all.bundle.split(r)) {
      for (const auto& p : rec.parts) EXPECT_TRUE(p.present);
    }
  }
}

TEST(Generate, InfeasibleSplit) {
  SynthConfig cfg;
  cfg.n_identities = 8;
  cfg.confuser_group_size = 4;
  try {
    generate(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(Generate, InvalidConfig) {
  SynthConfig cfg;
  cfg.part_dropout = 1.5;
  EXPECT_THROW(cfg.check(), Error);
  SynthConfig zero;
  zero.images_per_cloth = 0;
  EXPECT_THROW(zero.check(), Error);
  SynthConfig negative;
  negative.cloth_shift = -1.0;
  EXPECT_THROW(negative.check(), Error);
}

TEST(Generate, SingleImagePerClothAlternatesQueryAndGallery) {
  SynthConfig cfg;
  cfg.n_identities = 40;
  cfg.images_per_cloth = 1;
  cfg.clothes_per_identity = 2;
  const auto out = generate(cfg);
  EXPECT_FALSE(out.bundle.split(Role::Q).empty());
  EXPECT_EQ(out.bundle.split(Role::Q).size(), out.bundle.split(Role::G).size());
  for (const auto& q : out.bundle.split(Role::Q)) EXPECT_EQ(q.cloth, 0u);
}

TEST(GroundTruth, JsonRoundTrip) {
  SynthConfig cfg;
  cfg.n_identities = 24;
  cfg.detail_noise = 0.125;
  const auto out = generate(cfg);
  testing::TempDir dir;
  write_groundtruth_json(out.truth, dir / "gt.json");
  const auto back = read_groundtruth_json(dir / "gt.json");
  EXPECT_EQ(back.group_of_identity, out.truth.group_of_identity);
  EXPECT_EQ(back.split_of_identity, out.truth.split_of_identity);
  EXPECT_EQ(back.planted, out.truth.planted);
  EXPECT_EQ(synth_config_json(back.config), synth_config_json(cfg));
  EXPECT_EQ(synth_config_json(synth_config_from_json(synth_config_json(cfg))), synth_config_json(cfg));
}

}  // namespace
}  // namespace rvrank
