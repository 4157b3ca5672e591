// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "rvrank/datastore.hpp"
#include "rvrank/reranker.hpp"

namespace rvrank {
namespace {

using Args = std::vector<std::string>;

int run(Args args) {
  args.insert(args.begin(), "rvrank");
  return cli::run(args);
}

Args bundle_args(const std::filesystem::path& d) {
  return {"--meta", (d / "meta.csv").string(), "--features", (d / "features.bin").string(), "--parts",
          (d / "parts.bin").string()};
}

// Drops "# config" lines, which echo the (per-run) absolute paths.
std::string body(const std::filesystem::path& p) {
  const std::string text = testing::read_file(p);
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    if (text.compare(start, 9, "# config ") != 0) out += text.substr(start, end - start + 1);
    start = end + 1;
  }
  return out;
}

Args concat(Args a, const Args& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data = dir / "data";
    ASSERT_EQ(run({"synth", "--out", data.string(), "--identities", "40", "--D", "6", "--Dp", "3", "--K", "4",
                   "--seed", "5"}),
              0);
  }
  testing::TempDir dir;
  std::filesystem::path data;
};

TEST_F(CliTest, SynthOutputValidates) {
  EXPECT_EQ(run(concat({"validate"}, bundle_args(data))), 0);
  EXPECT_TRUE(std::filesystem::exists(data / "groundtruth.json"));
  EXPECT_TRUE(std::filesystem::exists(data / "features.bin.config.json"));
}

TEST_F(CliTest, PipelineIsDeterministic) {
  std::vector<std::string> outputs;
  for (const char* tag : {"a", "b"}) {
    const auto out = dir / tag;
    ASSERT_EQ(run(concat({"pairs", "--out", (out / "pairs").string()}, bundle_args(data))), 0);
    ASSERT_EQ(run(concat({"train", "--pairs", (out / "pairs").string(), "--out", (out / "model").string(),
                          "--epochs", "3"},
                         bundle_args(data))),
              0);
    ASSERT_EQ(run(concat({"rerank", "--model", (out / "model" / "model.bin").string(), "--stages", "both", "--out",
                          (out / "ranked.csv").string()},
                         bundle_args(data))),
              0);
    std::string all = testing::read_file(out / "model" / "model.bin");
    for (const char* f : {"pairs/train_pairs.csv", "model/history.csv", "ranked.csv"}) all += body(out / f);
    outputs.push_back(all);
  }
  EXPECT_EQ(outputs[0], outputs[1]);
}

TEST_F(CliTest, StagesNoneMatchesRetrievalOrder) {
  ASSERT_EQ(run(concat({"rerank", "--stages", "none", "--out", (dir / "base.csv").string()}, bundle_args(data))), 0);
  const auto lists = read_ranked_csv(dir / "base.csv");
  const auto bundle = load_bundle(data / "meta.csv", data / "features.bin", data / "parts.bin");
  const auto expected = rerank_pipeline(bundle, Role::Q, Role::G, Metric::kEuclidean, nullptr, {}, Stages{});
  ASSERT_EQ(lists.size(), expected.size());
  for (std::size_t i = 0; i < lists.size(); ++i) EXPECT_EQ(lists[i].order, expected[i].order);
}

TEST_F(CliTest, EvalWritesReport) {
  ASSERT_EQ(run(concat({"rerank", "--oracle", (data / "groundtruth.json").string(), "--stages", "window", "--out",
                        (dir / "r.csv").string()},
                       bundle_args(data))),
            0);
  ASSERT_EQ(run({"eval", "--meta", (data / "meta.csv").string(), "--ranked", (dir / "r.csv").string(), "--out",
                 (dir / "e.json").string()}),
            0);
  EXPECT_NE(testing::read_file(dir / "e.json").find("\"config\""), std::string::npos);
}

TEST_F(CliTest, WindowWithoutScorerFails) {
  EXPECT_EQ(run(concat({"rerank", "--stages", "window", "--out", (dir / "r.csv").string()}, bundle_args(data))), 1);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"validate", "--no-such-flag"}), 2);
  EXPECT_EQ(run({"no-such-command"}), 2);
  EXPECT_EQ(run({}), 2);
}

TEST(Cli, MissingFileIsRuntimeError) {
  testing::TempDir dir;
  EXPECT_EQ(run({"validate", "--meta", (dir / "absent.csv").string(), "--features", (dir / "absent.bin").string()}),
            1);
}

TEST(Cli, InvariantViolationFailsValidate) {
  testing::TempDir dir;
  Rng rng(3);
  testing::RandomBundleSpec spec;
  spec.n_query = 0;  // only T may be empty
  write_bundle(testing::random_bundle(rng, spec), dir / "meta.csv", dir / "features.bin", dir / "parts.bin");
  EXPECT_EQ(run(concat({"validate"}, bundle_args(dir.path()))), 1);
}

}  // namespace
}  // namespace rvrank
