// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "rvrank/reranker.hpp"
#include "rvrank/retrieval.hpp"
#include "rvrank/synthgen.hpp"
#include "rvrank/verifier.hpp"

namespace {

using namespace rvrank;

// Test split with roughly `queries` query images.
const SynthOutput& dataset(std::size_t queries) {
  static std::map<std::size_t, SynthOutput> cache;
  auto it = cache.find(queries);
  if (it == cache.end()) {
    SynthConfig cfg;
    cfg.n_identities = queries * 3 / 2 + 40;
    cfg.train_fraction = 0.2;
    cfg.valid_fraction = 0.1;
    cfg.cloth_shift = 3.0;
    it = cache.emplace(queries, generate(cfg)).first;
  }
  return it->second;
}

void BM_DistanceMatrix(benchmark::State& state) {
  const auto& b = dataset(static_cast<std::size_t>(state.range(0))).bundle;
  for (auto _ : state) {
    benchmark::DoNotOptimize(distance_matrix(b.split(Role::Q), b.split(Role::G), Metric::kEuclidean));
  }
  state.counters["queries"] = static_cast<double>(b.split(Role::Q).size());
}
BENCHMARK(BM_DistanceMatrix)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_WindowRerank(benchmark::State& state) {
  const std::size_t Q = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> order(Q);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> scores(Q);
  for (std::size_t i = 0; i < Q; ++i) scores[i] = static_cast<double>((i * 7919) % Q);
  for (auto _ : state) benchmark::DoNotOptimize(window_rerank(order, scores, 10, Q));
}
BENCHMARK(BM_WindowRerank)->Arg(20)->Arg(200);

void BM_VerifierScore(benchmark::State& state) {
  const auto& b = dataset(100).bundle;
  const VerifierModel model(VerifierShape{b.dims().D, b.dims().Dp, b.dims().K, 32, 16}, 1, VerifierHyper{});
  const auto rep = make_pair_representation(b.split(Role::Q)[0], b.split(Role::G)[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_global(model, rep));
    benchmark::DoNotOptimize(score_part(model, rep));
  }
}
BENCHMARK(BM_VerifierScore);

void BM_WindowStage(benchmark::State& state) {
  const auto& data = dataset(static_cast<std::size_t>(state.range(0)));
  const auto& b = data.bundle;
  const DetailOracleScorer oracle(data.truth);
  const RankingConfig config;
  const auto orders = retrieval_orders(b, Role::Q, Role::G, Metric::kEuclidean, config, false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        window_stage(b.split(Role::Q), b.split(Role::G), orders, oracle, config, RankProvenance::kWindow));
  }
  state.counters["queries"] = static_cast<double>(b.split(Role::Q).size());
}
BENCHMARK(BM_WindowStage)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_KReciprocal(benchmark::State& state) {
  const auto& b = dataset(static_cast<std::size_t>(state.range(0))).bundle;
  std::vector<ImageRecord> all(b.split(Role::Q).begin(), b.split(Role::Q).end());
  all.insert(all.end(), b.split(Role::G).begin(), b.split(Role::G).end());
  const auto prepared = kreciprocal_prepare(distance_matrix(all, all, Metric::kEuclidean));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kreciprocal_rerank(prepared, b.split(Role::Q).size(), 20, 6, 0.3));
  }
}
BENCHMARK(BM_KReciprocal)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
