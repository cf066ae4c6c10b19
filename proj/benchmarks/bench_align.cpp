// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "shlk/align.hpp"

namespace {

shlk::Matrix random_frames(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  shlk::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cost = shlk::align::pairwise_cost(random_frames(n, 16, 1), random_frames(n, 16, 2));
  for (auto _ : state) benchmark::DoNotOptimize(shlk::align::dtw(cost).distance);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dtw)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);

void BM_SoftDtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cost = shlk::align::pairwise_cost(random_frames(n, 16, 1), random_frames(n, 16, 2));
  for (auto _ : state) benchmark::DoNotOptimize(shlk::align::soft_dtw(cost, 1.0).value);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SoftDtw)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);

void BM_SoftDtwWithGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const shlk::Matrix x = random_frames(n, 16, 1);
  const shlk::Matrix y = random_frames(n, 16, 2);
  for (auto _ : state) {
    const auto cost = shlk::align::pairwise_cost(x, y);
    const auto r = shlk::align::soft_dtw(cost, 1.0);
    const auto dx = shlk::align::cost_jacobian_apply(x, y, shlk::align::soft_dtw_grad(r, cost),
                                                     shlk::align::Metric::euclidean);
    benchmark::DoNotOptimize(dx.first.data());
  }
}
BENCHMARK(BM_SoftDtwWithGrad)->RangeMultiplier(2)->Range(16, 256);

}  // namespace
