// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "shlk/data.hpp"
#include "shlk/model.hpp"

namespace {

void BM_GruForwardBackward(benchmark::State& state) {
  const auto steps = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  shlk::graph::ParamStore params;
  const shlk::graph::GruCell cell{"enc", 16, 32};
  cell.init(params, rng);
  const shlk::Matrix x = shlk::Matrix::Random(steps, 16);
  for (auto _ : state) {
    shlk::graph::Graph g;
    const auto in = g.input("x", {steps, 16});
    const auto hs = shlk::graph::gru_unroll(g, cell, in, g.constant(shlk::Matrix::Zero(1, 32)));
    const auto loss = g.mean_sq_error(hs, g.constant(shlk::Matrix::Zero(steps, 32)));
    g.forward(params, {{"x", x}});
    benchmark::DoNotOptimize(g.backward(loss).size());
  }
}
BENCHMARK(BM_GruForwardBackward)->RangeMultiplier(2)->Range(16, 128);

void BM_ModelLossAndGrad(benchmark::State& state) {
  shlk::model::HierConfig c;
  c.use_text = state.range(0) != 0;
  const shlk::model::HierModel m(c, 0);
  const auto t = shlk::data::generate(0, 1).front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.loss_and_grad(t.video, c.use_text ? &t.text : nullptr).loss.total);
  }
}
BENCHMARK(BM_ModelLossAndGrad)->Arg(0)->Arg(1)->ArgName("text")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
