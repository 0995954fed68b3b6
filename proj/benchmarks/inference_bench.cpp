// Copyright 2026 The eesp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "eesp/dataset.hpp"
#include "eesp/gating.hpp"
#include "eesp/model.hpp"

namespace {

using namespace eesp;

MultiExitModel bench_model(std::size_t depth, std::size_t width) {
  ModelShape s;
  s.input_width = 8;
  s.hidden_widths.assign(depth, width);
  s.num_classes = 4;
  auto model = MultiExitModel::create(s, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.5);
  for (std::size_t i = 0; i < depth; ++i) {
    for (double& w : model.deferral_head(i).weights.data) w = g(rng);
  }
  return model;
}

Dataset bench_data(std::size_t m) {
  MixtureSpec spec;
  spec.dims = 8;
  spec.classes = 4;
  spec.samples = m;
  spec.overlap = 0.5;
  return gen_mixture(spec);
}

void BM_ForwardAll(benchmark::State& state) {
  const auto model = bench_model(static_cast<std::size_t>(state.range(0)), 64);
  const auto data = bench_data(256);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_all(model, data.row(k++ % data.size())));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForwardAll)->Arg(4)->Arg(12);

// Gated inference stops at the exit layer; compare with full-depth forward.
void BM_GatedInfer(benchmark::State& state) {
  const auto model = bench_model(static_cast<std::size_t>(state.range(0)), 64);
  const auto data = bench_data(256);
  const GoldLabelOracle oracle(data.labels);
  const Thresholds t{0.6, 0.8};
  std::size_t k = 0;
  std::size_t layers = 0;
  for (auto _ : state) {
    const std::size_t s = k++ % data.size();
    const auto r = infer(model, data.row(s), s, t, oracle);
    layers += r.trace.depth;
    benchmark::DoNotOptimize(r);
  }
  state.counters["mean_depth"] =
      static_cast<double>(layers) / static_cast<double>(state.iterations());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GatedInfer)->Arg(4)->Arg(12);

void BM_Evaluate(benchmark::State& state) {
  const auto model = bench_model(4, 32);
  const auto data = bench_data(static_cast<std::size_t>(state.range(0)));
  const GoldLabelOracle oracle(data.labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(model, data, Thresholds{0.8, 0.65}, oracle));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(4000);

void BM_EvaluateCached(benchmark::State& state) {
  const auto model = bench_model(4, 32);
  const auto data = bench_data(4000);
  const auto table = readout_table(model, data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_cached(table, data.labels, Thresholds{0.8, 0.65}));
  }
  state.SetItemsProcessed(state.iterations() * 4000);
}
BENCHMARK(BM_EvaluateCached);

}  // namespace
