// Copyright 2026 The salpn Authors.
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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "salpn/geometry.h"
#include "salpn/pipeline.h"
#include "salpn/refinement.h"
#include "salpn/retrieval.h"
#include "salpn/synth.h"
#include "salpn/tensor.h"

namespace {

using namespace salpn;

Tensor3 random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  Tensor3 t(c, h, w);
  for (auto& v : t.data()) v = nd(rng);
  return t;
}

void BM_Upsample4(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const Tensor3 grid = random_tensor(c, 32, 32, 1);
  for (auto _ : state) benchmark::DoNotOptimize(upsample4(grid));
  state.SetItemsProcessed(state.iterations() * c * 128 * 128);
}
BENCHMARK(BM_Upsample4)->Arg(32)->Arg(256);

void BM_RefinePartition(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Tensor3 part = random_tensor(32, side, side, 2);
  const SgrsConfig config{0.5, DistanceMetric::kChebyshev, true};
  for (auto _ : state) benchmark::DoNotOptimize(refine_partition(part, config));
}
BENCHMARK(BM_RefinePartition)->Arg(32)->Arg(128);

void BM_DescribeView(benchmark::State& state) {
  RunConfig c;
  const Tensor3 grid = random_tensor(c.feature_channels, c.feature_grid, c.feature_grid, 3);
  const int theta = scale_factor(256, c.h_sat, c.alpha);
  for (auto _ : state) benchmark::DoNotOptimize(describe(c, grid, theta));
}
BENCHMARK(BM_DescribeView);

void BM_HandcraftedFeatures(benchmark::State& state) {
  const RenderedView v = render_view(generate_scene(1, 1), 189.75, 512);
  for (auto _ : state) benchmark::DoNotOptimize(handcrafted_features(v.image, 32, 32));
}
BENCHMARK(BM_HandcraftedFeatures);

void BM_Evaluate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<float> nd;
  std::vector<EmbeddingRecord> gallery, queries;
  for (int i = 0; i < n; ++i) {
    std::vector<float> g(128), q(128);
    for (auto& x : g) x = nd(rng);
    for (auto& x : q) x = nd(rng);
    gallery.push_back({"g" + std::to_string(i), i, g});
    queries.push_back({"q" + std::to_string(i), i, q});
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(queries, gallery, {1, 5, 10}));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(4)->Range(16, 256)->Complexity();

}  // namespace

BENCHMARK_MAIN();
