// bench/bench_kernels.cc

// Copyright 2026   DANSE authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Parallel kernels against the serial reference at extractor-like sizes.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "danse/kernels.h"

namespace {

using danse::kernels::Conv1dGeometry;

std::vector<double> RandomVector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Conv1dGeometry Geometry(const benchmark::State& state) {
  Conv1dGeometry g;
  g.batch = 16;
  g.in_channels = g.out_channels = static_cast<std::size_t>(state.range(0));
  g.kernel = 3;
  g.padding = 1;
  g.in_length = static_cast<std::size_t>(state.range(1));
  return g;
}

template <bool kParallel>
void BM_ConvForward(benchmark::State& state) {
  const Conv1dGeometry g = Geometry(state);
  const auto in = RandomVector(g.batch * g.in_channels * g.in_length, 1);
  const auto w = RandomVector(g.out_channels * g.in_channels * g.kernel, 2);
  const auto b = RandomVector(g.out_channels, 3);
  std::vector<double> out(g.batch * g.out_channels * g.out_length());
  for (auto _ : state) {
    if constexpr (kParallel)
      danse::kernels::Conv1dForward(g, in, w, b, out);
    else
      danse::kernels::serial::Conv1dForward(g, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * out.size() * g.in_channels *
                          g.kernel);
}

template <bool kParallel>
void BM_ConvBackwardInput(benchmark::State& state) {
  const Conv1dGeometry g = Geometry(state);
  const auto go = RandomVector(g.batch * g.out_channels * g.out_length(), 1);
  const auto w = RandomVector(g.out_channels * g.in_channels * g.kernel, 2);
  std::vector<double> gi(g.batch * g.in_channels * g.in_length);
  for (auto _ : state) {
    if constexpr (kParallel)
      danse::kernels::Conv1dBackwardInput(g, go, w, gi);
    else
      danse::kernels::serial::Conv1dBackwardInput(g, go, w, gi);
    benchmark::DoNotOptimize(gi.data());
  }
}

template <bool kParallel>
void BM_ConvBackwardWeight(benchmark::State& state) {
  const Conv1dGeometry g = Geometry(state);
  const auto go = RandomVector(g.batch * g.out_channels * g.out_length(), 1);
  const auto in = RandomVector(g.batch * g.in_channels * g.in_length, 2);
  std::vector<double> gw(g.out_channels * g.in_channels * g.kernel);
  std::vector<double> gb(g.out_channels);
  for (auto _ : state) {
    if constexpr (kParallel)
      danse::kernels::Conv1dBackwardWeight(g, go, in, gw, gb);
    else
      danse::kernels::serial::Conv1dBackwardWeight(g, go, in, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool kParallel>
void BM_Gemm(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto a = RandomVector(n * n, 1);
  const auto b = RandomVector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (kParallel)
      danse::kernels::Gemm(false, false, n, n, n, a, b, c, false);
    else
      danse::kernels::serial::Gemm(false, false, n, n, n, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void ConvArgs(benchmark::internal::Benchmark* b) {
  b->Args({16, 400})->Args({64, 100})->Args({128, 50});
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_ConvForward<false>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_ConvBackwardInput<true>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_ConvBackwardInput<false>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_ConvBackwardWeight<true>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_ConvBackwardWeight<false>)->Apply(ConvArgs)->UseRealTime();
BENCHMARK(BM_Gemm<true>)->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(BM_Gemm<false>)->Arg(64)->Arg(256)->UseRealTime();

BENCHMARK_MAIN();
