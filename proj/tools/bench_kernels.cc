// scenecrnn/tools/bench_kernels.cc

// Copyright 2026  The SceneCRNN Authors

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

// Compares the OpenMP kernels against their serial reference twins on the
// shapes the network actually runs (conv1 of the default configuration and a
// GRU-sized matmul).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "scenecrnn/kernels.h"
#include "scenecrnn/tensor.h"

using namespace scenecrnn;

namespace {

struct ConvCase {
  int64_t n, cin, h, w, cout, kh, kw;
};

// Batch-32 conv1 of the default configuration.
constexpr ConvCase kConv{32, 2, 64, 80, 64, 5, 5};

std::vector<float> randvec(size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto &x : v) x = dist(rng);
  return v;
}

template <bool Par>
void bench_conv_fwd(benchmark::State &state) {
  const auto x = randvec(static_cast<size_t>(kConv.n * kConv.cin * kConv.h * kConv.w), 1);
  const auto w = randvec(static_cast<size_t>(kConv.cout * kConv.cin * kConv.kh * kConv.kw), 2);
  const auto b = randvec(static_cast<size_t>(kConv.cout), 3);
  std::vector<float> y(static_cast<size_t>(kConv.n * kConv.cout * kConv.h * kConv.w));
  for (auto _ : state) {
    if constexpr (Par)
      kernels::conv2d_same_fwd(x.data(), w.data(), b.data(), y.data(), kConv.n,
                               kConv.cin, kConv.h, kConv.w, kConv.cout,
                               kConv.kh, kConv.kw);
    else
      kernels::serial::conv2d_same_fwd(x.data(), w.data(), b.data(), y.data(),
                                       kConv.n, kConv.cin, kConv.h, kConv.w,
                                       kConv.cout, kConv.kh, kConv.kw);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * kConv.n * kConv.cout * kConv.h *
                          kConv.w * kConv.cin * kConv.kh * kConv.kw);
}

template <bool Par>
void bench_conv_bwd_weights(benchmark::State &state) {
  const auto x = randvec(static_cast<size_t>(kConv.n * kConv.cin * kConv.h * kConv.w), 4);
  const auto gy = randvec(static_cast<size_t>(kConv.n * kConv.cout * kConv.h * kConv.w), 5);
  std::vector<float> gw(static_cast<size_t>(kConv.cout * kConv.cin * kConv.kh * kConv.kw));
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    if constexpr (Par)
      kernels::conv2d_same_bwd_weights(gy.data(), x.data(), gw.data(), kConv.n,
                                       kConv.cin, kConv.h, kConv.w, kConv.cout,
                                       kConv.kh, kConv.kw);
    else
      kernels::serial::conv2d_same_bwd_weights(gy.data(), x.data(), gw.data(),
                                               kConv.n, kConv.cin, kConv.h,
                                               kConv.w, kConv.cout, kConv.kh,
                                               kConv.kw);
    benchmark::ClobberMemory();
  }
}

template <bool Par>
void bench_matmul(benchmark::State &state) {
  const int64_t m = 100, k = 256, n = 256;
  const auto a = randvec(static_cast<size_t>(m * k), 6);
  const auto b = randvec(static_cast<size_t>(k * n), 7);
  std::vector<float> c(static_cast<size_t>(m * n));
  for (auto _ : state) {
    if constexpr (Par)
      kernels::matmul_nn(a.data(), b.data(), c.data(), m, k, n, false);
    else
      kernels::serial::matmul_nn(a.data(), b.data(), c.data(), m, k, n, false);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * m * k * n);
}

}  // namespace

BENCHMARK(bench_conv_fwd<false>)->Name("conv2d_fwd/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(bench_conv_fwd<true>)->Name("conv2d_fwd/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(bench_conv_bwd_weights<false>)
    ->Name("conv2d_bwd_weights/serial")
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bench_conv_bwd_weights<true>)
    ->Name("conv2d_bwd_weights/openmp")
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bench_matmul<false>)->Name("matmul_nn/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(bench_matmul<true>)->Name("matmul_nn/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
