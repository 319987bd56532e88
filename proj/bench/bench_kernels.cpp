// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels against the serial reference on network-sized layers.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "dimosr/kernels.hpp"
#include "dimosr/model.hpp"
#include "dimosr/reference.hpp"
#include "dimosr/rng.hpp"

namespace dimosr {
namespace {

Tensor random(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

struct ConvCase {
  std::int64_t in, out, kernel;
  int dilation;
};

// 3x3 body conv, dilated branch conv, 1x1 fusion.
constexpr ConvCase kCases[] = {{36, 36, 3, 1}, {9, 9, 3, 16}, {72, 36, 1, 1}};
constexpr std::int64_t kSide = 64;

ConvGeometry geometry(const ConvCase& c) {
  return {c.dilation, c.dilation * static_cast<int>(c.kernel / 2)};
}

template <bool Reference>
void BM_Conv2d(benchmark::State& state) {
  const ConvCase c = kCases[state.range(0)];
  const Tensor x = random({1, c.in, kSide, kSide}, 1);
  const Tensor w = random({c.out, c.in, c.kernel, c.kernel}, 2);
  const Tensor b = random(Shape::vector(c.out), 3);
  for (auto _ : state) {
    Tensor y = Reference ? reference::conv2d(x, w, b, geometry(c)) : kernels::conv2d(x, w, b, geometry(c));
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(c.in * c.out * c.kernel * c.kernel * kSide * kSide), benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Reference>
void BM_Conv2dGradInput(benchmark::State& state) {
  const ConvCase c = kCases[state.range(0)];
  const Tensor g = random({1, c.out, kSide, kSide}, 1);
  const Tensor w = random({c.out, c.in, c.kernel, c.kernel}, 2);
  const Shape xs{1, c.in, kSide, kSide};
  for (auto _ : state) {
    Tensor dx = Reference ? reference::conv2d_grad_input(g, w, xs, geometry(c))
                          : kernels::conv2d_grad_input(g, w, xs, geometry(c));
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool Reference>
void BM_Conv2dGradWeight(benchmark::State& state) {
  const ConvCase c = kCases[state.range(0)];
  const Tensor g = random({1, c.out, kSide, kSide}, 1);
  const Tensor x = random({1, c.in, kSide, kSide}, 2);
  const Shape ws{c.out, c.in, c.kernel, c.kernel};
  for (auto _ : state) {
    Tensor dw = Reference ? reference::conv2d_grad_weight(g, x, ws, geometry(c))
                          : kernels::conv2d_grad_weight(g, x, ws, geometry(c));
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool Reference>
void BM_LayerNorm(benchmark::State& state) {
  const Tensor x = random({1, 36, kSide, kSide}, 1);
  const Tensor gain = random(Shape::vector(36), 2), shift = random(Shape::vector(36), 3);
  for (auto _ : state) {
    Tensor y = Reference ? reference::layer_norm(x, gain, shift, kLayerNormEps)
                         : kernels::layer_norm(x, gain, shift, kLayerNormEps);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Reference>
void BM_PixelShuffle(benchmark::State& state) {
  const Tensor x = random({1, 48, kSide, kSide}, 1);
  for (auto _ : state) {
    Tensor y = Reference ? reference::pixel_shuffle(x, 4) : kernels::pixel_shuffle(x, 4);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_ForwardToy(benchmark::State& state) {
  const Network<float> net = build_model<float>(ModelConfig::preset("toy", 2), 1);
  const Tensor lr = random({1, 3, 48, 48}, 4);
  for (auto _ : state) {
    Tensor sr = infer(net, lr);
    benchmark::DoNotOptimize(sr.data());
  }
}

BENCHMARK(BM_Conv2d<true>)->Name("conv2d/reference")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d<false>)->Name("conv2d/openmp")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dGradInput<true>)->Name("conv2d_grad_input/reference")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dGradInput<false>)->Name("conv2d_grad_input/openmp")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dGradWeight<true>)->Name("conv2d_grad_weight/reference")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dGradWeight<false>)->Name("conv2d_grad_weight/openmp")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LayerNorm<true>)->Name("layer_norm/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LayerNorm<false>)->Name("layer_norm/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PixelShuffle<true>)->Name("pixel_shuffle/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PixelShuffle<false>)->Name("pixel_shuffle/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ForwardToy)->Name("forward/toy_x2_48px")->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dimosr

BENCHMARK_MAIN();
