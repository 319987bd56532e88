// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dimosr/kernels.hpp"
#include "dimosr/reference.hpp"
#include "oracles.hpp"

namespace dimosr {
namespace {

using testing::naive_conv2d;
using testing::random_tensor;

TEST(Conv2d, BoxSumOnConstantInput) {
  const Tensor x = Tensor::ones({1, 1, 3, 3});
  const Tensor w = Tensor::ones({1, 1, 3, 3});
  const Tensor y = kernels::conv2d(x, w, Tensor{}, {1, 1});
  EXPECT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_EQ(y.at(0, 0, 1, 1), 9.0f);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0f);
  EXPECT_EQ(y.at(0, 0, 2, 2), 4.0f);
  EXPECT_EQ(y.at(0, 0, 0, 1), 6.0f);
}

TEST(Conv2d, UnitPointwiseKernelIsIdentity) {
  const Tensor x = random_tensor<float>({2, 1, 5, 7}, 1);
  const Tensor y = kernels::conv2d(x, Tensor::ones({1, 1, 1, 1}), Tensor::zeros(Shape::vector(1)), {1, 0});
  EXPECT_TRUE(bitwise_equal(x, y));
}

TEST(Conv2d, DilatedImpulseResponseIsFlippedKernel) {
  TensorD x({1, 1, 9, 9});
  x.at(0, 0, 4, 4) = 1.0;
  TensorD w({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) w[i] = i + 1;
  const TensorD y = kernels::conv2d(x, w, TensorD{}, {4, 4});
  const TensorD oracle = naive_conv2d(x, w, nullptr, 4, 4);
  ASSERT_EQ(y.shape(), oracle.shape());
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx) {
      // Cross-correlation: the kernel appears flipped around the impulse.
      EXPECT_EQ(y.at(0, 0, 4 - 4 * (ky - 1), 4 - 4 * (kx - 1)), w.at(0, 0, ky, kx));
    }
  for (std::int64_t i = 0; i < y.numel(); ++i) EXPECT_EQ(y[i], oracle[i]);
  double total = 0;
  for (double v : y.data()) total += v;
  EXPECT_EQ(total, 45.0);
}

struct ConvCase {
  Shape in;
  int cout, k, dilation, padding;
  bool bias;
};

class Conv2dOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(Conv2dOracle, MatchesDirectSummation) {
  const ConvCase p = GetParam();
  const TensorD x = random_tensor<double>(p.in, 3);
  const TensorD w = random_tensor<double>({p.cout, p.in.c, p.k, p.k}, 4);
  const TensorD b = random_tensor<double>(Shape::vector(p.cout), 5);
  const TensorD y = kernels::conv2d(x, w, p.bias ? b : TensorD{}, {p.dilation, p.padding});
  const TensorD oracle = naive_conv2d(x, w, p.bias ? &b : nullptr, p.dilation, p.padding);
  ASSERT_EQ(y.shape(), oracle.shape());
  EXPECT_LT(max_abs_diff(y, oracle), 1e-12);
  const TensorD ref = reference::conv2d(x, w, p.bias ? b : TensorD{}, {p.dilation, p.padding});
  EXPECT_LT(max_abs_diff(ref, oracle), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Geometries, Conv2dOracle,
                         ::testing::Values(ConvCase{{2, 3, 8, 8}, 4, 3, 1, 1, true},
                                           ConvCase{{1, 2, 9, 7}, 3, 3, 2, 2, false},
                                           ConvCase{{1, 4, 8, 8}, 2, 3, 4, 4, true},
                                           ConvCase{{1, 2, 8, 8}, 2, 3, 16, 16, true},
                                           ConvCase{{2, 5, 6, 6}, 3, 1, 1, 0, true},
                                           ConvCase{{1, 2, 7, 7}, 2, 3, 1, 0, false},
                                           ConvCase{{1, 1, 10, 10}, 1, 3, 3, 1, false}));

TEST(Conv2d, BackwardMatchesReference) {
  for (const ConvCase& p : {ConvCase{{2, 3, 8, 8}, 4, 3, 1, 1, true}, ConvCase{{1, 4, 8, 8}, 2, 3, 4, 4, false},
                            ConvCase{{2, 5, 6, 6}, 3, 1, 1, 0, true}, ConvCase{{1, 2, 7, 9}, 3, 3, 2, 0, false}}) {
    const TensorD x = random_tensor<double>(p.in, 6);
    const TensorD w = random_tensor<double>({p.cout, p.in.c, p.k, p.k}, 7);
    const ConvGeometry g{p.dilation, p.padding};
    const TensorD go = random_tensor<double>(kernels::conv2d(x, w, TensorD{}, g).shape(), 8);
    EXPECT_LT(max_abs_diff(kernels::conv2d_grad_input(go, w, x.shape(), g),
                           reference::conv2d_grad_input(go, w, x.shape(), g)), 1e-12);
    EXPECT_LT(max_abs_diff(kernels::conv2d_grad_weight(go, x, w.shape(), g),
                           reference::conv2d_grad_weight(go, x, w.shape(), g)), 1e-12);
  }
}

TEST(Conv2d, OneHotKernelIsShift) {
  const Tensor x = random_tensor<float>({1, 1, 10, 10}, 9);
  for (int d : {1, 2, 3}) {
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        Tensor w({1, 1, 3, 3});
        w.at(0, 0, ky, kx) = 1.0f;
        const Tensor y = kernels::conv2d(x, w, Tensor{}, {d, d});
        const int sy = (ky - 1) * d, sx = (kx - 1) * d;
        for (int i = 0; i < 10; ++i)
          for (int j = 0; j < 10; ++j) {
            const int yi = i + sy, xj = j + sx;
            const float expect = (yi >= 0 && yi < 10 && xj >= 0 && xj < 10) ? x.at(0, 0, yi, xj) : 0.0f;
            ASSERT_EQ(y.at(0, 0, i, j), expect);
          }
      }
  }
}

TEST(Conv2d, IsLinear) {
  const Tensor x = random_tensor<float>({2, 3, 8, 8}, 10);
  const Tensor z = random_tensor<float>({2, 3, 8, 8}, 11);
  const Tensor w = random_tensor<float>({4, 3, 3, 3}, 12);
  const float a = 0.7f, b = -1.3f;
  const Tensor lhs = kernels::conv2d(kernels::add(kernels::scale(x, a), kernels::scale(z, b)), w, Tensor{}, {2, 2});
  const Tensor rhs = kernels::add(kernels::scale(kernels::conv2d(x, w, Tensor{}, {2, 2}), a),
                                  kernels::scale(kernels::conv2d(z, w, Tensor{}, {2, 2}), b));
  for (std::int64_t i = 0; i < lhs.numel(); ++i) {
    EXPECT_NEAR(lhs[i], rhs[i], 1e-5 * std::max(1.0f, std::abs(rhs[i])));
  }
}

TEST(Conv2d, ShapeErrorsNameTheAxis) {
  const Tensor x({1, 3, 8, 8});
  try {
    kernels::conv2d(x, Tensor({2, 4, 3, 3}), Tensor{}, {1, 1});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("input channels"), std::string::npos);
  }
  EXPECT_THROW(kernels::conv2d(Tensor({1, 1, 2, 2}), Tensor({1, 1, 3, 3}), Tensor{}, {2, 0}), ShapeError);
  EXPECT_THROW(kernels::conv2d(x, Tensor({2, 3, 3, 3}), Tensor(Shape::vector(3)), {1, 1}), ShapeError);
}

TEST(Conv2d, RepeatedCallsAreBitIdentical) {
  const Tensor x = random_tensor<float>({2, 8, 16, 16}, 13);
  const Tensor w = random_tensor<float>({8, 8, 3, 3}, 14);
  const Tensor go = random_tensor<float>({2, 8, 16, 16}, 15);
  EXPECT_TRUE(bitwise_equal(kernels::conv2d(x, w, Tensor{}, {4, 4}), kernels::conv2d(x, w, Tensor{}, {4, 4})));
  EXPECT_TRUE(bitwise_equal(kernels::conv2d_grad_weight(go, x, w.shape(), {4, 4}),
                            kernels::conv2d_grad_weight(go, x, w.shape(), {4, 4})));
}

TEST(PixelShuffle, TilingPattern) {
  Tensor x({1, 4, 2, 2});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i) x[c * 4 + i] = static_cast<float>(c);
  const Tensor y = kernels::pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  const float expect[4][4] = {{0, 1, 0, 1}, {2, 3, 2, 3}, {0, 1, 0, 1}, {2, 3, 2, 3}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(y.at(0, 0, i, j), expect[i][j]);
}

TEST(PixelShuffle, FactorOneIsIdentity) {
  const Tensor x = random_tensor<float>({2, 3, 4, 5}, 16);
  EXPECT_TRUE(bitwise_equal(kernels::pixel_shuffle(x, 1), x));
}

TEST(PixelShuffle, MatchesIndexOracleAndPreservesMultiset) {
  const Tensor x = random_tensor<float>({2, 8, 3, 5}, 17);
  const int r = 2;
  const Tensor y = kernels::pixel_shuffle(x, r);
  ASSERT_EQ(y.shape(), (Shape{2, 2, 6, 10}));
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t c = 0; c < 2; ++c)
      for (std::int64_t oy = 0; oy < 6; ++oy)
        for (std::int64_t ox = 0; ox < 10; ++ox) {
          const std::int64_t h = oy / r, i = oy % r, w = ox / r, j = ox % r;
          ASSERT_EQ(y.at(n, c, oy, ox), x.at(n, c * r * r + i * r + j, h, w));
        }
  std::vector<float> a(x.data().begin(), x.data().end()), b(y.data().begin(), y.data().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_TRUE(bitwise_equal(kernels::pixel_unshuffle(y, r), x));
  EXPECT_TRUE(bitwise_equal(reference::pixel_shuffle(x, r), y));
  EXPECT_THROW(kernels::pixel_shuffle(Tensor({1, 6, 2, 2}), 2), ShapeError);
}

TEST(LayerNorm, NormalizedVectorIsUnchanged) {
  TensorD x({1, 2, 1, 1}, {1.0, -1.0});
  const TensorD y = kernels::layer_norm(x, TensorD::ones(Shape::vector(2)), TensorD::zeros(Shape::vector(2)), kLayerNormEps);
  EXPECT_NEAR(y[0], 1.0, 1e-6);
  EXPECT_NEAR(y[1], -1.0, 1e-6);
}

TEST(LayerNorm, ConstantInputCollapsesToShift) {
  const Tensor x = Tensor::full({1, 4, 3, 3}, 2.5f);
  const Tensor y = kernels::layer_norm(x, Tensor::ones(Shape::vector(4)), Tensor::zeros(Shape::vector(4)), kLayerNormEps);
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(LayerNorm, PerSiteMoments) {
  const TensorD x = random_tensor<double>({1, 8, 4, 4}, 18, -3.0, 3.0);
  const TensorD y = kernels::layer_norm(x, TensorD::ones(Shape::vector(8)), TensorD::zeros(Shape::vector(8)), 1e-6);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double m = 0, v = 0;
      for (int c = 0; c < 8; ++c) m += y.at(0, c, i, j);
      m /= 8;
      for (int c = 0; c < 8; ++c) v += (y.at(0, c, i, j) - m) * (y.at(0, c, i, j) - m);
      v /= 8;
      EXPECT_LT(std::abs(m), 1e-6);
      EXPECT_NEAR(v, 1.0, 1e-4);
    }
}

TEST(LayerNorm, InvariantToChannelMeanShift) {
  const Tensor x = random_tensor<float>({2, 6, 5, 5}, 19);
  const Tensor gain = random_tensor<float>(Shape::vector(6), 20, 0.5, 1.5);
  const Tensor shift = random_tensor<float>(Shape::vector(6), 21);
  Tensor xs = x;
  for (float& v : xs.data()) v += 3.25f;
  const Tensor a = kernels::layer_norm(x, gain, shift, kLayerNormEps);
  const Tensor b = kernels::layer_norm(xs, gain, shift, kLayerNormEps);
  EXPECT_LT(max_abs_diff(a, b), 1e-5);
}

TEST(LayerNorm, MatchesReferenceForwardAndBackward) {
  const TensorD x = random_tensor<double>({2, 8, 4, 4}, 22);
  const TensorD gain = random_tensor<double>(Shape::vector(8), 23, 0.5, 1.5);
  const TensorD shift = random_tensor<double>(Shape::vector(8), 24);
  const TensorD go = random_tensor<double>(x.shape(), 25);
  LayerNormStats<double> stats;
  const TensorD y = kernels::layer_norm(x, gain, shift, kLayerNormEps, &stats);
  EXPECT_LT(max_abs_diff(y, reference::layer_norm(x, gain, shift, kLayerNormEps)), 1e-12);
  const auto g = kernels::layer_norm_backward(go, x, gain, stats);
  const auto r = reference::layer_norm_backward(go, x, gain, kLayerNormEps);
  EXPECT_LT(max_abs_diff(g.input, r.input), 1e-10);
  EXPECT_LT(max_abs_diff(g.gain, r.gain), 1e-10);
  EXPECT_LT(max_abs_diff(g.shift, r.shift), 1e-10);
  EXPECT_THROW(kernels::layer_norm(x, TensorD::ones(Shape::vector(7)), shift, kLayerNormEps), ShapeError);
}

TEST(Activations, AnalyticValues) {
  const Tensor z = Tensor::zeros({1, 1, 1, 1});
  EXPECT_EQ(kernels::silu(z)[0], 0.0f);
  EXPECT_EQ(kernels::sigmoid(z)[0], 0.5f);
  const TensorD big = TensorD::full({1, 1, 1, 1}, 20.0);
  EXPECT_NEAR(kernels::silu(big)[0], 20.0, 1e-6);
}

TEST(Activations, SigmoidSymmetry) {
  const Tensor x = random_tensor<float>({1, 4, 8, 8}, 26, -8.0, 8.0);
  const Tensor pos = kernels::sigmoid(x);
  const Tensor neg = kernels::sigmoid(kernels::scale(x, -1.0f));
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(neg[i], 1.0f - pos[i], 1e-7);
  const Tensor big = Tensor::full({1, 1, 1, 2}, 100.0f);
  EXPECT_TRUE(all_finite(kernels::sigmoid(kernels::scale(big, -1.0f))));
  EXPECT_TRUE(all_finite(kernels::silu(kernels::scale(big, -1.0f))));
}

TEST(Channels, ConcatAndChunk) {
  const Tensor a = random_tensor<float>({1, 2, 2, 2}, 27);
  const Tensor b = random_tensor<float>({1, 3, 2, 2}, 28);
  EXPECT_EQ(kernels::concat_channels<float>({a, b}).shape(), (Shape{1, 5, 2, 2}));

  const Tensor x = random_tensor<float>({1, 6, 2, 2}, 29);
  const auto parts = kernels::chunk_channels(x, 3);
  ASSERT_EQ(parts.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(parts[k].shape(), (Shape{1, 2, 2, 2}));
    EXPECT_TRUE(bitwise_equal(parts[k], kernels::slice_channels(x, 2 * k, 2 * k + 2)));
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 4; ++i) EXPECT_EQ(parts[k][c * 4 + i], x[(2 * k + c) * 4 + i]);
  }
  EXPECT_THROW(kernels::chunk_channels(x, 4), ShapeError);
  EXPECT_THROW(kernels::concat_channels<float>({a, Tensor({1, 1, 3, 2})}), ShapeError);
}

TEST(Channels, ConcatChunkRoundTrip) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor a = random_tensor<float>({2, 3, 4, 5}, 100 + seed);
    const Tensor b = random_tensor<float>({2, 3, 4, 5}, 200 + seed);
    const Tensor c = random_tensor<float>({2, 3, 4, 5}, 300 + seed);
    const auto parts = kernels::chunk_channels(kernels::concat_channels<float>({a, b, c}), 3);
    EXPECT_TRUE(bitwise_equal(parts[0], a));
    EXPECT_TRUE(bitwise_equal(parts[1], b));
    EXPECT_TRUE(bitwise_equal(parts[2], c));
  }
}

TEST(Elementwise, ShapeMismatchThrows) {
  EXPECT_THROW(kernels::add(Tensor({1, 1, 2, 2}), Tensor({1, 1, 2, 3})), ShapeError);
  EXPECT_THROW(kernels::mul(Tensor({1, 2, 2, 2}), Tensor({1, 1, 2, 2})), ShapeError);
}

TEST(Tensor, ConstructionChecksLength) {
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}, std::vector<float>(3)), ShapeError);
  const Tensor t(Shape{1, 2, 3, 4});
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.data().size(), 24u);
}

}  // namespace
}  // namespace dimosr
