// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dimosr/signal.hpp"
#include "oracles.hpp"

namespace dimosr {
namespace {

using testing::random_tensor;

TEST(Fft2, ImpulseGivesFlatSpectrum) {
  TensorD x({1, 1, 8, 6});
  x.at(0, 0, 0, 0) = 1.0;
  const auto f = fft2(x);
  for (double v : f.real.data()) EXPECT_NEAR(v, 1.0, 1e-12);
  for (double v : f.imag.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Fft2, ConstantGivesDcOnly) {
  const double c = 0.37;
  const auto f = fft2(TensorD::full({1, 2, 8, 8}, c));
  for (int ch = 0; ch < 2; ++ch)
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v) {
        const double want = (u == 0 && v == 0) ? c * 64 : 0.0;
        EXPECT_NEAR(f.real.at(0, ch, u, v), want, 1e-12);
        EXPECT_NEAR(f.imag.at(0, ch, u, v), 0.0, 1e-12);
      }
}

void expect_matches_naive(std::int64_t h, std::int64_t w, std::uint64_t seed, double tol) {
  const TensorD x = random_tensor<double>({1, 2, h, w}, seed);
  const auto f = fft2(x);
  for (int ch = 0; ch < 2; ++ch) {
    std::vector<double> plane(x.plane(0, ch), x.plane(0, ch) + h * w);
    const auto ref = testing::naive_dft2(plane, h, w);
    for (std::int64_t i = 0; i < h * w; ++i) {
      ASSERT_NEAR(f.real.plane(0, ch)[i], ref[i].real(), tol) << h << "x" << w << " bin " << i;
      ASSERT_NEAR(f.imag.plane(0, ch)[i], ref[i].imag(), tol) << h << "x" << w << " bin " << i;
    }
  }
}

TEST(Fft2, MatchesNaiveDft16) { expect_matches_naive(16, 16, 1, 1e-5); }

class FftSizes : public ::testing::TestWithParam<int> {};

TEST_P(FftSizes, MatchesNaiveDft) {
  const int n = GetParam();
  expect_matches_naive(n, n, 10 + n, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(PowerOfTwo, FftSizes, ::testing::Values(4, 8, 16, 32, 64));
INSTANTIATE_TEST_SUITE_P(Bluestein, FftSizes, ::testing::Values(6, 10, 12, 20));

TEST(Fft2, MixedAndOddExtents) {
  expect_matches_naive(6, 16, 2, 1e-5);
  expect_matches_naive(7, 5, 3, 1e-5);
  expect_matches_naive(1, 9, 4, 1e-5);
  expect_matches_naive(1, 1, 5, 1e-5);
}

TEST(Fft2, IsLinear) {
  const TensorD x = random_tensor<double>({1, 1, 12, 16}, 6);
  const TensorD y = random_tensor<double>({1, 1, 12, 16}, 7);
  const double a = -1.7;
  const auto lhs = fft2(kernels::add(kernels::scale(x, a), y));
  const auto fx = fft2(x), fy = fft2(y);
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(lhs.real[i], a * fx.real[i] + fy.real[i], 1e-5);
    EXPECT_NEAR(lhs.imag[i], a * fx.imag[i] + fy.imag[i], 1e-5);
  }
}

TEST(Fft2, Parseval) {
  for (auto [h, w] : {std::pair{16, 16}, std::pair{10, 12}}) {
    const TensorD x = random_tensor<double>({1, 1, h, w}, 8 + h);
    const auto f = fft2(x);
    double energy = 0, spectral = 0;
    for (double v : x.data()) energy += v * v;
    for (std::int64_t i = 0; i < x.numel(); ++i) spectral += f.real[i] * f.real[i] + f.imag[i] * f.imag[i];
    EXPECT_NEAR(spectral / (h * w), energy, 1e-4 * energy);
  }
}

TEST(Fft2, InverseRoundTrip) {
  const TensorD x = random_tensor<double>({2, 1, 6, 8}, 9);
  const auto back = fft2(fft2(x), true);
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(back.real[i] / 48.0, x[i], 1e-12);
    EXPECT_NEAR(back.imag[i] / 48.0, 0.0, 1e-12);
  }
}

TEST(FreqLoss, ZeroForIdenticalInputs) {
  const Tensor x = random_tensor<float>({2, 3, 8, 8}, 10);
  EXPECT_EQ(freq_loss_value(x, x), 0.0f);
}

TEST(FreqLoss, ConstantOffsetLandsInDcBin) {
  // Offset c moves only the DC bin, by c*H*W in the real part:
  // mean over H*W bins of |c|*H*W == |c|.
  const TensorD x = random_tensor<double>({1, 3, 8, 12}, 11);
  const double c = 0.1;
  TensorD y = x;
  for (double& v : y.data()) v += c;
  EXPECT_NEAR(freq_loss_value(x, y), c, 1e-12);

  // Independent check via the naive DFT of the difference.
  double total = 0;
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> d(96);
    for (int i = 0; i < 96; ++i) d[i] = y.plane(0, ch)[i] - x.plane(0, ch)[i];
    for (const auto& z : testing::naive_dft2(d, 8, 12)) total += std::abs(z.real()) + std::abs(z.imag());
  }
  EXPECT_NEAR(total / (3 * 96), c, 1e-10);
}

TEST(FreqLoss, MatchesNaiveDftOnRandomPairs) {
  const TensorD a = random_tensor<double>({2, 2, 6, 8}, 12);
  const TensorD b = random_tensor<double>({2, 2, 6, 8}, 13);
  double total = 0;
  for (int n = 0; n < 2; ++n)
    for (int ch = 0; ch < 2; ++ch) {
      std::vector<double> d(48);
      for (int i = 0; i < 48; ++i) d[i] = a.plane(n, ch)[i] - b.plane(n, ch)[i];
      for (const auto& z : testing::naive_dft2(d, 6, 8)) total += std::abs(z.real()) + std::abs(z.imag());
    }
  EXPECT_NEAR(freq_loss_value(a, b), total / a.numel(), 1e-10);
}

TEST(FreqLoss, IsSymmetric) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Tensor a = random_tensor<float>({1, 3, 16, 10}, 20 + s);
    const Tensor b = random_tensor<float>({1, 3, 16, 10}, 30 + s);
    EXPECT_EQ(freq_loss_value(a, b), freq_loss_value(b, a));
  }
}

TEST(FreqLoss, ZeroOnlyForEqualInputs) {
  const Tensor a = random_tensor<float>({1, 1, 8, 8}, 40);
  Tensor b = a;
  b[17] = std::nextafter(b[17], 2.0f);
  EXPECT_GT(freq_loss_value(a, b), 0.0f);
  EXPECT_THROW(freq_loss_value(a, Tensor({1, 1, 8, 4})), ShapeError);
}

TEST(FreqLoss, GradientMatchesFiniteDifferences) {
  const TensorD hr = random_tensor<double>({1, 2, 8, 8}, 41);
  const auto report = ad::grad_check(
      [&](const ad::Var<double>& sr) { return freq_loss(sr, sr.tape()->constant(hr)); },
      random_tensor<double>({1, 2, 8, 8}, 42), 1e-4);
  EXPECT_TRUE(report.passed()) << report.max_rel_error();
}

double eval_total(const TensorD& sr, const TensorD& hr, double lambda) {
  ad::Tape<double> tape(false);
  return total_loss(tape.constant(sr), tape.constant(hr), lambda).value().item();
}

TEST(TotalLoss, Examples) {
  const TensorD x = random_tensor<double>({1, 3, 8, 8}, 43);
  EXPECT_EQ(eval_total(x, x, 0.05), 0.0);

  const TensorD y = random_tensor<double>({1, 3, 8, 8}, 44);
  double mae = 0;
  for (std::int64_t i = 0; i < x.numel(); ++i) mae += std::abs(x[i] - y[i]);
  mae /= static_cast<double>(x.numel());
  EXPECT_NEAR(eval_total(x, y, 0.0), mae, 1e-14);
  EXPECT_NEAR(eval_total(x, y, 0.05), mae + 0.05 * freq_loss_value(x, y), 1e-12);

  TensorD off = x;
  for (double& v : off.data()) v += 0.1;
  EXPECT_NEAR(eval_total(off, x, 0.0), 0.1, 1e-12);
  EXPECT_NEAR(eval_total(off, x, 0.05), 0.1 + 0.05 * freq_loss_value(off, x), 1e-12);
}

}  // namespace
}  // namespace dimosr
