// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Straight-line scalar re-implementations used as test oracles. They share
// no code with the library kernels.

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dimosr/model.hpp"
#include "dimosr/rng.hpp"

namespace dimosr::testing {

template <typename T>
BasicTensor<T> random_tensor(const Shape& s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  BasicTensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

/// Direct per-output-element dilated cross-correlation with zero padding.
TensorD naive_conv2d(const TensorD& x, const TensorD& w, const TensorD* bias, int dilation, int padding);

/// O(N^2) 2-D DFT of one H x W plane (row-major).
std::vector<std::complex<double>> naive_dft2(const std::vector<double>& plane, std::int64_t h, std::int64_t w);

/// FEB and ERB of block `block` written directly from their defining
/// equations, reading parameters by name.
TensorD naive_feb(const ModelConfig& cfg, const ParameterStore<double>& p, int block, const TensorD& x);
TensorD naive_erb(const ModelConfig& cfg, const ParameterStore<double>& p, int block, const TensorD& x);

/// Scalar-loop PSNR / SSIM on the Y channel with an s-pixel border crop.
double naive_psnr_y(const Tensor& a, const Tensor& b, int crop);
double naive_ssim_y(const Tensor& a, const Tensor& b, int crop);

}  // namespace dimosr::testing
