// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark evaluation metrics: BT.601 studio-swing luma, PSNR and SSIM on
// border-cropped images.

#pragma once

#include <limits>
#include <vector>

#include "dimosr/tensor.hpp"

namespace dimosr {

struct EvalProtocol {
  /// Pixels removed from every edge before computing a metric.
  int border_crop = 0;
  /// Evaluate on luma only; otherwise average over all channels.
  bool y_only = true;

  static EvalProtocol for_scale(int scale) { return {scale, true}; }
};

/// PSNR reported for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255 for RGB in [0, 1].
/// Input (N, 3, H, W), output (N, 1, H, W).
Tensor rgb_to_y(const Tensor& image);

/// 10 log10(1 / MSE) over the cropped evaluation channel(s), inputs clamped
/// to [0, 1]. Returns kPsnrIdentical when MSE == 0. A 1-channel input is
/// taken to be luma already.
double psnr(const Tensor& a, const Tensor& b, const EvalProtocol& protocol);

/// Mean SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, valid-region filtering.
double ssim(const Tensor& a, const Tensor& b, const EvalProtocol& protocol);

/// Normalized 11x11 Gaussian window used by ssim (row-major).
std::vector<double> ssim_window();

}  // namespace dimosr
