// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "dimosr/parameters.hpp"

namespace dimosr {

/// Bias-corrected Adam moments for a parameter store.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::int64_t step = 0;
  ParameterStore<float> m;
  ParameterStore<float> v;

  /// Zero moments shaped like `params`.
  static AdamState for_params(const ParameterStore<float>& params, double beta1 = 0.9,
                              double beta2 = 0.99, double eps = 1e-8);
};

/// One Adam update. Every parameter needs a gradient of the same shape
/// (ShapeError otherwise); lr must be finite and non-negative.
void adam_step(ParameterStore<float>& params, const GradientMap<float>& grads, AdamState& state,
               double lr);

/// Half-cosine from lr_start at t = 0 to lr_min at t = total; lr_min for t > total.
double cosine_lr(std::int64_t t, std::int64_t total, double lr_start, double lr_min);

}  // namespace dimosr
