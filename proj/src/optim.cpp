// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dimosr {

AdamState AdamState::for_params(const ParameterStore<float>& params, double beta1, double beta2,
                                double eps) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  for (const auto& [name, p] : params) {
    s.m.add(name, Tensor::zeros(p.shape()));
    s.v.add(name, Tensor::zeros(p.shape()));
  }
  return s;
}

void adam_step(ParameterStore<float>& params, const GradientMap<float>& grads, AdamState& state,
               double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ContractError("adam_step: learning rate must be finite and >= 0, got " + std::to_string(lr));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const float b1 = static_cast<float>(state.beta1), b2 = static_cast<float>(state.beta2);
  for (auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ShapeError("adam_step: no gradient for '" + name + "'");
    const Tensor& g = it->second;
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    if (g.shape() != p.shape() || m.shape() != p.shape() || v.shape() != p.shape()) {
      throw ShapeError("adam_step: shape mismatch for '" + name + "': param " + p.shape().str() +
                       ", grad " + g.shape().str());
    }
    const std::int64_t n = p.numel();
    float* pd = p.data().data();
    float* md = m.data().data();
    float* vd = v.data().data();
    const float* gd = g.data().data();
#pragma omp parallel for schedule(static) if (n > 4096)
    for (std::int64_t i = 0; i < n; ++i) {
      md[i] = b1 * md[i] + (1.0f - b1) * gd[i];
      vd[i] = b2 * vd[i] + (1.0f - b2) * gd[i] * gd[i];
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      pd[i] = static_cast<float>(pd[i] - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr_start, double lr_min) {
  if (total <= 0 || t >= total) return lr_min;
  if (t <= 0) return lr_start;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_start - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace dimosr
