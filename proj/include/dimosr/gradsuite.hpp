// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks of every differentiable operation and of the
// full network + training loss, all in double precision.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dimosr/autodiff.hpp"
#include "dimosr/model.hpp"

namespace dimosr {

struct GradSuiteOptions {
  double tolerance = 1e-4;
  /// Elements probed per tensor in the single-operation cases (<= 0: all).
  std::int64_t op_elements = 0;
  /// Elements probed per parameter tensor in the full-model case.
  std::int64_t model_elements = 2;
  /// Central-difference steps. The model case uses a small step so that a
  /// probe rarely straddles a kink of the L1 terms in the frequency domain.
  double op_step = 1e-4;
  double model_step = 1e-6;
  /// Probed entries whose difference quotient does not converge are
  /// excluded, but no more than this fraction of a case may be.
  double max_degenerate_fraction = 0.01;
  std::uint64_t seed = 7;
  ModelConfig model = ModelConfig::preset("dimosr", 4);
  /// LR input of the full-model case.
  Shape model_input{1, 3, 8, 8};
  double lambda = 0.05;
};

struct GradSuiteCase {
  std::string name;
  ad::GradCheckReport report;
  bool passed = false;
};

/// Runs all cases in order; `on_case` is called after each one.
std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options,
                                          const std::function<void(const GradSuiteCase&)>& on_case = {});

}  // namespace dimosr
