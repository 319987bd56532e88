// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/gradsuite.hpp"

#include <cmath>

#include "dimosr/rng.hpp"
#include "dimosr/signal.hpp"

namespace dimosr {

namespace {

using ad::Tape;
using ad::Var;

TensorD random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Random values with magnitude in [0.3, 0.6] and random sign.
TensorD offset_tensor(const Shape& s, Rng& rng) {
  TensorD t(s);
  for (double& v : t.data()) v = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.3, 0.6);
  return t;
}

// Contracts a tensor output to a scalar with fixed random weights so every
// output element carries a distinct gradient.
Var<double> contract(const Var<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(y, y.tape()->constant(random_tensor(y.shape(), rng))));
}

struct Case {
  std::string name;
  ParameterStore<double> inputs;
  ad::ParameterFn fn;
};

std::vector<Case> op_cases(Rng& rng) {
  std::vector<Case> cases;
  auto add = [&](std::string name, std::vector<std::pair<std::string, TensorD>> inputs, ad::ParameterFn fn) {
    Case c{std::move(name), {}, std::move(fn)};
    for (auto& [n, t] : inputs) c.inputs.add(n, std::move(t));
    cases.push_back(std::move(c));
  };
  const Shape x8{2, 8, 8, 8};

  add("conv2d 3x3 + bias",
      {{"x", random_tensor({2, 4, 8, 8}, rng)}, {"w", random_tensor({5, 4, 3, 3}, rng)}, {"b", random_tensor(Shape::vector(5), rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::conv2d(t.parameter("x", p.at("x")), t.parameter("w", p.at("w")), t.parameter("b", p.at("b")), {1, 1}), 11);
      });
  add("conv2d 3x3 dilation 3",
      {{"x", random_tensor({2, 3, 8, 8}, rng)}, {"w", random_tensor({4, 3, 3, 3}, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::conv2d(t.parameter("x", p.at("x")), t.parameter("w", p.at("w")), {3, 3}), 12);
      });
  add("conv2d 3x3 dilation 12 (wider than input)",
      {{"x", random_tensor({1, 2, 8, 8}, rng)}, {"w", random_tensor({2, 2, 3, 3}, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::conv2d(t.parameter("x", p.at("x")), t.parameter("w", p.at("w")), {12, 12}), 13);
      });
  add("conv2d 1x1 + bias",
      {{"x", random_tensor(x8, rng)}, {"w", random_tensor({6, 8, 1, 1}, rng)}, {"b", random_tensor(Shape::vector(6), rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::conv2d(t.parameter("x", p.at("x")), t.parameter("w", p.at("w")), t.parameter("b", p.at("b")), {1, 0}), 14);
      });
  add("pixel_shuffle", {{"x", random_tensor({2, 8, 4, 4}, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::pixel_shuffle(t.parameter("x", p.at("x")), 2), 15);
      });
  add("layer_norm",
      {{"x", random_tensor(x8, rng)}, {"gain", random_tensor(Shape::vector(8), rng, 0.5, 1.5)}, {"shift", random_tensor(Shape::vector(8), rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::layer_norm(t.parameter("x", p.at("x")), t.parameter("gain", p.at("gain")), t.parameter("shift", p.at("shift"))), 16);
      });
  add("silu", {{"x", random_tensor(x8, rng, -4.0, 4.0)}},
      [](Tape<double>& t, const ParameterStore<double>& p) { return contract(ad::silu(t.parameter("x", p.at("x"))), 17); });
  add("sigmoid", {{"x", random_tensor(x8, rng, -4.0, 4.0)}},
      [](Tape<double>& t, const ParameterStore<double>& p) { return contract(ad::sigmoid(t.parameter("x", p.at("x"))), 18); });
  add("concat_channels", {{"a", random_tensor({2, 3, 8, 8}, rng)}, {"b", random_tensor({2, 5, 8, 8}, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::concat_channels<double>({t.parameter("a", p.at("a")), t.parameter("b", p.at("b"))}), 19);
      });
  add("slice_channels", {{"x", random_tensor(x8, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        return contract(ad::slice_channels(t.parameter("x", p.at("x")), 2, 7), 20);
      });
  add("chunk_channels", {{"x", random_tensor(x8, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        auto parts = ad::chunk_channels(t.parameter("x", p.at("x")), 4);
        return ad::add(contract(parts[0], 21), ad::add(contract(parts[1], 22), contract(parts[3], 23)));
      });
  add("add / sub / mul / scale", {{"a", random_tensor(x8, rng)}, {"b", random_tensor(x8, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        auto a = t.parameter("a", p.at("a"));
        auto b = t.parameter("b", p.at("b"));
        return contract(ad::scale(ad::mul(ad::add(a, b), ad::sub(a, b)), 0.75), 24);
      });
  add("sum / mean / sum_squares", {{"x", random_tensor(x8, rng)}},
      [](Tape<double>& t, const ParameterStore<double>& p) {
        auto x = t.parameter("x", p.at("x"));
        return ad::add(ad::scale(ad::sum(x), 0.1), ad::add(ad::mean(x), ad::sum_squares(x)));
      });
  {
    TensorD hr = random_tensor(x8, rng);
    TensorD sr = hr;
    const TensorD d = offset_tensor(x8, rng);
    for (std::int64_t i = 0; i < sr.numel(); ++i) sr[i] += d[i];
    add("mean_abs_diff", {{"sr", sr}, {"hr", hr}},
        [](Tape<double>& t, const ParameterStore<double>& p) {
          return ad::mean_abs_diff(t.parameter("sr", p.at("sr")), t.parameter("hr", p.at("hr")));
        });
    add("freq_loss", {{"sr", sr}, {"hr", hr}},
        [](Tape<double>& t, const ParameterStore<double>& p) {
          return freq_loss(t.parameter("sr", p.at("sr")), t.parameter("hr", p.at("hr")));
        });
    TensorD sr6 = random_tensor({1, 3, 6, 6}, rng);
    TensorD hr6 = random_tensor({1, 3, 6, 6}, rng);
    add("freq_loss (Bluestein 6x6)", {{"sr", sr6}, {"hr", hr6}},
        [](Tape<double>& t, const ParameterStore<double>& p) {
          return freq_loss(t.parameter("sr", p.at("sr")), t.parameter("hr", p.at("hr")));
        });
    add("total_loss", {{"sr", sr}, {"hr", hr}},
        [](Tape<double>& t, const ParameterStore<double>& p) {
          return total_loss(t.parameter("sr", p.at("sr")), t.parameter("hr", p.at("hr")), 0.05);
        });
  }
  return cases;
}

GradSuiteCase finish(std::string name, ad::GradCheckReport report, double max_degenerate) {
  GradSuiteCase c{std::move(name), std::move(report), false};
  const double allowed = max_degenerate * static_cast<double>(c.report.checked());
  c.passed = c.report.passed() && c.report.checked() > c.report.degenerate_count() &&
             static_cast<double>(c.report.degenerate_count()) <= std::max(1.0, allowed);
  return c;
}

}  // namespace

std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options,
                                          const std::function<void(const GradSuiteCase&)>& on_case) {
  std::vector<GradSuiteCase> results;
  auto emit = [&](GradSuiteCase c) {
    if (on_case) on_case(c);
    results.push_back(std::move(c));
  };
  Rng rng(options.seed);
  ad::GradCheckOptions op_opts{options.op_step, options.op_elements, options.seed};
  for (auto& c : op_cases(rng)) {
    emit(finish(c.name, ad::grad_check_parameters(c.fn, c.inputs, options.tolerance, op_opts),
                options.max_degenerate_fraction));
  }

  // Full network + training loss. The target is offset from the initial
  // prediction so the L1 terms stay away from their kinks.
  options.model.validate();
  Network<double> net = build_model<double>(options.model, options.seed);
  const TensorD lr = random_tensor(options.model_input, rng, 0.0, 1.0);
  TensorD hr = infer(net, lr);
  const TensorD d = offset_tensor(hr.shape(), rng);
  for (std::int64_t i = 0; i < hr.numel(); ++i) hr[i] -= d[i];
  const double lambda = options.lambda;
  ad::GradCheckOptions model_opts{options.model_step, options.model_elements, options.seed};
  ad::ParameterFn fn = [&](Tape<double>& t, const ParameterStore<double>&) {
    return total_loss(forward(net, t.constant(lr)), t.constant(hr), lambda);
  };
  emit(finish("full network + loss (" + std::to_string(param_count(options.model)) + " params)",
              ad::grad_check_parameters(fn, net.params, options.tolerance, model_opts),
              options.max_degenerate_fraction));
  return results;
}

}  // namespace dimosr
