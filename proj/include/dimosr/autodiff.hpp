// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode differentiation. Operations on `Var`s compute
// their value eagerly through dimosr::kernels and, when the owning tape is
// recording, append a node holding a backward closure. `Tape::backward`
// walks the nodes in reverse, summing gradients where a value fans out.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dimosr/kernels.hpp"
#include "dimosr/parameters.hpp"
#include "dimosr/tensor.hpp"

namespace dimosr::ad {

template <typename T>
class Tape;

/// Handle to a value produced on a tape. Cheap to copy; values are shared
/// and immutable.
template <typename T>
class Var {
 public:
  Var() = default;

  const BasicTensor<T>& value() const { return *value_; }
  const Shape& shape() const { return value_->shape(); }
  Tape<T>* tape() const { return tape_; }
  std::int64_t node() const { return node_; }
  bool tracked() const { return node_ >= 0; }
  bool valid() const { return static_cast<bool>(value_); }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::shared_ptr<const BasicTensor<T>> value, std::int64_t node)
      : tape_(tape), value_(std::move(value)), node_(node) {}

  Tape<T>* tape_ = nullptr;
  std::shared_ptr<const BasicTensor<T>> value_;
  std::int64_t node_ = -1;
};

/// Receives input gradients from a node's backward closure.
template <typename T>
class GradSink {
 public:
  /// False when input `slot` does not lead to anything differentiable, so
  /// the closure may skip computing its gradient.
  bool wants(std::size_t slot) const { return wanted_[slot]; }
  void accumulate(std::size_t slot, BasicTensor<T> grad);

 private:
  friend class Tape<T>;
  GradSink(Tape<T>& tape, const std::vector<std::int64_t>& inputs);
  Tape<T>& tape_;
  const std::vector<std::int64_t>& inputs_;
  std::vector<bool> wanted_;
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(const BasicTensor<T>& grad_out, GradSink<T>& sink)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  /// Non-differentiable input.
  Var<T> constant(BasicTensor<T> value);

  /// Differentiable leaf that is not a named parameter (gradient checks).
  Var<T> variable(BasicTensor<T> value);

  /// Named trainable tensor. Repeated calls with the same name return the
  /// same leaf, so gradients from every use are summed.
  Var<T> parameter(const std::string& name, const BasicTensor<T>& value);

  /// Appends an operation node. Returns an untracked Var when the tape is
  /// not recording or no input is tracked.
  Var<T> record(BasicTensor<T> value, const std::vector<Var<T>>& inputs, Backward backward);

  /// Reverse sweep from a scalar loss. Returns d(loss)/d(parameter) for every
  /// parameter registered on this tape; unreachable ones get zeros.
  GradientMap<T> backward(const Var<T>& loss);

  /// Gradient of a leaf after backward(); zeros if the loss did not reach it.
  BasicTensor<T> grad(const Var<T>& v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class GradSink<T>;

  struct Node {
    std::shared_ptr<const BasicTensor<T>> value;
    std::vector<std::int64_t> inputs;
    Backward backward;
  };

  Var<T> leaf(BasicTensor<T> value);

  bool recording_;
  std::vector<Node> nodes_;
  std::vector<std::optional<BasicTensor<T>>> grads_;
  std::vector<std::pair<std::string, std::int64_t>> params_;
  std::map<std::string, Var<T>> param_vars_;
};

// Operations. Shapes are validated by the underlying kernels.

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvGeometry& g);
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const ConvGeometry& g);
template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, int r);
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& shift,
                  double eps = kLayerNormEps);
template <typename T>
Var<T> silu(const Var<T>& x);
template <typename T>
Var<T> sigmoid(const Var<T>& x);
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs);
template <typename T>
Var<T> slice_channels(const Var<T>& x, std::int64_t begin, std::int64_t end);
template <typename T>
std::vector<Var<T>> chunk_channels(const Var<T>& x, std::int64_t k);
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T s);
/// Scalar sum of all elements.
template <typename T>
Var<T> sum(const Var<T>& x);
template <typename T>
Var<T> mean(const Var<T>& x);
/// mean(|a - b|), the pixel MAE loss.
template <typename T>
Var<T> mean_abs_diff(const Var<T>& a, const Var<T>& b);
/// Sum of squares.
template <typename T>
Var<T> sum_squares(const Var<T>& x);
/// Cuts gradient flow; the value is copied into an untracked Var.
template <typename T>
Var<T> detach(const Var<T>& x);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking (double precision only).

struct GradCheckOptions {
  double step = 1e-4;
  /// Upper bound on checked elements per tensor; <= 0 checks all.
  std::int64_t max_elements = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string label;
  std::int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  /// The central difference does not converge (it changes by more than the
  /// tolerance when the step is halved), e.g. at a kink or a zero-variance
  /// normalization. Excluded from pass/fail.
  bool degenerate = false;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  std::size_t checked() const { return entries.size(); }
  std::size_t degenerate_count() const;
  bool passed() const { return max_rel_error() <= tolerance; }
};

using ScalarFn = std::function<Var<double>(const Var<double>& x)>;
using ParameterFn = std::function<Var<double>(Tape<double>& tape, const ParameterStore<double>&)>;

/// Checks d f / d x. Relative error is |a - n| / max(1, |a|, |n|).
GradCheckReport grad_check(const ScalarFn& f, const TensorD& x, double tol,
                           const GradCheckOptions& options = {});

/// Checks the gradient of every tensor in `params` (perturbed in place and
/// restored), sampling up to options.max_elements entries per tensor.
GradCheckReport grad_check_parameters(const ParameterFn& f, ParameterStore<double>& params,
                                      double tol, const GradCheckOptions& options = {});

}  // namespace dimosr::ad
