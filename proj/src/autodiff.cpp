// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dimosr::ad {

namespace k = dimosr::kernels;

// --- GradSink ---------------------------------------------------------------

template <typename T>
GradSink<T>::GradSink(Tape<T>& tape, const std::vector<std::int64_t>& inputs)
    : tape_(tape), inputs_(inputs), wanted_(inputs.size()) {
  for (std::size_t i = 0; i < inputs.size(); ++i) wanted_[i] = inputs[i] >= 0;
}

template <typename T>
void GradSink<T>::accumulate(std::size_t slot, BasicTensor<T> grad) {
  const std::int64_t id = inputs_[slot];
  if (id < 0) return;
  auto& dst = tape_.grads_[static_cast<std::size_t>(id)];
  if (grad.shape() != tape_.nodes_[static_cast<std::size_t>(id)].value->shape()) {
    throw InternalError("gradient shape " + grad.shape().str() + " does not match value shape " +
                        tape_.nodes_[static_cast<std::size_t>(id)].value->shape().str());
  }
  if (!dst) {
    dst = std::move(grad);
  } else {
    k::axpy(*dst, T{1}, grad);
  }
}

// --- Tape -------------------------------------------------------------------

template <typename T>
Var<T> Tape<T>::constant(BasicTensor<T> value) {
  return Var<T>(this, std::make_shared<const BasicTensor<T>>(std::move(value)), -1);
}

template <typename T>
Var<T> Tape<T>::leaf(BasicTensor<T> value) {
  auto ptr = std::make_shared<const BasicTensor<T>>(std::move(value));
  if (!recording_) return Var<T>(this, ptr, -1);
  nodes_.push_back(Node{ptr, {}, nullptr});
  return Var<T>(this, ptr, static_cast<std::int64_t>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::variable(BasicTensor<T> value) {
  return leaf(std::move(value));
}

template <typename T>
Var<T> Tape<T>::parameter(const std::string& name, const BasicTensor<T>& value) {
  if (auto it = param_vars_.find(name); it != param_vars_.end()) return it->second;
  Var<T> v = leaf(value);
  if (v.tracked()) params_.emplace_back(name, v.node());
  param_vars_.emplace(name, v);
  return v;
}

template <typename T>
Var<T> Tape<T>::record(BasicTensor<T> value, const std::vector<Var<T>>& inputs,
                       Backward backward) {
  auto ptr = std::make_shared<const BasicTensor<T>>(std::move(value));
  const bool any_tracked =
      std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) { return v.tracked(); });
  if (!recording_ || !any_tracked) return Var<T>(this, ptr, -1);
  Node node{ptr, {}, std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const auto& v : inputs) {
    if (v.tracked() && v.tape() != this) throw ContractError("Var belongs to a different tape");
    node.inputs.push_back(v.node());
  }
  nodes_.push_back(std::move(node));
  return Var<T>(this, ptr, static_cast<std::int64_t>(nodes_.size() - 1));
}

template <typename T>
GradientMap<T> Tape<T>::backward(const Var<T>& loss) {
  if (!loss.valid() || loss.value().numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.valid() ? loss.shape().str() : std::string("<empty>")));
  }
  GradientMap<T> out;
  grads_.assign(nodes_.size(), std::nullopt);
  if (loss.tracked()) {
    if (loss.tape() != this) throw ContractError("backward: loss belongs to a different tape");
    grads_[static_cast<std::size_t>(loss.node())] = BasicTensor<T>::ones(loss.shape());
    for (std::int64_t id = loss.node(); id >= 0; --id) {
      auto& node = nodes_[static_cast<std::size_t>(id)];
      auto& g = grads_[static_cast<std::size_t>(id)];
      if (!g || !node.backward) continue;
      for (std::int64_t in : node.inputs) {
        if (in >= id) throw InternalError("tape cycle: node " + std::to_string(id) +
                                          " depends on node " + std::to_string(in));
      }
      GradSink<T> sink(*this, node.inputs);
      node.backward(*g, sink);
      g.reset();
    }
  }
  for (const auto& [name, id] : params_) {
    auto& g = grads_[static_cast<std::size_t>(id)];
    out.emplace(name, g ? *g : BasicTensor<T>::zeros(nodes_[static_cast<std::size_t>(id)].value->shape()));
  }
  return out;
}

template <typename T>
BasicTensor<T> Tape<T>::grad(const Var<T>& v) const {
  if (v.tracked() && static_cast<std::size_t>(v.node()) < grads_.size()) {
    const auto& g = grads_[static_cast<std::size_t>(v.node())];
    if (g) return *g;
  }
  return BasicTensor<T>::zeros(v.shape());
}

// --- Operations -------------------------------------------------------------

namespace {

template <typename T>
Tape<T>& tape_of(std::initializer_list<const Var<T>*> vars) {
  for (const Var<T>* v : vars) {
    if (v->valid() && v->tape()) return *v->tape();
  }
  throw ContractError("operation on Vars without a tape");
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvGeometry& g) {
  const BasicTensor<T> empty;
  const BasicTensor<T>& b = bias.valid() ? bias.value() : empty;
  auto out = k::conv2d(x.value(), weight.value(), b, g);
  std::vector<Var<T>> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return tape_of<T>({&x, &weight}).record(
      std::move(out), inputs,
      [x, weight, g, has_bias = bias.valid()](const BasicTensor<T>& go, GradSink<T>& sink) {
        if (sink.wants(0)) sink.accumulate(0, k::conv2d_grad_input(go, weight.value(), x.shape(), g));
        if (sink.wants(1)) sink.accumulate(1, k::conv2d_grad_weight(go, x.value(), weight.shape(), g));
        if (has_bias && sink.wants(2)) sink.accumulate(2, k::conv2d_grad_bias(go));
      });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const ConvGeometry& g) {
  return conv2d(x, weight, Var<T>{}, g);
}

template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, int r) {
  return tape_of<T>({&x}).record(k::pixel_shuffle(x.value(), r), {x},
                                 [r](const BasicTensor<T>& go, GradSink<T>& sink) {
                                   sink.accumulate(0, k::pixel_unshuffle(go, r));
                                 });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& shift, double eps) {
  auto stats = std::make_shared<LayerNormStats<T>>();
  auto out = k::layer_norm(x.value(), gain.value(), shift.value(), eps, stats.get());
  return tape_of<T>({&x, &gain, &shift})
      .record(std::move(out), {x, gain, shift},
              [x, gain, stats](const BasicTensor<T>& go, GradSink<T>& sink) {
                auto g = k::layer_norm_backward(go, x.value(), gain.value(), *stats);
                sink.accumulate(0, std::move(g.input));
                sink.accumulate(1, std::move(g.gain));
                sink.accumulate(2, std::move(g.shift));
              });
}

template <typename T>
Var<T> silu(const Var<T>& x) {
  return tape_of<T>({&x}).record(k::silu(x.value()), {x},
                                 [x](const BasicTensor<T>& go, GradSink<T>& sink) {
                                   sink.accumulate(0, k::silu_backward(go, x.value()));
                                 });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  auto out = std::make_shared<BasicTensor<T>>(k::sigmoid(x.value()));
  return tape_of<T>({&x}).record(*out, {x}, [out](const BasicTensor<T>& go, GradSink<T>& sink) {
    sink.accumulate(0, k::sigmoid_backward(go, *out));
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  std::vector<const BasicTensor<T>*> values;
  std::vector<std::int64_t> offsets;
  std::int64_t c = 0;
  for (const auto& v : xs) {
    values.push_back(&v.value());
    offsets.push_back(c);
    c += v.shape().c;
  }
  auto out = k::concat_channels<T>(std::span<const BasicTensor<T>* const>(values));
  return tape_of<T>({&xs.front()})
      .record(std::move(out), xs, [xs, offsets](const BasicTensor<T>& go, GradSink<T>& sink) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (!sink.wants(i)) continue;
          sink.accumulate(i, k::slice_channels(go, offsets[i], offsets[i] + xs[i].shape().c));
        }
      });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, std::int64_t begin, std::int64_t end) {
  return tape_of<T>({&x}).record(
      k::slice_channels(x.value(), begin, end), {x},
      [shape = x.shape(), begin, end](const BasicTensor<T>& go, GradSink<T>& sink) {
        BasicTensor<T> g(shape);
        const std::int64_t plane = shape.plane();
        for (std::int64_t n = 0; n < shape.n; ++n) {
          const T* src = go.plane(n, 0);
          std::copy(src, src + (end - begin) * plane, g.plane(n, begin));
        }
        sink.accumulate(0, std::move(g));
      });
}

template <typename T>
std::vector<Var<T>> chunk_channels(const Var<T>& x, std::int64_t count) {
  if (count < 1 || x.shape().c % count != 0) {
    throw ShapeError("chunk_channels: C = " + std::to_string(x.shape().c) +
                     " not divisible by " + std::to_string(count));
  }
  const std::int64_t step = x.shape().c / count;
  std::vector<Var<T>> parts;
  for (std::int64_t i = 0; i < count; ++i) parts.push_back(slice_channels(x, i * step, (i + 1) * step));
  return parts;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return tape_of<T>({&a, &b}).record(k::add(a.value(), b.value()), {a, b},
                                     [](const BasicTensor<T>& go, GradSink<T>& sink) {
                                       if (sink.wants(0)) sink.accumulate(0, go);
                                       if (sink.wants(1)) sink.accumulate(1, go);
                                     });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return tape_of<T>({&a, &b}).record(k::sub(a.value(), b.value()), {a, b},
                                     [](const BasicTensor<T>& go, GradSink<T>& sink) {
                                       if (sink.wants(0)) sink.accumulate(0, go);
                                       if (sink.wants(1)) sink.accumulate(1, k::scale(go, T{-1}));
                                     });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return tape_of<T>({&a, &b}).record(k::mul(a.value(), b.value()), {a, b},
                                     [a, b](const BasicTensor<T>& go, GradSink<T>& sink) {
                                       if (sink.wants(0)) sink.accumulate(0, k::mul(go, b.value()));
                                       if (sink.wants(1)) sink.accumulate(1, k::mul(go, a.value()));
                                     });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return tape_of<T>({&a}).record(k::scale(a.value(), s), {a},
                                 [s](const BasicTensor<T>& go, GradSink<T>& sink) {
                                   sink.accumulate(0, k::scale(go, s));
                                 });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T acc = 0;
  for (T v : x.value().data()) acc += v;
  return tape_of<T>({&x}).record(BasicTensor<T>::scalar(acc), {x},
                                 [shape = x.shape()](const BasicTensor<T>& go, GradSink<T>& sink) {
                                   sink.accumulate(0, BasicTensor<T>::full(shape, go.item()));
                                 });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.value().numel()));
}

template <typename T>
Var<T> mean_abs_diff(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mean_abs_diff: " + a.shape().str() + " vs " + b.shape().str());
  }
  const std::int64_t n = a.value().numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(a.value()[i]) - b.value()[i]);
  const T value = static_cast<T>(acc / static_cast<double>(n));
  return tape_of<T>({&a, &b}).record(
      BasicTensor<T>::scalar(value), {a, b}, [a, b, n](const BasicTensor<T>& go, GradSink<T>& sink) {
        BasicTensor<T> g(a.shape());
        const T s = go.item() / static_cast<T>(n);
        for (std::int64_t i = 0; i < n; ++i) {
          const T d = a.value()[i] - b.value()[i];
          g[i] = d > 0 ? s : (d < 0 ? -s : T{0});
        }
        if (sink.wants(1)) sink.accumulate(1, k::scale(g, T{-1}));
        if (sink.wants(0)) sink.accumulate(0, std::move(g));
      });
}

template <typename T>
Var<T> sum_squares(const Var<T>& x) {
  T acc = 0;
  for (T v : x.value().data()) acc += v * v;
  return tape_of<T>({&x}).record(BasicTensor<T>::scalar(acc), {x},
                                 [x](const BasicTensor<T>& go, GradSink<T>& sink) {
                                   sink.accumulate(0, k::scale(x.value(), T{2} * go.item()));
                                 });
}

template <typename T>
Var<T> detach(const Var<T>& x) {
  return tape_of<T>({&x}).constant(x.value());
}

#define DIMOSR_INSTANTIATE(T)                                                              \
  template class GradSink<T>;                                                              \
  template class Tape<T>;                                                                  \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvGeometry&); \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const ConvGeometry&);               \
  template Var<T> pixel_shuffle(const Var<T>&, int);                                       \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, double);         \
  template Var<T> silu(const Var<T>&);                                                     \
  template Var<T> sigmoid(const Var<T>&);                                                  \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                             \
  template Var<T> slice_channels(const Var<T>&, std::int64_t, std::int64_t);               \
  template std::vector<Var<T>> chunk_channels(const Var<T>&, std::int64_t);                \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                       \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                       \
  template Var<T> scale(const Var<T>&, T);                                                 \
  template Var<T> sum(const Var<T>&);                                                      \
  template Var<T> mean(const Var<T>&);                                                     \
  template Var<T> mean_abs_diff(const Var<T>&, const Var<T>&);                             \
  template Var<T> sum_squares(const Var<T>&);                                              \
  template Var<T> detach(const Var<T>&);

DIMOSR_INSTANTIATE(float)
DIMOSR_INSTANTIATE(double)
#undef DIMOSR_INSTANTIATE

// --- Gradient checking ------------------------------------------------------

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) {
    if (!e.degenerate) m = std::max(m, e.rel_error);
  }
  return m;
}

std::size_t GradCheckReport::degenerate_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.degenerate; }));
}

namespace {

std::vector<std::int64_t> pick_indices(std::int64_t numel, std::int64_t max_elements,
                                       std::mt19937_64& rng) {
  std::vector<std::int64_t> idx;
  if (max_elements <= 0 || numel <= max_elements) {
    idx.resize(static_cast<std::size_t>(numel));
    for (std::int64_t i = 0; i < numel; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
  }
  while (static_cast<std::int64_t>(idx.size()) < max_elements) {
    const auto i = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(numel));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Central difference at step h and h/2 for one coordinate. `eval` evaluates
// the scalar function with the coordinate set to the given value.
template <typename Eval>
GradCheckEntry probe(const std::string& label, std::int64_t index, double x0, double analytic,
                     double h, double tol, Eval&& eval) {
  const double d1 = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
  const double d2 = (eval(x0 + h / 2) - eval(x0 - h / 2)) / h;
  GradCheckEntry e;
  e.label = label;
  e.index = index;
  e.analytic = analytic;
  e.numeric = d1;
  e.rel_error = std::abs(analytic - d1) / std::max({1.0, std::abs(analytic), std::abs(d1)});
  e.degenerate = std::abs(d1 - d2) / std::max(1.0, std::abs(d2)) > tol;
  return e;
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const TensorD& x, double tol,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tol;
  TensorD analytic;
  {
    Tape<double> tape;
    auto xv = tape.variable(x);
    auto loss = f(xv);
    tape.backward(loss);
    analytic = tape.grad(xv);
  }
  std::mt19937_64 rng(options.seed);
  TensorD probe_x = x;
  auto eval = [&](std::int64_t i) {
    return [&, i](double v) {
      probe_x[i] = v;
      Tape<double> tape(false);
      const double out = f(tape.constant(probe_x)).value().item();
      probe_x[i] = x[i];
      return out;
    };
  };
  for (std::int64_t i : pick_indices(x.numel(), options.max_elements, rng)) {
    report.entries.push_back(probe("x", i, x[i], analytic[i], options.step, tol, eval(i)));
  }
  return report;
}

GradCheckReport grad_check_parameters(const ParameterFn& f, ParameterStore<double>& params,
                                      double tol, const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tol;
  GradientMap<double> analytic;
  {
    Tape<double> tape;
    auto loss = f(tape, params);
    analytic = tape.backward(loss);
  }
  std::mt19937_64 rng(options.seed);
  for (auto& [name, tensor] : params) {
    auto it = analytic.find(name);
    const TensorD zeros = TensorD::zeros(tensor.shape());
    const TensorD& g = it != analytic.end() ? it->second : zeros;
    for (std::int64_t i : pick_indices(tensor.numel(), options.max_elements, rng)) {
      const double x0 = tensor[i];
      auto eval = [&, i, x0](double v) {
        tensor[i] = v;
        Tape<double> tape(false);
        const double out = f(tape, params).value().item();
        tensor[i] = x0;
        return out;
      };
      report.entries.push_back(probe(name, i, x0, g[i], options.step, tol, eval));
    }
  }
  return report;
}

}  // namespace dimosr::ad
