// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dimosr::kernels {
namespace {

constexpr std::int64_t kParallelThreshold = 1 << 14;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// Eight independent partial sums so the compiler can vectorize without
// reassociating; the final order is fixed, hence deterministic.
template <typename T>
T dot(const T* a, const T* b, std::int64_t n) {
  T acc[8] = {};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
T sum(const T* a, std::int64_t n) {
  T acc[8] = {};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// Valid output range [lo, hi) along one axis for a tap offset `d`:
// 0 <= o + d < in_extent and 0 <= o < out_extent.
inline void tap_range(std::int64_t d, std::int64_t in_extent, std::int64_t out_extent,
                      std::int64_t& lo, std::int64_t& hi) {
  lo = std::max<std::int64_t>(0, -d);
  hi = std::min<std::int64_t>(out_extent, in_extent - d);
}

void check_conv(const Shape& in, const Shape& w, const ConvGeometry& g) {
  require(w.h == w.w, "conv2d: kernel must be square, got " + w.str());
  require(in.c == w.c, "conv2d: input channels (axis C) " + std::to_string(in.c) +
                           " != weight input channels " + std::to_string(w.c));
  if (g.dilation < 1) throw ShapeError("conv2d: dilation must be >= 1");
  if (g.padding < 0) throw ShapeError("conv2d: padding must be >= 0");
}

}  // namespace

std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, const ConvGeometry& g) {
  const std::int64_t out = in + 2 * g.padding - static_cast<std::int64_t>(g.dilation) * (kernel - 1);
  if (out < 1) {
    throw ShapeError("conv2d: spatial extent " + std::to_string(in) + " too small for kernel " +
                     std::to_string(kernel) + " at dilation " + std::to_string(g.dilation));
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& g) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  check_conv(is, ws, g);
  const std::int64_t cout = ws.n, cin = ws.c, k = ws.h;
  require(bias.empty() || bias.numel() == cout,
          "conv2d: bias length " + std::to_string(bias.numel()) + " != C_out " +
              std::to_string(cout));
  const std::int64_t ho = conv_out_extent(is.h, k, g);
  const std::int64_t wo = conv_out_extent(is.w, k, g);
  BasicTensor<T> out(Shape{is.n, cout, ho, wo});
  const std::int64_t plane_in = is.plane();
  const std::int64_t plane_out = ho * wo;
  const bool pointwise = (k == 1 && g.padding == 0);
  const std::int64_t batch = is.n;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t co = 0; co < cout; ++co) {
      T* o = out.plane(n, co);
      const T b = bias.empty() ? T{0} : bias[co];
      std::fill(o, o + plane_out, b);
      for (std::int64_t ci = 0; ci < cin; ++ci) {
        const T* ip = input.plane(n, ci);
        const T* wk = weight.data().data() + (co * cin + ci) * k * k;
        if (pointwise) {
          const T wv = wk[0];
          for (std::int64_t i = 0; i < plane_in; ++i) o[i] += wv * ip[i];
          continue;
        }
        for (std::int64_t ky = 0; ky < k; ++ky) {
          const std::int64_t dy = ky * g.dilation - g.padding;
          std::int64_t ylo, yhi;
          tap_range(dy, is.h, ho, ylo, yhi);
          for (std::int64_t oy = ylo; oy < yhi; ++oy) {
            const T* irow = ip + (oy + dy) * is.w;
            T* orow = o + oy * wo;
            for (std::int64_t kx = 0; kx < k; ++kx) {
              const std::int64_t dx = kx * g.dilation - g.padding;
              std::int64_t xlo, xhi;
              tap_range(dx, is.w, wo, xlo, xhi);
              const T wv = wk[ky * k + kx];
              for (std::int64_t ox = xlo; ox < xhi; ++ox) orow[ox] += wv * irow[ox + dx];
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight,
                                 const Shape& input_shape, const ConvGeometry& g) {
  const Shape& ws = weight.shape();
  check_conv(input_shape, ws, g);
  const std::int64_t cout = ws.n, cin = ws.c, k = ws.h;
  const std::int64_t ho = conv_out_extent(input_shape.h, k, g);
  const std::int64_t wo = conv_out_extent(input_shape.w, k, g);
  require(grad_out.shape() == Shape{input_shape.n, cout, ho, wo},
          "conv2d backward: grad_out shape " + grad_out.shape().str() + " mismatch");
  BasicTensor<T> gin(input_shape);
  const bool pointwise = (k == 1 && g.padding == 0);
  const std::int64_t plane = input_shape.plane();
  const std::int64_t batch = input_shape.n;
  const std::int64_t W = input_shape.w, H = input_shape.h;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      T* gi = gin.plane(n, ci);
      for (std::int64_t co = 0; co < cout; ++co) {
        const T* go = grad_out.plane(n, co);
        const T* wk = weight.data().data() + (co * cin + ci) * k * k;
        if (pointwise) {
          const T wv = wk[0];
          for (std::int64_t i = 0; i < plane; ++i) gi[i] += wv * go[i];
          continue;
        }
        for (std::int64_t ky = 0; ky < k; ++ky) {
          const std::int64_t dy = ky * g.dilation - g.padding;
          std::int64_t ylo, yhi;
          tap_range(dy, H, ho, ylo, yhi);
          for (std::int64_t oy = ylo; oy < yhi; ++oy) {
            T* girow = gi + (oy + dy) * W;
            const T* gorow = go + oy * wo;
            for (std::int64_t kx = 0; kx < k; ++kx) {
              const std::int64_t dx = kx * g.dilation - g.padding;
              std::int64_t xlo, xhi;
              tap_range(dx, W, wo, xlo, xhi);
              const T wv = wk[ky * k + kx];
              for (std::int64_t ox = xlo; ox < xhi; ++ox) girow[ox + dx] += wv * gorow[ox];
            }
          }
        }
      }
    }
  }
  return gin;
}

template <typename T>
BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                  const Shape& weight_shape, const ConvGeometry& g) {
  const Shape& is = input.shape();
  check_conv(is, weight_shape, g);
  const std::int64_t cout = weight_shape.n, cin = weight_shape.c, k = weight_shape.h;
  const std::int64_t ho = conv_out_extent(is.h, k, g);
  const std::int64_t wo = conv_out_extent(is.w, k, g);
  require(grad_out.shape() == Shape{is.n, cout, ho, wo},
          "conv2d backward: grad_out shape " + grad_out.shape().str() + " mismatch");
  BasicTensor<T> gw(weight_shape);
  const bool pointwise = (k == 1 && g.padding == 0);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t co = 0; co < cout; ++co) {
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      T* wk = gw.data().data() + (co * cin + ci) * k * k;
      for (std::int64_t ky = 0; ky < k; ++ky) {
        const std::int64_t dy = ky * g.dilation - g.padding;
        std::int64_t ylo, yhi;
        tap_range(dy, is.h, ho, ylo, yhi);
        for (std::int64_t kx = 0; kx < k; ++kx) {
          const std::int64_t dx = kx * g.dilation - g.padding;
          std::int64_t xlo, xhi;
          tap_range(dx, is.w, wo, xlo, xhi);
          T acc = 0;
          for (std::int64_t n = 0; n < is.n; ++n) {
            const T* go = grad_out.plane(n, co);
            const T* ip = input.plane(n, ci);
            if (pointwise) {
              acc += dot(go, ip, is.plane());
              continue;
            }
            for (std::int64_t oy = ylo; oy < yhi; ++oy) {
              if (xhi > xlo) acc += dot(go + oy * wo + xlo, ip + (oy + dy) * is.w + xlo + dx, xhi - xlo);
            }
          }
          wk[ky * k + kx] = acc;
        }
      }
    }
  }
  return gw;
}

template <typename T>
BasicTensor<T> conv2d_grad_bias(const BasicTensor<T>& grad_out) {
  const Shape& s = grad_out.shape();
  BasicTensor<T> gb(Shape::vector(s.c));
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < s.c; ++c) {
    T acc = 0;
    for (std::int64_t n = 0; n < s.n; ++n) acc += sum(grad_out.plane(n, c), s.plane());
    gb[c] = acc;
  }
  return gb;
}

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int r) {
  const Shape& s = input.shape();
  if (r < 1) throw ShapeError("pixel_shuffle: upscale factor must be >= 1");
  const std::int64_t rr = static_cast<std::int64_t>(r) * r;
  require(s.c % rr == 0, "pixel_shuffle: channels " + std::to_string(s.c) +
                             " not divisible by r^2 = " + std::to_string(rr));
  const std::int64_t oc = s.c / rr;
  BasicTensor<T> out(Shape{s.n, oc, s.h * r, s.w * r});
  const std::int64_t ow = s.w * r;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < oc; ++c) {
      T* o = out.plane(n, c);
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < r; ++j) {
          const T* ip = input.plane(n, c * rr + i * r + j);
          for (std::int64_t y = 0; y < s.h; ++y) {
            T* orow = o + (y * r + i) * ow + j;
            const T* irow = ip + y * s.w;
            for (std::int64_t x = 0; x < s.w; ++x) orow[x * r] = irow[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& input, int r) {
  const Shape& s = input.shape();
  if (r < 1) throw ShapeError("pixel_unshuffle: factor must be >= 1");
  require(s.h % r == 0 && s.w % r == 0,
          "pixel_unshuffle: spatial dims " + s.str() + " not divisible by " + std::to_string(r));
  const std::int64_t rr = static_cast<std::int64_t>(r) * r;
  const std::int64_t h = s.h / r, w = s.w / r;
  BasicTensor<T> out(Shape{s.n, s.c * rr, h, w});
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* ip = input.plane(n, c);
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < r; ++j) {
          T* o = out.plane(n, c * rr + i * r + j);
          for (std::int64_t y = 0; y < h; ++y) {
            const T* irow = ip + (y * r + i) * s.w + j;
            for (std::int64_t x = 0; x < w; ++x) o[y * w + x] = irow[x * r];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain,
                          const BasicTensor<T>& shift, double eps, LayerNormStats<T>* stats) {
  const Shape& s = input.shape();
  require(gain.numel() == s.c && shift.numel() == s.c,
          "layer_norm: gain/shift length must equal C = " + std::to_string(s.c));
  BasicTensor<T> out(s);
  const std::int64_t rows = s.n * s.h;
  const T inv_c = T{1} / static_cast<T>(s.c);
  if (stats) {
    stats->mean.assign(static_cast<std::size_t>(s.n * s.plane()), T{0});
    stats->inv_std.assign(static_cast<std::size_t>(s.n * s.plane()), T{0});
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::int64_t n = row / s.h, y = row % s.h;
    std::vector<T> mean(static_cast<std::size_t>(s.w), T{0});
    std::vector<T> var(static_cast<std::size_t>(s.w), T{0});
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* x = input.plane(n, c) + y * s.w;
      for (std::int64_t i = 0; i < s.w; ++i) mean[i] += x[i];
    }
    for (std::int64_t i = 0; i < s.w; ++i) mean[i] *= inv_c;
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* x = input.plane(n, c) + y * s.w;
      for (std::int64_t i = 0; i < s.w; ++i) {
        const T d = x[i] - mean[i];
        var[i] += d * d;
      }
    }
    for (std::int64_t i = 0; i < s.w; ++i) {
      var[i] = T{1} / std::sqrt(var[i] * inv_c + static_cast<T>(eps));
    }
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* x = input.plane(n, c) + y * s.w;
      T* o = out.plane(n, c) + y * s.w;
      const T gc = gain[c], bc = shift[c];
      for (std::int64_t i = 0; i < s.w; ++i) o[i] = (x[i] - mean[i]) * var[i] * gc + bc;
    }
    if (stats) {
      const std::int64_t base = n * s.plane() + y * s.w;
      std::copy(mean.begin(), mean.end(), stats->mean.begin() + base);
      std::copy(var.begin(), var.end(), stats->inv_std.begin() + base);
    }
  }
  return out;
}

template <typename T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& grad_out,
                                      const BasicTensor<T>& input, const BasicTensor<T>& gain,
                                      const LayerNormStats<T>& stats) {
  const Shape& s = input.shape();
  require(grad_out.shape() == s, "layer_norm backward: grad shape mismatch");
  LayerNormGrads<T> g{BasicTensor<T>(s), BasicTensor<T>(Shape::vector(s.c)),
                      BasicTensor<T>(Shape::vector(s.c))};
  const std::int64_t rows = s.n * s.h;
  const T inv_c = T{1} / static_cast<T>(s.c);

  // dx = r * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)), dxhat = dy * gain
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::int64_t n = row / s.h, y = row % s.h;
    const std::int64_t base = n * s.plane() + y * s.w;
    const T* mu = stats.mean.data() + base;
    const T* rs = stats.inv_std.data() + base;
    std::vector<T> m1(static_cast<std::size_t>(s.w), T{0});
    std::vector<T> m2(static_cast<std::size_t>(s.w), T{0});
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* x = input.plane(n, c) + y * s.w;
      const T* go = grad_out.plane(n, c) + y * s.w;
      const T gc = gain[c];
      for (std::int64_t i = 0; i < s.w; ++i) {
        const T dxhat = go[i] * gc;
        m1[i] += dxhat;
        m2[i] += dxhat * (x[i] - mu[i]) * rs[i];
      }
    }
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* x = input.plane(n, c) + y * s.w;
      const T* go = grad_out.plane(n, c) + y * s.w;
      T* gi = g.input.plane(n, c) + y * s.w;
      const T gc = gain[c];
      for (std::int64_t i = 0; i < s.w; ++i) {
        const T xhat = (x[i] - mu[i]) * rs[i];
        gi[i] = rs[i] * (go[i] * gc - m1[i] * inv_c - xhat * m2[i] * inv_c);
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < s.c; ++c) {
    T acc_gain = 0, acc_shift = 0;
    for (std::int64_t n = 0; n < s.n; ++n) {
      const T* x = input.plane(n, c);
      const T* go = grad_out.plane(n, c);
      const T* mu = stats.mean.data() + n * s.plane();
      const T* rs = stats.inv_std.data() + n * s.plane();
      for (std::int64_t i = 0; i < s.plane(); ++i) {
        acc_gain += go[i] * (x[i] - mu[i]) * rs[i];
        acc_shift += go[i];
      }
    }
    g.gain[c] = acc_gain;
    g.shift[c] = acc_shift;
  }
  return g;
}

template <typename T>
BasicTensor<T> silu(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  const std::int64_t n = input.numel();
  const T* x = input.data().data();
  T* o = out.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) o[i] = x[i] / (T{1} + std::exp(-x[i]));
  return out;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  const std::int64_t n = input.numel();
  const T* x = input.data().data();
  T* o = out.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) o[i] = T{1} / (T{1} + std::exp(-x[i]));
  return out;
}

template <typename T>
BasicTensor<T> silu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input) {
  require(grad_out.shape() == input.shape(), "silu backward: shape mismatch");
  BasicTensor<T> out(input.shape());
  const std::int64_t n = input.numel();
  const T* x = input.data().data();
  const T* g = grad_out.data().data();
  T* o = out.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) {
    const T s = T{1} / (T{1} + std::exp(-x[i]));
    o[i] = g[i] * s * (T{1} + x[i] * (T{1} - s));
  }
  return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& output) {
  require(grad_out.shape() == output.shape(), "sigmoid backward: shape mismatch");
  BasicTensor<T> out(output.shape());
  const std::int64_t n = output.numel();
  const T* s = output.data().data();
  const T* g = grad_out.data().data();
  T* o = out.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) o[i] = g[i] * s[i] * (T{1} - s[i]);
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& s0 = inputs.front()->shape();
  std::int64_t total_c = 0;
  for (const auto* t : inputs) {
    const Shape& s = t->shape();
    require(s.n == s0.n && s.h == s0.h && s.w == s0.w,
            "concat_channels: N/H/W mismatch " + s.str() + " vs " + s0.str());
    total_c += s.c;
  }
  BasicTensor<T> out(Shape{s0.n, total_c, s0.h, s0.w});
  const std::int64_t plane = s0.plane();
  for (std::int64_t n = 0; n < s0.n; ++n) {
    std::int64_t c0 = 0;
    for (const auto* t : inputs) {
      const T* src = t->plane(n, 0);
      std::copy(src, src + t->c() * plane, out.plane(n, c0));
      c0 += t->c();
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& inputs) {
  std::vector<const BasicTensor<T>*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& t : inputs) ptrs.push_back(&t);
  return concat_channels<T>(std::span<const BasicTensor<T>* const>(ptrs));
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& input, std::int64_t begin, std::int64_t end) {
  const Shape& s = input.shape();
  require(0 <= begin && begin <= end && end <= s.c,
          "slice_channels: range [" + std::to_string(begin) + "," + std::to_string(end) +
              ") outside C = " + std::to_string(s.c));
  BasicTensor<T> out(Shape{s.n, end - begin, s.h, s.w});
  const std::int64_t plane = s.plane();
  for (std::int64_t n = 0; n < s.n; ++n) {
    const T* src = input.plane(n, begin);
    std::copy(src, src + (end - begin) * plane, out.plane(n, 0));
  }
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> chunk_channels(const BasicTensor<T>& input, std::int64_t k) {
  require(k >= 1 && input.c() % k == 0, "chunk_channels: C = " + std::to_string(input.c()) +
                                            " not divisible by " + std::to_string(k));
  const std::int64_t step = input.c() / k;
  std::vector<BasicTensor<T>> parts;
  parts.reserve(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) parts.push_back(slice_channels(input, i * step, (i + 1) * step));
  return parts;
}

template <typename T>
BasicTensor<T> stack_batch(const std::vector<BasicTensor<T>>& inputs) {
  if (inputs.empty()) throw ShapeError("stack_batch: no inputs");
  const Shape& s0 = inputs.front().shape();
  std::int64_t total_n = 0;
  for (const auto& t : inputs) {
    const Shape& s = t.shape();
    require(s.c == s0.c && s.h == s0.h && s.w == s0.w,
            "stack_batch: C/H/W mismatch " + s.str() + " vs " + s0.str());
    total_n += s.n;
  }
  std::vector<T> data;
  data.reserve(static_cast<std::size_t>(total_n * s0.c * s0.plane()));
  for (const auto& t : inputs) data.insert(data.end(), t.data().begin(), t.data().end());
  return BasicTensor<T>(Shape{total_n, s0.c, s0.h, s0.w}, std::move(data));
}

#define DIMOSR_BINARY(NAME, EXPR)                                                          \
  template <typename T>                                                                    \
  BasicTensor<T> NAME(const BasicTensor<T>& a, const BasicTensor<T>& b) {                  \
    require(a.shape() == b.shape(),                                                        \
            #NAME ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());       \
    BasicTensor<T> out(a.shape());                                                         \
    const std::int64_t n = a.numel();                                                      \
    const T* x = a.data().data();                                                          \
    const T* y = b.data().data();                                                          \
    T* o = out.data().data();                                                              \
    _Pragma("omp parallel for schedule(static) if (n > kParallelThreshold)")               \
    for (std::int64_t i = 0; i < n; ++i) o[i] = EXPR;                                      \
    return out;                                                                            \
  }

DIMOSR_BINARY(add, x[i] + y[i])
DIMOSR_BINARY(sub, x[i] - y[i])
DIMOSR_BINARY(mul, x[i] * y[i])
#undef DIMOSR_BINARY

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s) {
  BasicTensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
  return out;
}

template <typename T>
void axpy(BasicTensor<T>& dst, T alpha, const BasicTensor<T>& src) {
  require(dst.shape() == src.shape(), "axpy: shape mismatch " + dst.shape().str() + " vs " +
                                          src.shape().str());
  const std::int64_t n = dst.numel();
  T* d = dst.data().data();
  const T* s = src.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) d[i] += alpha * s[i];
}

#define DIMOSR_INSTANTIATE(T)                                                                      \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                                 const BasicTensor<T>&, const ConvGeometry&);                      \
  template BasicTensor<T> conv2d_grad_input(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                            const Shape&, const ConvGeometry&);                    \
  template BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                             const Shape&, const ConvGeometry&);                   \
  template BasicTensor<T> conv2d_grad_bias(const BasicTensor<T>&);                                 \
  template BasicTensor<T> pixel_shuffle(const BasicTensor<T>&, int);                               \
  template BasicTensor<T> pixel_unshuffle(const BasicTensor<T>&, int);                             \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                     const BasicTensor<T>&, double, LayerNormStats<T>*);           \
  template LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                                 const BasicTensor<T>&, const LayerNormStats<T>&); \
  template BasicTensor<T> silu(const BasicTensor<T>&);                                             \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                          \
  template BasicTensor<T> silu_backward(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const>);                 \
  template BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>&);                     \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::int64_t, std::int64_t);       \
  template std::vector<BasicTensor<T>> chunk_channels(const BasicTensor<T>&, std::int64_t);        \
  template BasicTensor<T> stack_batch(const std::vector<BasicTensor<T>>&);                         \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                         \
  template void axpy(BasicTensor<T>&, T, const BasicTensor<T>&);

DIMOSR_INSTANTIATE(float)
DIMOSR_INSTANTIATE(double)
#undef DIMOSR_INSTANTIATE

}  // namespace dimosr::kernels
