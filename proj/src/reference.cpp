// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/reference.hpp"

#include <cmath>
#include <vector>

namespace dimosr::reference {

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& g) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (is.c != ws.c) throw ShapeError("reference conv2d: channel mismatch");
  const std::int64_t k = ws.h;
  const std::int64_t ho = kernels::conv_out_extent(is.h, k, g);
  const std::int64_t wo = kernels::conv_out_extent(is.w, k, g);
  BasicTensor<T> out(Shape{is.n, ws.n, ho, wo});
  for (std::int64_t n = 0; n < is.n; ++n)
    for (std::int64_t co = 0; co < ws.n; ++co)
      for (std::int64_t oy = 0; oy < ho; ++oy)
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          T acc = bias.empty() ? T{0} : bias[co];
          for (std::int64_t ci = 0; ci < ws.c; ++ci)
            for (std::int64_t ky = 0; ky < k; ++ky)
              for (std::int64_t kx = 0; kx < k; ++kx) {
                const std::int64_t iy = oy + ky * g.dilation - g.padding;
                const std::int64_t ix = ox + kx * g.dilation - g.padding;
                if (iy < 0 || iy >= is.h || ix < 0 || ix >= is.w) continue;
                acc += weight.at(co, ci, ky, kx) * input.at(n, ci, iy, ix);
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight,
                                 const Shape& input_shape, const ConvGeometry& g) {
  const Shape& ws = weight.shape();
  const std::int64_t k = ws.h;
  const std::int64_t ho = grad_out.h(), wo = grad_out.w();
  BasicTensor<T> gin(input_shape);
  for (std::int64_t n = 0; n < input_shape.n; ++n)
    for (std::int64_t ci = 0; ci < ws.c; ++ci)
      for (std::int64_t iy = 0; iy < input_shape.h; ++iy)
        for (std::int64_t ix = 0; ix < input_shape.w; ++ix) {
          T acc = 0;
          for (std::int64_t co = 0; co < ws.n; ++co)
            for (std::int64_t ky = 0; ky < k; ++ky)
              for (std::int64_t kx = 0; kx < k; ++kx) {
                const std::int64_t oy = iy - ky * g.dilation + g.padding;
                const std::int64_t ox = ix - kx * g.dilation + g.padding;
                if (oy < 0 || oy >= ho || ox < 0 || ox >= wo) continue;
                acc += weight.at(co, ci, ky, kx) * grad_out.at(n, co, oy, ox);
              }
          gin.at(n, ci, iy, ix) = acc;
        }
  return gin;
}

template <typename T>
BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                  const Shape& weight_shape, const ConvGeometry& g) {
  const Shape& is = input.shape();
  const std::int64_t k = weight_shape.h;
  BasicTensor<T> gw(weight_shape);
  for (std::int64_t co = 0; co < weight_shape.n; ++co)
    for (std::int64_t ci = 0; ci < weight_shape.c; ++ci)
      for (std::int64_t ky = 0; ky < k; ++ky)
        for (std::int64_t kx = 0; kx < k; ++kx) {
          T acc = 0;
          for (std::int64_t n = 0; n < is.n; ++n)
            for (std::int64_t oy = 0; oy < grad_out.h(); ++oy)
              for (std::int64_t ox = 0; ox < grad_out.w(); ++ox) {
                const std::int64_t iy = oy + ky * g.dilation - g.padding;
                const std::int64_t ix = ox + kx * g.dilation - g.padding;
                if (iy < 0 || iy >= is.h || ix < 0 || ix >= is.w) continue;
                acc += grad_out.at(n, co, oy, ox) * input.at(n, ci, iy, ix);
              }
          gw.at(co, ci, ky, kx) = acc;
        }
  return gw;
}

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int r) {
  const Shape& s = input.shape();
  if (s.c % (r * r) != 0) throw ShapeError("reference pixel_shuffle: C not divisible by r^2");
  BasicTensor<T> out(Shape{s.n, s.c / (r * r), s.h * r, s.w * r});
  for (std::int64_t n = 0; n < out.n(); ++n)
    for (std::int64_t c = 0; c < out.c(); ++c)
      for (std::int64_t y = 0; y < out.h(); ++y)
        for (std::int64_t x = 0; x < out.w(); ++x)
          out.at(n, c, y, x) = input.at(n, c * r * r + (y % r) * r + (x % r), y / r, x / r);
  return out;
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain,
                          const BasicTensor<T>& shift, double eps) {
  const Shape& s = input.shape();
  BasicTensor<T> out(s);
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t y = 0; y < s.h; ++y)
      for (std::int64_t x = 0; x < s.w; ++x) {
        T mean = 0;
        for (std::int64_t c = 0; c < s.c; ++c) mean += input.at(n, c, y, x);
        mean /= static_cast<T>(s.c);
        T var = 0;
        for (std::int64_t c = 0; c < s.c; ++c) {
          const T d = input.at(n, c, y, x) - mean;
          var += d * d;
        }
        var /= static_cast<T>(s.c);
        const T denom = std::sqrt(var + static_cast<T>(eps));
        for (std::int64_t c = 0; c < s.c; ++c)
          out.at(n, c, y, x) = (input.at(n, c, y, x) - mean) / denom * gain[c] + shift[c];
      }
  return out;
}

template <typename T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& grad_out,
                                      const BasicTensor<T>& input, const BasicTensor<T>& gain,
                                      double eps) {
  const Shape& s = input.shape();
  LayerNormGrads<T> g{BasicTensor<T>(s), BasicTensor<T>(Shape::vector(s.c)),
                      BasicTensor<T>(Shape::vector(s.c))};
  const auto cn = static_cast<T>(s.c);
  std::vector<T> xhat(static_cast<std::size_t>(s.c)), dxhat(static_cast<std::size_t>(s.c));
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t y = 0; y < s.h; ++y)
      for (std::int64_t x = 0; x < s.w; ++x) {
        T mean = 0;
        for (std::int64_t c = 0; c < s.c; ++c) mean += input.at(n, c, y, x);
        mean /= cn;
        T var = 0;
        for (std::int64_t c = 0; c < s.c; ++c) {
          const T d = input.at(n, c, y, x) - mean;
          var += d * d;
        }
        var /= cn;
        const T rstd = T{1} / std::sqrt(var + static_cast<T>(eps));
        T sum_dxhat = 0, sum_dxhat_xhat = 0;
        for (std::int64_t c = 0; c < s.c; ++c) {
          xhat[c] = (input.at(n, c, y, x) - mean) * rstd;
          dxhat[c] = grad_out.at(n, c, y, x) * gain[c];
          sum_dxhat += dxhat[c];
          sum_dxhat_xhat += dxhat[c] * xhat[c];
          g.gain[c] += grad_out.at(n, c, y, x) * xhat[c];
          g.shift[c] += grad_out.at(n, c, y, x);
        }
        for (std::int64_t c = 0; c < s.c; ++c)
          g.input.at(n, c, y, x) =
              rstd * (dxhat[c] - sum_dxhat / cn - xhat[c] * sum_dxhat_xhat / cn);
      }
  return g;
}

#define DIMOSR_INSTANTIATE(T)                                                                  \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                 const BasicTensor<T>&, const ConvGeometry&);                  \
  template BasicTensor<T> conv2d_grad_input(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                            const Shape&, const ConvGeometry&);                \
  template BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                             const Shape&, const ConvGeometry&);               \
  template BasicTensor<T> pixel_shuffle(const BasicTensor<T>&, int);                           \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                     const BasicTensor<T>&, double);                           \
  template LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                                 const BasicTensor<T>&, double);

DIMOSR_INSTANTIATE(float)
DIMOSR_INSTANTIATE(double)
#undef DIMOSR_INSTANTIATE

}  // namespace dimosr::reference
