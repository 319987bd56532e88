// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace dimosr {
namespace {

constexpr double kYr = 65.481, kYg = 128.553, kYb = 24.966, kYoffset = 16.0;
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double luma(double r, double g, double b) { return (kYr * r + kYg * g + kYb * b + kYoffset) / 255.0; }

double clamp01(float v) { return std::clamp(static_cast<double>(v), 0.0, 1.0); }

struct Plane {
  std::int64_t h = 0, w = 0;
  std::vector<double> v;
};

// Clamped, cropped evaluation planes (one per image for Y, one per channel otherwise).
std::vector<Plane> prepare(const Tensor& t, const EvalProtocol& p) {
  const Shape& s = t.shape();
  const int crop = p.border_crop;
  if (crop < 0 || 2 * crop >= std::min(s.h, s.w)) {
    throw ContractError("metrics: border_crop " + std::to_string(crop) +
                        " must be >= 0 and less than half of " + s.str());
  }
  const bool to_y = p.y_only && s.c == 3;
  if (p.y_only && s.c != 3 && s.c != 1) {
    throw ShapeError("metrics: expected 1 or 3 channels, got " + std::to_string(s.c));
  }
  const std::int64_t h = s.h - 2 * crop, w = s.w - 2 * crop;
  std::vector<Plane> planes;
  for (std::int64_t n = 0; n < s.n; ++n) {
    const std::int64_t channels = to_y ? 1 : s.c;
    for (std::int64_t c = 0; c < channels; ++c) {
      Plane pl{h, w, std::vector<double>(static_cast<std::size_t>(h * w))};
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t sy = y + crop, sx = x + crop;
          pl.v[static_cast<std::size_t>(y * w + x)] =
              to_y ? luma(clamp01(t.at(n, 0, sy, sx)), clamp01(t.at(n, 1, sy, sx)),
                          clamp01(t.at(n, 2, sy, sx)))
                   : clamp01(t.at(n, c, sy, sx));
        }
      }
      planes.push_back(std::move(pl));
    }
  }
  return planes;
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

std::vector<double> gaussian_1d() {
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-region separable filtering.
std::vector<double> filter_valid(const std::vector<double>& src, std::int64_t h, std::int64_t w,
                                 const std::vector<double>& g) {
  const std::int64_t ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * src[static_cast<std::size_t>(y * w + x + k)];
      tmp[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * tmp[static_cast<std::size_t>((y + k) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  return out;
}

double ssim_plane(const Plane& a, const Plane& b, const std::vector<double>& g) {
  const std::size_t n = a.v.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.v[i] * a.v[i];
    bb[i] = b.v[i] * b.v[i];
    ab[i] = a.v[i] * b.v[i];
  }
  const auto mu_a = filter_valid(a.v, a.h, a.w, g);
  const auto mu_b = filter_valid(b.v, a.h, a.w, g);
  const auto s_aa = filter_valid(aa, a.h, a.w, g);
  const auto s_bb = filter_valid(bb, a.h, a.w, g);
  const auto s_ab = filter_valid(ab, a.h, a.w, g);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

Tensor rgb_to_y(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.c != 3) throw ShapeError("rgb_to_y: expected 3 channels, got " + std::to_string(s.c));
  Tensor out(Shape{s.n, 1, s.h, s.w});
  for (std::int64_t n = 0; n < s.n; ++n) {
    const float* r = image.plane(n, 0);
    const float* g = image.plane(n, 1);
    const float* b = image.plane(n, 2);
    float* y = out.plane(n, 0);
    for (std::int64_t i = 0; i < s.plane(); ++i) y[i] = static_cast<float>(luma(r[i], g[i], b[i]));
  }
  return out;
}

double psnr(const Tensor& a, const Tensor& b, const EvalProtocol& protocol) {
  require_same(a, b, "psnr");
  const auto pa = prepare(a, protocol);
  const auto pb = prepare(b, protocol);
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < pa.size(); ++p) {
    for (std::size_t i = 0; i < pa[p].v.size(); ++i) {
      const double d = pa[p].v[i] - pb[p].v[i];
      se += d * d;
    }
    count += pa[p].v.size();
  }
  if (se == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(count)));
}

double ssim(const Tensor& a, const Tensor& b, const EvalProtocol& protocol) {
  require_same(a, b, "ssim");
  const auto pa = prepare(a, protocol);
  const auto pb = prepare(b, protocol);
  if (pa.front().h < kWindow || pa.front().w < kWindow) {
    throw ContractError("ssim: cropped image " + std::to_string(pa.front().h) + "x" +
                        std::to_string(pa.front().w) + " smaller than the 11x11 window");
  }
  const auto g = gaussian_1d();
  double total = 0.0;
  for (std::size_t p = 0; p < pa.size(); ++p) total += ssim_plane(pa[p], pb[p], g);
  return total / static_cast<double>(pa.size());
}

std::vector<double> ssim_window() {
  const auto g = gaussian_1d();
  std::vector<double> w(kWindow * kWindow);
  for (int y = 0; y < kWindow; ++y)
    for (int x = 0; x < kWindow; ++x) w[y * kWindow + x] = g[y] * g[x];
  return w;
}

}  // namespace dimosr
