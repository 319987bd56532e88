// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace dimosr {

Tensor load_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw FormatError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw FormatError("unsupported PNG bit depth in '" + path.string() +
                      "': only 8-bit images are supported");
  }
  img.format = PNG_FORMAT_RGB;
  const auto h = static_cast<std::int64_t>(img.height);
  const auto w = static_cast<std::int64_t>(img.width);
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  Tensor out(Shape{1, 3, h, w});
  for (std::int64_t c = 0; c < 3; ++c) {
    float* dst = out.plane(0, c);
    for (std::int64_t i = 0; i < h * w; ++i) dst[i] = static_cast<float>(buf[i * 3 + c]) / 255.0f;
  }
  return out;
}

namespace {

png_byte to_byte(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<png_byte>(std::round(clamped * 255.0));
}

}  // namespace

void save_png(const Tensor& image, const std::filesystem::path& path) {
  const Shape& s = image.shape();
  if (s.n < 1 || (s.c != 3 && s.c != 1)) {
    throw ShapeError("save_png: expected (N, 3|1, H, W), got " + s.str());
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(s.w);
  img.height = static_cast<png_uint_32>(s.h);
  img.format = s.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(static_cast<std::size_t>(s.plane() * s.c));
  for (std::int64_t c = 0; c < s.c; ++c) {
    const float* src = image.plane(0, c);
    for (std::int64_t i = 0; i < s.plane(); ++i) buf[static_cast<std::size_t>(i * s.c + c)] = to_byte(src[i]);
  }
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw FormatError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

Tensor quantize_8bit(const Tensor& image) {
  Tensor out(image.shape());
  for (std::int64_t i = 0; i < image.numel(); ++i) out[i] = static_cast<float>(to_byte(image[i])) / 255.0f;
  return out;
}

namespace {

double cubic(double x) {
  const double a = std::abs(x);
  const double a2 = a * a, a3 = a2 * a;
  if (a <= 1.0) return 1.5 * a3 - 2.5 * a2 + 1.0;
  if (a <= 2.0) return -0.5 * a3 + 2.5 * a2 - 4.0 * a + 2.0;
  return 0.0;
}

struct Contribution {
  std::vector<std::int64_t> index;
  std::vector<double> weight;
};

// Resampling weights along one axis; 1-based output coordinates map to
// u = i / scale + 0.5 (1 - 1 / scale) in 1-based input coordinates.
std::vector<Contribution> contributions(std::int64_t in, std::int64_t out, double scale,
                                        double inv_scale) {
  const bool shrink = scale < 1.0;
  const double width = shrink ? 4.0 * inv_scale : 4.0;
  const auto taps = static_cast<std::int64_t>(std::ceil(width)) + 2;
  std::vector<Contribution> result(static_cast<std::size_t>(out));
  for (std::int64_t i = 1; i <= out; ++i) {
    const double u = static_cast<double>(i) * inv_scale + 0.5 * (1.0 - inv_scale);
    const auto left = static_cast<std::int64_t>(std::floor(u - width / 2.0));
    Contribution& c = result[static_cast<std::size_t>(i - 1)];
    double total = 0.0;
    for (std::int64_t p = 0; p < taps; ++p) {
      const std::int64_t j = left + p;
      const double d = u - static_cast<double>(j);
      const double wgt = shrink ? scale * cubic(scale * d) : cubic(d);
      if (wgt == 0.0) continue;
      // Symmetric extension: ... 2 1 | 1 2 ... n | n n-1 ...
      std::int64_t m = (j - 1) % (2 * in);
      if (m < 0) m += 2 * in;
      const std::int64_t idx = m < in ? m : 2 * in - 1 - m;
      c.index.push_back(idx);
      c.weight.push_back(wgt);
      total += wgt;
    }
    for (double& wgt : c.weight) wgt /= total;
  }
  return result;
}

}  // namespace

Tensor bicubic_resize(const Tensor& image, double scale) {
  if (!(scale > 0.0)) throw ContractError("bicubic_resize: scale must be positive");
  const Shape& s = image.shape();
  const auto oh = static_cast<std::int64_t>(std::llround(static_cast<double>(s.h) * scale));
  const auto ow = static_cast<std::int64_t>(std::llround(static_cast<double>(s.w) * scale));
  if (oh < 1 || ow < 1) {
    throw ContractError("bicubic_resize: output size " + std::to_string(oh) + "x" +
                        std::to_string(ow) + " is degenerate");
  }
  // Snap 1/scale to an integer when the caller means an integer factor.
  double inv = 1.0 / scale;
  if (std::abs(inv - std::round(inv)) < 1e-9) inv = std::round(inv);
  if (std::abs(scale - std::round(scale)) < 1e-9) scale = std::round(scale);

  const auto rows = contributions(s.h, oh, scale, inv);
  const auto cols = contributions(s.w, ow, scale, inv);
  Tensor out(Shape{s.n, s.c, oh, ow});
  const std::int64_t planes = s.n * s.c;
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = image.data().data() + p * s.plane();
    std::vector<double> tmp(static_cast<std::size_t>(oh * s.w));
    for (std::int64_t y = 0; y < oh; ++y) {
      const Contribution& c = rows[static_cast<std::size_t>(y)];
      for (std::int64_t x = 0; x < s.w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c.index.size(); ++k) acc += c.weight[k] * src[c.index[k] * s.w + x];
        tmp[static_cast<std::size_t>(y * s.w + x)] = acc;
      }
    }
    float* dst = out.data().data() + p * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::int64_t x = 0; x < ow; ++x) {
        const Contribution& c = cols[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (std::size_t k = 0; k < c.index.size(); ++k) {
          acc += c.weight[k] * tmp[static_cast<std::size_t>(y * s.w + c.index[k])];
        }
        dst[y * ow + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Dihedral Dihedral::inverse() const {
  // Reflections are involutions; pure rotations invert to 4 - k.
  if (flip()) return *this;
  return Dihedral{((4 - rotations()) % 4) << 1};
}

Tensor flip_horizontal(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x) out.at(n, c, y, x) = image.at(n, c, y, s.w - 1 - x);
  return out;
}

Tensor flip_vertical(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x) out.at(n, c, y, x) = image.at(n, c, s.h - 1 - y, x);
  return out;
}

Tensor rotate90(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(Shape{s.n, s.c, s.w, s.h});
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.w; ++y)
        for (std::int64_t x = 0; x < s.h; ++x) out.at(n, c, y, x) = image.at(n, c, x, s.w - 1 - y);
  return out;
}

Tensor apply_dihedral(const Tensor& image, Dihedral t) {
  Tensor out = t.flip() ? flip_horizontal(image) : image;
  for (int r = 0; r < t.rotations(); ++r) out = rotate90(out);
  return out;
}

Tensor crop(const Tensor& image, std::int64_t y, std::int64_t x, std::int64_t h, std::int64_t w) {
  const Shape& s = image.shape();
  if (y < 0 || x < 0 || h < 0 || w < 0 || y + h > s.h || x + w > s.w) {
    throw ShapeError("crop: window (" + std::to_string(y) + "," + std::to_string(x) + ") " +
                     std::to_string(h) + "x" + std::to_string(w) + " outside " + s.str());
  }
  Tensor out(Shape{s.n, s.c, h, w});
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t r = 0; r < h; ++r) {
        const float* src = image.plane(n, c) + (y + r) * s.w + x;
        std::copy(src, src + w, out.plane(n, c) + r * w);
      }
  return out;
}

}  // namespace dimosr
