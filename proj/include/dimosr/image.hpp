// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "dimosr/tensor.hpp"

namespace dimosr {

/// Reads an 8-bit PNG as a (1, 3, H, W) tensor in [0, 1] (value / 255).
/// Grayscale is replicated to three channels and alpha is dropped.
/// 16-bit images are rejected with FormatError.
Tensor load_png(const std::filesystem::path& path);

/// Writes channel 0..2 of batch item 0 as 8-bit RGB (1-channel input is
/// written as grayscale). Values are clamped to [0, 1] then rounded half
/// away from zero.
void save_png(const Tensor& image, const std::filesystem::path& path);

/// Rounds to the nearest 1/255 step after clamping, as a save/load round
/// trip would.
Tensor quantize_8bit(const Tensor& image);

/// Separable cubic resampling (a = -0.5) with symmetric boundary
/// extension. When downscaling, the kernel is widened by 1/scale
/// (antialiasing). Output extent is round(dim * scale).
Tensor bicubic_resize(const Tensor& image, double scale);

/// The eight symmetries of the square: bit 0 = horizontal flip applied
/// first, bits 1-2 = number of 90-degree counter-clockwise rotations.
struct Dihedral {
  int code = 0;  // 0..7

  bool flip() const { return (code & 1) != 0; }
  int rotations() const { return (code >> 1) & 3; }
  Dihedral inverse() const;
};

Tensor apply_dihedral(const Tensor& image, Dihedral t);
Tensor flip_horizontal(const Tensor& image);
Tensor flip_vertical(const Tensor& image);
/// 90 degrees counter-clockwise.
Tensor rotate90(const Tensor& image);

/// Crops rows [y, y + h) and columns [x, x + w).
Tensor crop(const Tensor& image, std::int64_t y, std::int64_t x, std::int64_t h, std::int64_t w);

}  // namespace dimosr
