// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training/evaluation data: LR generation, aligned patch sampling, dihedral
// augmentation and the on-disk dataset manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dimosr/image.hpp"
#include "dimosr/rng.hpp"
#include "json.hpp"

namespace dimosr {

inline constexpr const char* kBicubicKernelId = "bicubic-a-0.5-antialias";

/// A full HR image with its LR counterpart (HR extent is exactly scale x LR).
struct ImagePair {
  std::string id;
  Tensor hr;
  Tensor lr;
};

struct PairSample {
  Tensor hr;  // (1, 3, s*p, s*p)
  Tensor lr;  // (1, 3, p, p)
  std::string source_id;
  std::int64_t origin_y = 0;  // LR coordinates; HR origin is scale x this
  std::int64_t origin_x = 0;
};

/// Crops the HR image so both extents are multiples of `scale`.
Tensor modcrop(const Tensor& hr, int scale);

/// Bicubic downscale of the modcropped HR image, optionally quantized to
/// 8 bits (the default for training data).
Tensor make_lr(const Tensor& hr, int scale, bool quantize = true);

/// Uniform random aligned crop; std::nullopt when the LR image is smaller
/// than the patch (the caller reports and skips it).
std::optional<PairSample> sample_patch(const ImagePair& pair, int scale, int patch_lr, Rng& rng);

/// Crop at an explicit LR origin.
PairSample crop_pair(const ImagePair& pair, int scale, int patch_lr, std::int64_t y,
                     std::int64_t x);

/// Applies the same dihedral transform to LR and HR.
PairSample transform_pair(const PairSample& sample, Dihedral t);

/// Draws one of the eight dihedral transforms uniformly and applies it.
PairSample augment(const PairSample& sample, Rng& rng);

struct ManifestEntry {
  std::string path;     // relative to the manifest root
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::string sha256;   // of the HR file bytes
  std::string lr_path;  // pre-generated LR, relative to root; empty if none
};

struct DatasetManifest {
  std::string root;
  int scale = 4;
  std::string kernel = kBicubicKernelId;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  /// Parses the manifest; with `verify`, every referenced file must exist
  /// and HR hashes must match (FormatError otherwise).
  static DatasetManifest load(const std::filesystem::path& path, bool verify = true);
};

std::string sha256_file(const std::filesystem::path& path);

struct IngestResult {
  DatasetManifest manifest;
  /// Files that could not be read, with the reason. Non-fatal.
  std::vector<std::string> failures;
};

/// Scans `dir` recursively for PNGs (sorted by relative path; directories
/// named LR_x* are skipped) and, when `write_lr`, writes 8-bit bicubic LR
/// images to `dir/LR_x<scale>/`. Throws FormatError("no images found") when
/// nothing usable is present.
IngestResult ingest_directory(const std::filesystem::path& dir, int scale, bool write_lr = true);

/// Loads every entry as an ImagePair: HR modcropped, LR from disk when
/// pre-generated or produced on the fly.
std::vector<ImagePair> load_pairs(const DatasetManifest& manifest);

}  // namespace dimosr
