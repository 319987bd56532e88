// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file layout:
//   "DMSR" | u32 LE version | u64 LE header length | JSON header | f32 LE blobs
// The header holds the model config, a manifest of {name, shape, offset,
// size} (offsets relative to the start of the blob section, in manifest
// order), and optional optimizer, RNG and training metadata.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dimosr/model.hpp"
#include "dimosr/optim.hpp"

namespace dimosr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct RngState {
  std::uint64_t seed = 0;
  /// Training samples consumed so far; sample k uses Rng::stream(seed, k).
  std::uint64_t samples_drawn = 0;

  friend bool operator==(const RngState&, const RngState&) = default;
};

struct TrainingMetadata {
  std::int64_t iteration = 0;
  std::vector<double> loss_tail;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  Network<float> network;
  std::optional<AdamState> optimizer;
  RngState rng;
  TrainingMetadata metadata;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on bad magic, version mismatch, malformed header,
/// out-of-bounds or overlapping blobs, truncation, or a manifest that does
/// not match the network built from the embedded config.
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dimosr
