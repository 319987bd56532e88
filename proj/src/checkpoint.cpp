// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace dimosr {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'S', 'R'};
constexpr const char* kMomentM = "optimizer.m.";
constexpr const char* kMomentV = "optimizer.v.";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

struct Blob {
  std::string name;
  const Tensor* tensor;
};

nlohmann::json shape_json(const Shape& s) { return nlohmann::json::array({s.n, s.c, s.h, s.w}); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<Blob> blobs;
  for (const auto& [name, t] : ckpt.network.params) blobs.push_back({name, &t});
  if (ckpt.optimizer) {
    for (const auto& [name, t] : ckpt.optimizer->m) blobs.push_back({kMomentM + name, &t});
    for (const auto& [name, t] : ckpt.optimizer->v) blobs.push_back({kMomentV + name, &t});
  }

  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& b : blobs) {
    const std::uint64_t size = static_cast<std::uint64_t>(b.tensor->numel()) * sizeof(float);
    manifest.push_back({{"name", b.name}, {"shape", shape_json(b.tensor->shape())}, {"offset", offset}, {"size", size}});
    offset += size;
  }

  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["config"] = ckpt.network.config;
  header["manifest"] = std::move(manifest);
  header["rng"] = {{"seed", ckpt.rng.seed}, {"samples_drawn", ckpt.rng.samples_drawn}};
  header["metadata"] = {{"iteration", ckpt.metadata.iteration}, {"loss_tail", ckpt.metadata.loss_tail}};
  if (ckpt.optimizer) {
    const AdamState& o = *ckpt.optimizer;
    header["optimizer"] = {{"step", o.step}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}};
  }
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& b : blobs) {
    for (float f : b.tensor->data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint: bad magic bytes");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) throw CheckpointError("checkpoint truncated inside the header");
  const std::size_t blob_start = 16 + header_len;
  const std::uint64_t blob_len = bytes.size() - blob_start;

  nlohmann::json header;
  ModelConfig config;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(blob_start));
    config = header.at("config").get<ModelConfig>();
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + ex.what());
  }
  try {
    config.validate();
  } catch (const ConfigError& ex) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + ex.what());
  }

  struct Item {
    Shape shape;
    std::uint64_t offset, size;
  };
  std::map<std::string, Item> items;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  try {
    for (const auto& e : header.at("manifest")) {
      const auto name = e.at("name").get<std::string>();
      const auto dims = e.at("shape").get<std::vector<std::int64_t>>();
      if (dims.size() != 4) throw CheckpointError("manifest entry '" + name + "' has a non-4D shape");
      Item it{Shape{dims[0], dims[1], dims[2], dims[3]}, e.at("offset").get<std::uint64_t>(),
              e.at("size").get<std::uint64_t>()};
      if (it.size != static_cast<std::uint64_t>(it.shape.numel()) * sizeof(float)) {
        throw CheckpointError("manifest entry '" + name + "': size " + std::to_string(it.size) +
                              " does not match shape " + it.shape.str());
      }
      if (it.offset > blob_len || it.size > blob_len - it.offset) {
        throw CheckpointError("manifest entry '" + name + "' out of bounds: offset " +
                              std::to_string(it.offset) + " + size " + std::to_string(it.size) +
                              " exceeds blob section of " + std::to_string(blob_len) + " bytes");
      }
      if (!items.emplace(name, it).second) throw CheckpointError("duplicate manifest entry '" + name + "'");
      ranges.emplace_back(it.offset, it.size);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + ex.what());
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i - 1].first + ranges[i - 1].second > ranges[i].first) {
      throw CheckpointError("manifest entries overlap at offset " + std::to_string(ranges[i].first));
    }
  }
  std::uint64_t covered = 0;
  for (const auto& r : ranges) covered += r.second;
  if (covered != blob_len) {
    throw CheckpointError("blob section is " + std::to_string(blob_len) + " bytes but the manifest covers " +
                          std::to_string(covered));
  }

  auto read_tensor = [&](const std::string& name, const Shape& expected) {
    auto it = items.find(name);
    if (it == items.end()) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape != expected) {
      throw CheckpointError("tensor '" + name + "' has shape " + it->second.shape.str() +
                            " but the config implies " + expected.str());
    }
    Tensor t(expected);
    const std::size_t base = blob_start + it->second.offset;
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      t[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, base + 4 * static_cast<std::size_t>(i), 4)));
    }
    items.erase(it);
    return t;
  };

  Checkpoint ckpt;
  ckpt.network.config = config;
  const Network<float> shape_ref = build_model<float>(config, 0);
  for (const auto& [name, ref] : shape_ref.params) ckpt.network.params.add(name, read_tensor(name, ref.shape()));

  try {
    if (header.contains("optimizer")) {
      const auto& o = header.at("optimizer");
      AdamState st;
      o.at("step").get_to(st.step);
      o.at("beta1").get_to(st.beta1);
      o.at("beta2").get_to(st.beta2);
      o.at("eps").get_to(st.eps);
      for (const auto& [name, ref] : shape_ref.params) st.m.add(name, read_tensor(kMomentM + name, ref.shape()));
      for (const auto& [name, ref] : shape_ref.params) st.v.add(name, read_tensor(kMomentV + name, ref.shape()));
      ckpt.optimizer = std::move(st);
    }
    if (header.contains("rng")) {
      header.at("rng").at("seed").get_to(ckpt.rng.seed);
      header.at("rng").at("samples_drawn").get_to(ckpt.rng.samples_drawn);
    }
    if (header.contains("metadata")) {
      header.at("metadata").at("iteration").get_to(ckpt.metadata.iteration);
      header.at("metadata").at("loss_tail").get_to(ckpt.metadata.loss_tail);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + ex.what());
  }
  if (!items.empty()) {
    throw CheckpointError("checkpoint has tensor '" + items.begin()->first +
                          "' that the embedded config does not define");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("short write on checkpoint '" + path.string() + "'");
}

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.network = net;
  save_checkpoint(ckpt, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace dimosr
