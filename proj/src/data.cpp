// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dimosr {

namespace fs = std::filesystem;

Tensor modcrop(const Tensor& hr, int scale) {
  const std::int64_t h = hr.h() - hr.h() % scale;
  const std::int64_t w = hr.w() - hr.w() % scale;
  if (h == hr.h() && w == hr.w()) return hr;
  return crop(hr, 0, 0, h, w);
}

Tensor make_lr(const Tensor& hr, int scale, bool quantize) {
  Tensor lr = bicubic_resize(modcrop(hr, scale), 1.0 / scale);
  return quantize ? quantize_8bit(lr) : lr;
}

PairSample crop_pair(const ImagePair& pair, int scale, int patch_lr, std::int64_t y,
                     std::int64_t x) {
  PairSample s;
  s.lr = crop(pair.lr, y, x, patch_lr, patch_lr);
  s.hr = crop(pair.hr, y * scale, x * scale, static_cast<std::int64_t>(patch_lr) * scale,
              static_cast<std::int64_t>(patch_lr) * scale);
  s.source_id = pair.id;
  s.origin_y = y;
  s.origin_x = x;
  return s;
}

std::optional<PairSample> sample_patch(const ImagePair& pair, int scale, int patch_lr, Rng& rng) {
  if (pair.hr.h() != pair.lr.h() * scale || pair.hr.w() != pair.lr.w() * scale) {
    throw ShapeError("sample_patch: HR " + pair.hr.shape().str() + " is not " +
                     std::to_string(scale) + "x LR " + pair.lr.shape().str());
  }
  if (pair.lr.h() < patch_lr || pair.lr.w() < patch_lr) return std::nullopt;
  const auto y = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(pair.lr.h() - patch_lr + 1)));
  const auto x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(pair.lr.w() - patch_lr + 1)));
  return crop_pair(pair, scale, patch_lr, y, x);
}

PairSample transform_pair(const PairSample& sample, Dihedral t) {
  PairSample out = sample;
  out.lr = apply_dihedral(sample.lr, t);
  out.hr = apply_dihedral(sample.hr, t);
  return out;
}

PairSample augment(const PairSample& sample, Rng& rng) {
  if (sample.lr.h() != sample.lr.w()) {
    throw ContractError("augment: rotations need square patches, got " + sample.lr.shape().str());
  }
  return transform_pair(sample, Dihedral{static_cast<int>(rng.below(8))});
}

// --- Manifest -----------------------------------------------------------------

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json je{{"path", e.path}, {"width", e.width}, {"height", e.height}, {"sha256", e.sha256}};
    je["lr_path"] = e.lr_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.lr_path);
    entries_json.push_back(std::move(je));
  }
  return {{"root", root},
          {"scale", scale},
          {"kernel", kernel},
          {"seed", seed},
          {"entries", std::move(entries_json)}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    j.at("root").get_to(m.root);
    j.at("scale").get_to(m.scale);
    j.at("kernel").get_to(m.kernel);
    j.at("seed").get_to(m.seed);
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      je.at("path").get_to(e.path);
      je.at("width").get_to(e.width);
      je.at("height").get_to(e.height);
      je.at("sha256").get_to(e.sha256);
      if (je.contains("lr_path") && !je.at("lr_path").is_null()) je.at("lr_path").get_to(e.lr_path);
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed dataset manifest: ") + ex.what());
  }
}

void DatasetManifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write manifest '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const fs::path& path, bool verify) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + ex.what());
  }
  DatasetManifest m = from_json(j);
  if (verify) {
    for (const auto& e : m.entries) {
      const fs::path hr = fs::path(m.root) / e.path;
      if (!fs::exists(hr)) throw FormatError("manifest entry missing on disk: " + hr.string());
      if (sha256_file(hr) != e.sha256) throw FormatError("hash mismatch for " + hr.string());
      if (!e.lr_path.empty() && !fs::exists(fs::path(m.root) / e.lr_path)) {
        throw FormatError("pre-generated LR missing on disk: " + (fs::path(m.root) / e.lr_path).string());
      }
    }
  }
  return m;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

IngestResult ingest_directory(const fs::path& dir, int scale, bool write_lr) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  if (scale < 2 || scale > 4) throw ConfigError("ingest: scale must be 2, 3 or 4");
  const fs::path root = fs::absolute(dir).lexically_normal();
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it->path().filename().string().rfind("LR_x", 0) == 0) {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::string ext = it->path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(it->path().lexically_relative(root));
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  result.manifest.root = root.string();
  result.manifest.scale = scale;
  const fs::path lr_dir = "LR_x" + std::to_string(scale);
  for (const auto& rel : files) {
    try {
      const Tensor hr = load_png(root / rel);
      ManifestEntry e;
      e.path = rel.generic_string();
      e.width = hr.w();
      e.height = hr.h();
      e.sha256 = sha256_file(root / rel);
      if (write_lr) {
        const fs::path lr_rel = lr_dir / rel;
        fs::create_directories((root / lr_rel).parent_path());
        save_png(make_lr(hr, scale, true), root / lr_rel);
        e.lr_path = lr_rel.generic_string();
      }
      result.manifest.entries.push_back(std::move(e));
    } catch (const Error& ex) {
      result.failures.push_back(rel.generic_string() + ": " + ex.what());
    }
  }
  if (result.manifest.entries.empty()) throw FormatError("no images found in " + root.string());
  return result;
}

std::vector<ImagePair> load_pairs(const DatasetManifest& manifest) {
  std::vector<ImagePair> pairs;
  pairs.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    ImagePair p;
    p.id = e.path;
    p.hr = modcrop(load_png(fs::path(manifest.root) / e.path), manifest.scale);
    p.lr = e.lr_path.empty() ? make_lr(p.hr, manifest.scale, true)
                             : load_png(fs::path(manifest.root) / e.lr_path);
    if (p.hr.h() != p.lr.h() * manifest.scale || p.hr.w() != p.lr.w() * manifest.scale) {
      throw FormatError("LR image for " + e.path + " does not match HR extent at scale " +
                        std::to_string(manifest.scale));
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace dimosr
