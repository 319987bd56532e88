// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <png.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dimosr/data.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace dimosr {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("dimosr_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- Resampling -------------------------------------------------------------

TEST(Bicubic, ConstantStaysConstant) {
  const Tensor x = Tensor::full({1, 3, 13, 17}, 0.42f);
  for (double s : {0.25, 0.5, 1.0 / 3.0, 2.0, 3.0}) {
    const Tensor y = bicubic_resize(x, s);
    EXPECT_EQ(y.h(), std::lround(13 * s));
    EXPECT_EQ(y.w(), std::lround(17 * s));
    for (float v : y.data()) EXPECT_NEAR(v, 0.42f, 1e-6);
  }
}

TEST(Bicubic, RampStaysLinearAwayFromBorders) {
  const std::int64_t n = 32;
  Tensor x({1, 1, 8, n});
  for (int y = 0; y < 8; ++y)
    for (int i = 0; i < n; ++i) x.at(0, 0, y, i) = 0.01f * i;
  const Tensor y = bicubic_resize(x, 0.5);
  ASSERT_EQ(y.w(), n / 2);
  // Output pixel j is centred on input coordinate 2j + 0.5.
  for (int j = 3; j < n / 2 - 3; ++j) EXPECT_NEAR(y.at(0, 0, 2, j), 0.01 * (2 * j + 0.5), 1e-4);
}

TEST(Bicubic, UnitScaleIsIdentity) {
  const Tensor x = random_tensor<float>({1, 3, 4, 4}, 1, 0.0, 1.0);
  EXPECT_TRUE(bitwise_equal(bicubic_resize(x, 1.0), x));
  EXPECT_THROW(bicubic_resize(x, 0.0), ContractError);
  EXPECT_THROW(bicubic_resize(x, 0.01), ContractError);
}

TEST(Bicubic, UpscaleOfSmoothImageIsAccurate) {
  // Quadratic surface sampled at pixel centres; cubic convolution reproduces
  // degree-1 exactly and degree-2 to second order.
  Tensor x({1, 1, 16, 16});
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) x.at(0, 0, i, j) = 0.3f + 0.02f * i - 0.01f * j;
  const Tensor y = bicubic_resize(x, 2.0);
  for (int i = 6; i < 26; ++i)
    for (int j = 6; j < 26; ++j) {
      const double si = (i + 0.5) / 2 - 0.5, sj = (j + 0.5) / 2 - 0.5;
      EXPECT_NEAR(y.at(0, 0, i, j), 0.3 + 0.02 * si - 0.01 * sj, 1e-5);
    }
}

// --- PNG I/O --------------------------------------------------------------

TEST(Png, RoundTripIsLossless) {
  TempDir dir("png");
  Tensor x({1, 3, 7, 9});
  Rng rng(2);
  for (float& v : x.data()) v = static_cast<float>(rng.below(256)) / 255.0f;
  save_png(x, dir.path() / "a.png");
  EXPECT_TRUE(bitwise_equal(load_png(dir.path() / "a.png"), x));
}

TEST(Png, SaveClampsAndRounds) {
  TempDir dir("pngclamp");
  Tensor x({1, 3, 1, 4});
  const float vals[4] = {-0.5f, 1.5f, 0.5f, 100.49f / 255.0f};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 4; ++i) x.at(0, c, 0, i) = vals[i];
  save_png(x, dir.path() / "c.png");
  const Tensor y = load_png(dir.path() / "c.png");
  EXPECT_EQ(y.at(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(y.at(0, 0, 0, 1), 1.0f);
  EXPECT_EQ(y.at(0, 0, 0, 2), 128.0f / 255.0f);  // 127.5 rounds away from zero
  EXPECT_EQ(y.at(0, 0, 0, 3), 100.0f / 255.0f);
  EXPECT_TRUE(bitwise_equal(quantize_8bit(x), y));
}

TEST(Png, GrayscaleIsReplicated) {
  TempDir dir("gray");
  Tensor g({1, 1, 3, 5});
  for (int i = 0; i < 15; ++i) g[i] = static_cast<float>(i * 17) / 255.0f;
  save_png(g, dir.path() / "g.png");
  const Tensor y = load_png(dir.path() / "g.png");
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3, 5}));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 15; ++i) EXPECT_EQ(y.plane(0, c)[i], g[i]);
}

TEST(Png, SixteenBitIsRejected) {
  TempDir dir("png16");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = 4;
  img.height = 4;
  img.format = PNG_FORMAT_LINEAR_RGB;
  std::vector<png_uint_16> buf(4 * 4 * 3, 30000);
  const fs::path p = dir.path() / "deep.png";
  ASSERT_TRUE(png_image_write_to_file(&img, p.c_str(), 0, buf.data(), 0, nullptr));
  try {
    load_png(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bit depth"), std::string::npos) << e.what();
  }
}

TEST(Png, MissingOrCorruptIsFormatError) {
  TempDir dir("pngbad");
  EXPECT_THROW(load_png(dir.path() / "nope.png"), FormatError);
  std::ofstream(dir.path() / "junk.png") << "not a png";
  EXPECT_THROW(load_png(dir.path() / "junk.png"), FormatError);
}

// --- Dihedral ---------------------------------------------------------------

TEST(Dihedral, GroupIdentities) {
  const Tensor x = random_tensor<float>({1, 3, 6, 6}, 3);
  EXPECT_TRUE(bitwise_equal(apply_dihedral(x, Dihedral{0}), x));
  EXPECT_TRUE(bitwise_equal(apply_dihedral(x, Dihedral{4}), flip_horizontal(flip_vertical(x))));
  EXPECT_TRUE(bitwise_equal(rotate90(rotate90(rotate90(rotate90(x)))), x));
  EXPECT_TRUE(bitwise_equal(apply_dihedral(x, Dihedral{1}), flip_horizontal(x)));
  EXPECT_TRUE(bitwise_equal(apply_dihedral(x, Dihedral{2}), rotate90(x)));
  for (int code = 0; code < 8; ++code) {
    const Dihedral t{code};
    EXPECT_TRUE(bitwise_equal(apply_dihedral(apply_dihedral(x, t), t.inverse()), x)) << code;
  }
}

TEST(Dihedral, Rotate90IsCounterClockwise) {
  Tensor x({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor y = rotate90(x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 2}));
  const std::vector<float> want{3, 6, 2, 5, 1, 4};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(y[i], want[i]);
}

// --- Patch sampling ----------------------------------------------------------

ImagePair make_pair(std::uint64_t seed, int scale, std::int64_t h, std::int64_t w, bool quantize) {
  const Tensor hr = modcrop(testing::synthetic_image(h, w, seed), scale);
  return ImagePair{"img" + std::to_string(seed), hr, make_lr(hr, scale, quantize)};
}

TEST(SamplePatch, PublishedGeometry) {
  const ImagePair pair = make_pair(4, 4, 600, 560, true);
  Rng rng(5);
  const auto s = sample_patch(pair, 4, 128, rng);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->lr.shape(), (Shape{1, 3, 128, 128}));
  EXPECT_EQ(s->hr.shape(), (Shape{1, 3, 512, 512}));
  EXPECT_TRUE(bitwise_equal(s->lr, crop(pair.lr, s->origin_y, s->origin_x, 128, 128)));
  EXPECT_TRUE(bitwise_equal(s->hr, crop(pair.hr, 4 * s->origin_y, 4 * s->origin_x, 512, 512)));
  EXPECT_EQ(s->source_id, pair.id);
}

TEST(SamplePatch, OriginZeroIsPrefix) {
  const ImagePair pair = make_pair(6, 2, 40, 36, true);
  const PairSample s = crop_pair(pair, 2, 8, 0, 0);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) EXPECT_EQ(s.lr.at(0, c, y, x), pair.lr.at(0, c, y, x));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(s.hr.at(0, 1, y, x), pair.hr.at(0, 1, y, x));
}

TEST(SamplePatch, TooSmallIsSkippedAndMisalignedThrows) {
  const ImagePair pair = make_pair(7, 4, 40, 40, true);
  Rng rng(1);
  EXPECT_FALSE(sample_patch(pair, 4, 16, rng).has_value());
  ImagePair bad = pair;
  bad.hr = crop(pair.hr, 0, 0, 36, 40);
  EXPECT_THROW(sample_patch(bad, 4, 4, rng), ShapeError);
}

TEST(SamplePatch, OriginsCoverTheImageUniformly) {
  const ImagePair pair = make_pair(8, 2, 24, 24, true);
  Rng rng(9);
  std::vector<int> hits(12 - 8 + 1, 0);
  for (int i = 0; i < 5000; ++i) ++hits[sample_patch(pair, 2, 8, rng)->origin_y];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(SamplePatch, SelfConsistentWithDegradation) {
  for (int scale : {2, 3, 4}) {
    const ImagePair pair = make_pair(10 + scale, scale, 96, 84, false);
    Rng rng(11);
    const int p = 16;
    const PairSample s = *sample_patch(pair, scale, p, rng);
    const Tensor down = bicubic_resize(s.hr, 1.0 / scale);
    // The widened kernel reaches 2 LR pixels past the crop edge.
    const int m = 3;
    EXPECT_LT(max_abs_diff(crop(down, m, m, p - 2 * m, p - 2 * m), crop(s.lr, m, m, p - 2 * m, p - 2 * m)), 1e-6)
        << "scale " << scale;
  }
}

TEST(Augment, DrawsAllEightAndPreservesAlignment) {
  const ImagePair pair = make_pair(12, 2, 64, 64, false);
  const PairSample base = crop_pair(pair, 2, 16, 4, 6);
  std::vector<int> seen(8, 0);
  Rng rng(13);
  for (int i = 0; i < 400; ++i) {
    Rng probe = rng;
    const Dihedral t{static_cast<int>(probe.below(8))};
    const PairSample a = augment(base, rng);
    ++seen[t.code];
    EXPECT_TRUE(bitwise_equal(a.lr, apply_dihedral(base.lr, t)));
    EXPECT_TRUE(bitwise_equal(a.hr, apply_dihedral(base.hr, t)));
  }
  for (int s : seen) EXPECT_GT(s, 20);

  // Dihedral maps commute with separable resampling on squares.
  const Tensor lr = bicubic_resize(base.hr, 0.5);
  for (int code = 0; code < 8; ++code) {
    const PairSample a = transform_pair(PairSample{base.hr, lr, base.source_id, 0, 0}, Dihedral{code});
    EXPECT_LT(max_abs_diff(bicubic_resize(a.hr, 0.5), a.lr), 1e-6) << code;
  }
}

TEST(Augment, IdentityAndInverse) {
  const ImagePair pair = make_pair(14, 2, 32, 32, true);
  const PairSample s = crop_pair(pair, 2, 8, 1, 2);
  const PairSample same = transform_pair(s, Dihedral{0});
  EXPECT_TRUE(bitwise_equal(same.lr, s.lr));
  EXPECT_TRUE(bitwise_equal(same.hr, s.hr));
  for (int code = 0; code < 8; ++code) {
    const PairSample back = transform_pair(transform_pair(s, Dihedral{code}), Dihedral{code}.inverse());
    EXPECT_TRUE(bitwise_equal(back.lr, s.lr));
    EXPECT_TRUE(bitwise_equal(back.hr, s.hr));
  }
  PairSample rect = s;
  rect.lr = crop(s.lr, 0, 0, 8, 6);
  Rng rng(0);
  EXPECT_THROW(augment(rect, rng), ContractError);
}

TEST(Sampling, SameSeedSameSequence) {
  const ImagePair pair = make_pair(15, 2, 48, 40, true);
  auto run = [&] {
    std::vector<std::int64_t> out;
    Rng rng = Rng::stream(77, 3);
    for (int i = 0; i < 50; ++i) {
      const PairSample s = augment(*sample_patch(pair, 2, 8, rng), rng);
      out.push_back(s.origin_y * 1000 + s.origin_x);
      out.push_back(static_cast<std::int64_t>(std::llround(s.lr[5] * 255.0f)));
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Rng, FixedSequence) {
  // mt19937_64 is fully specified by the standard; pin the seeded stream so
  // a platform change cannot silently alter sampling.
  Rng a(0), b(0), c(1);
  const std::uint64_t first = a.next();
  EXPECT_EQ(first, b.next());
  EXPECT_NE(first, c.next());
  Rng d(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(d.below(7), 7u);
  }
  EXPECT_NE(Rng::stream(5, 0).next(), Rng::stream(5, 1).next());
}

// --- Manifest and ingestion -------------------------------------------------

TEST(Ingest, EmptyDirectoryFails) {
  TempDir dir("empty");
  try {
    ingest_directory(dir.path(), 4);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("no images found"), std::string::npos);
  }
}

TEST(Ingest, FiveImagesAtScaleFour) {
  TempDir dir("ingest5");
  testing::write_synthetic_corpus(dir.path() / "hr", 5, 48, 40, 3);
  const IngestResult r = ingest_directory(dir.path() / "hr", 4);
  EXPECT_TRUE(r.failures.empty());
  ASSERT_EQ(r.manifest.entries.size(), 5u);
  EXPECT_EQ(r.manifest.scale, 4);
  EXPECT_EQ(r.manifest.kernel, kBicubicKernelId);
  for (const auto& e : r.manifest.entries) {
    EXPECT_EQ(e.width, 40);
    EXPECT_EQ(e.height, 48);
    EXPECT_EQ(e.sha256.size(), 64u);
    const Tensor lr = load_png(fs::path(r.manifest.root) / e.lr_path);
    EXPECT_EQ(lr.shape(), (Shape{1, 3, 12, 10}));
  }
  std::size_t lr_files = 0;
  for (const auto& f : fs::directory_iterator(dir.path() / "hr" / "LR_x4")) lr_files += f.is_regular_file();
  EXPECT_EQ(lr_files, 5u);
}

TEST(Ingest, ReingestIsByteIdentical) {
  TempDir dir("reingest");
  testing::write_synthetic_corpus(dir.path(), 3, 32, 32, 4);
  ingest_directory(dir.path(), 2).manifest.save(dir.path() / "a.json");
  ingest_directory(dir.path(), 2).manifest.save(dir.path() / "b.json");
  EXPECT_EQ(read_file(dir.path() / "a.json"), read_file(dir.path() / "b.json"));
  const DatasetManifest m = DatasetManifest::load(dir.path() / "a.json");
  EXPECT_EQ(m.to_json(), ingest_directory(dir.path(), 2).manifest.to_json());
}

TEST(Ingest, UnreadableFileIsNonFatal) {
  TempDir dir("unreadable");
  testing::write_synthetic_corpus(dir.path(), 2, 16, 16, 5);
  std::ofstream(dir.path() / "broken.png") << "garbage";
  const IngestResult r = ingest_directory(dir.path(), 2);
  EXPECT_EQ(r.manifest.entries.size(), 2u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("broken.png"), std::string::npos);
}

TEST(Manifest, HashMismatchAndMissingFilesAreRejected) {
  TempDir dir("hash");
  testing::write_synthetic_corpus(dir.path(), 2, 16, 16, 6);
  ingest_directory(dir.path(), 2).manifest.save(dir.path() / "m.json");
  EXPECT_NO_THROW(DatasetManifest::load(dir.path() / "m.json"));

  save_png(testing::synthetic_image(16, 16, 999), dir.path() / "img_001.png");
  EXPECT_THROW(DatasetManifest::load(dir.path() / "m.json"), FormatError);
  EXPECT_NO_THROW(DatasetManifest::load(dir.path() / "m.json", false));

  fs::remove(dir.path() / "img_000.png");
  EXPECT_THROW(DatasetManifest::load(dir.path() / "m.json"), FormatError);
  std::ofstream(dir.path() / "bad.json") << "{\"root\": 3}";
  EXPECT_THROW(DatasetManifest::load(dir.path() / "bad.json"), FormatError);
}

TEST(Manifest, OnTheFlyAgreesWithPregenerated) {
  TempDir dir("onthefly");
  testing::write_synthetic_corpus(dir.path(), 2, 50, 46, 7);
  const DatasetManifest disk = ingest_directory(dir.path(), 4, true).manifest;
  const DatasetManifest fly = ingest_directory(dir.path(), 4, false).manifest;
  for (const auto& e : fly.entries) EXPECT_TRUE(e.lr_path.empty());
  const auto a = load_pairs(disk);
  const auto b = load_pairs(fly);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hr.shape(), (Shape{1, 3, 48, 44}));
    EXPECT_TRUE(bitwise_equal(a[i].hr, b[i].hr));
    EXPECT_LE(max_abs_diff(a[i].lr, b[i].lr), 1.0 / 255.0 + 1e-7);
  }
}

}  // namespace
}  // namespace dimosr
