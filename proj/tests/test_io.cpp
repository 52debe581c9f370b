// Copyright 2026 The vidshuffle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <zlib.h>

#include <filesystem>
#include <string>

#include "test_util.hpp"
#include "vidshuffle/io.hpp"

namespace vidshuffle {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vidshuffle_test_io_" + name);
  fs::remove_all(p);
  return p;
}

TEST(TensorFormat, HeaderBytesMatchDocumentedLayout) {
  Tensor t(Shape{1, 1, 2, 1});
  t[0] = 7.0f;
  t[1] = 255.0f;
  const std::string want("VSVT\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00\x02\x00\x00\x00"
                         "\x01\x00\x00\x00\x00\x00\x00\x00\x07\xff",
                         30);
  EXPECT_EQ(io::encode_tensor(t, io::DType::kUint8), want);
  EXPECT_EQ(io::decode_tensor(want), t);
}

TEST(TensorFormat, FloatRoundTripIsBitExact) {
  Tensor t(Shape{2, 3, 4, 3});
  Rng rng(2);
  std::normal_distribution<float> nd(0.0f, 3.0f);
  for (float& x : t.vec()) x = nd(rng);
  EXPECT_EQ(io::natural_dtype(t), io::DType::kFloat32);
  EXPECT_EQ(io::decode_tensor(io::encode_tensor(t, io::DType::kFloat32)), t);
  EXPECT_THROW(io::encode_tensor(t, io::DType::kUint8), io::FormatError);
}

TEST(TensorFormat, RejectsCorruptInput) {
  const std::string good = io::encode_tensor(Tensor(Shape{1, 2, 2, 3}), io::DType::kUint8);
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_tensor(bad), io::FormatError);
  EXPECT_THROW(io::decode_tensor(good.substr(0, good.size() - 1)), io::FormatError);
  EXPECT_THROW(io::decode_tensor(good + "z"), io::FormatError);
  bad = good;
  bad[24] = 9;
  EXPECT_THROW(io::decode_tensor(bad), io::FormatError);
}

TEST(TensorFile, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  const Video v = test::random_video(Shape{2, 4, 4, 3}, 1);
  io::save_tensor(dir / "a.vst", v);
  EXPECT_EQ(io::load_tensor(dir / "a.vst"), v);
  EXPECT_FALSE(fs::exists(dir / "a.vst.tmp"));
  EXPECT_EQ(fs::file_size(dir / "a.vst"), 28u + v.size());
  EXPECT_THROW(io::load_tensor(dir / "missing.vst"), std::runtime_error);
  fs::remove_all(dir);
}

TEST(Dataset, RoundTripsVideosLabelsMetaAndPerturbations) {
  toydata::ToySpec spec;
  spec.variant = 2;
  spec.videos_total = 16;
  spec.frame_size = 32;
  spec.object_size = 8;
  spec.frames_per_video = 4;
  spec.seed = 5;
  const auto [train, test] = toydata::split_dataset(toydata::generate_dataset(spec), 0.5);
  std::vector<Tensor> perts;
  for (std::size_t i = 0; i < test.items.size(); ++i) {
    Tensor d(test.items[i].video.shape());
    d[i] = -1.5f;
    perts.push_back(d);
  }
  const fs::path dir = scratch("dataset");
  io::save_dataset(dir, train, test, {{"toy_spec", io::toy_spec_to_json(spec)}}, &perts);
  const auto back = io::load_dataset(dir);
  ASSERT_EQ(back.train.size(), train.size());
  ASSERT_EQ(back.test.size(), test.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_EQ(back.train.items[i].video, train.items[i].video);
    EXPECT_EQ(back.train.items[i].label, train.items[i].label);
    EXPECT_EQ(back.train.items[i].meta, train.items[i].meta);
    EXPECT_EQ(back.train.items[i].id, train.items[i].id);
  }
  const auto spec2 = io::toy_spec_from_json(back.header.at("toy_spec"));
  EXPECT_EQ(spec2.variant, 2);
  EXPECT_EQ(spec2.seed, 5u);
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  const auto& row = manifest.at("items").back();
  EXPECT_EQ(row.at("split"), "test");
  const Tensor p = io::load_tensor(dir / row.at("perturbation_file").get<std::string>());
  EXPECT_EQ(p, perts.back());
  fs::remove_all(dir);
}

TEST(Dataset, MissingManifestIsReported) {
  const fs::path dir = scratch("nomanifest");
  fs::create_directories(dir);
  EXPECT_THROW(io::load_dataset(dir), std::runtime_error);
  fs::remove_all(dir);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  for (auto arch : {Architecture::kPlain3dCnnSmall, Architecture::kInflatedResNet18}) {
    auto spec = test::small_spec(arch);
    spec.first_layer_temporal = {2, 1, 0};
    const Predictor m = build_model(spec, 17);
    const fs::path p = scratch("ckpt.vsck");
    io::save_checkpoint(p, m, {{"epochs", 3}});
    const auto back = io::load_checkpoint(p);
    EXPECT_EQ(back.metadata.at("epochs"), 3);
    EXPECT_EQ(back.model.spec().first_layer_temporal.kernel, 2);
    const Video v = test::random_video(spec.input_shape, 3);
    EXPECT_EQ(back.model.predict(v).scores, m.predict(v).scores);
    fs::remove(p);
  }
}

TEST(Checkpoint, RejectsMismatchedParameterCount) {
  const Predictor m = build_model(test::small_spec(), 1);
  const fs::path p = scratch("bad.vsck");
  io::save_checkpoint(p, m);
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  io::write_file_atomic(p, bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(io::load_checkpoint(p), io::FormatError);
  fs::remove(p);
  EXPECT_THROW(io::load_checkpoint(p), std::runtime_error);
}

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (std::uint32_t(std::uint8_t(s[at])) << 24) | (std::uint32_t(std::uint8_t(s[at + 1])) << 16) |
         (std::uint32_t(std::uint8_t(s[at + 2])) << 8) | std::uint32_t(std::uint8_t(s[at + 3]));
}

TEST(Png, DecodesToOriginalPixels) {
  Tensor img(Shape{1, 3, 5, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = float((i * 37) % 256);
  const std::string png = io::encode_png(img);
  ASSERT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(png.substr(12, 4), "IHDR");
  EXPECT_EQ(be32(png, 16), 5u);
  EXPECT_EQ(be32(png, 20), 3u);
  std::size_t at = 8;
  std::string idat;
  while (at < png.size()) {
    const std::uint32_t len = be32(png, at);
    const std::string type = png.substr(at + 4, 4);
    const std::string body = png.substr(at + 8, len);
    const std::string tb = type + body;
    EXPECT_EQ(be32(png, at + 8 + len),
              crc32(0, reinterpret_cast<const Bytef*>(tb.data()), uInt(tb.size())));
    if (type == "IDAT") idat += body;
    at += 12 + len;
  }
  std::string raw(3 * (5 * 3 + 1), '\0');
  uLongf n = raw.size();
  ASSERT_EQ(uncompress(reinterpret_cast<Bytef*>(raw.data()), &n,
                       reinterpret_cast<const Bytef*>(idat.data()), idat.size()),
            Z_OK);
  for (int y = 0; y < 3; ++y) {
    EXPECT_EQ(raw[y * 16], 0);
    for (int k = 0; k < 15; ++k) {
      EXPECT_EQ(std::uint8_t(raw[y * 16 + 1 + k]), std::uint8_t(img[y * 15 + k]));
    }
  }
}

TEST(Png, MagnifiesPerturbationAroundMidGray) {
  Tensor d(Shape{2, 2, 2, 3});
  d(1, 0, 0, 0) = 4.0f;
  d(1, 0, 1, 2) = -2.0f;
  d(1, 1, 1, 1) = 10.0f;
  const Tensor m = io::magnify_perturbation(d, 1);
  EXPECT_FLOAT_EQ(m(0, 0, 0, 0), 208.0f);
  EXPECT_FLOAT_EQ(m(0, 0, 1, 2), 88.0f);
  EXPECT_FLOAT_EQ(m(0, 1, 1, 1), 255.0f);
  EXPECT_FLOAT_EQ(m(0, 1, 0, 0), 128.0f);
}

}  // namespace
}  // namespace vidshuffle
