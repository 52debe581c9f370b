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

#ifndef VIDSHUFFLE_IO_HPP_
#define VIDSHUFFLE_IO_HPP_

// On-disk formats.
//
// Tensor file (.vst), little-endian:
//   offset 0   char[4]  magic "VSVT"
//   offset 4   u32      version (1)
//   offset 8   u32[4]   T, H, W, C
//   offset 24  u32      dtype: 0 = uint8, 1 = float32
//   offset 28  payload  T*H*W*C elements in [t][h][w][c] order
//
// Checkpoint (.vsck), little-endian:
//   char[4] "VSCK", u32 version (1), u32 n = JSON length, n bytes of JSON
//   (predictor spec plus free-form metadata), u64 parameter count, float32[]
//
// Dataset directory: one tensor file per video plus manifest.json.

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidshuffle/model.hpp"
#include "vidshuffle/tensor.hpp"
#include "vidshuffle/toydata.hpp"

namespace vidshuffle::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint32_t { kUint8 = 0, kFloat32 = 1 };

namespace detail {

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  v = to_le(v);
  out.append(reinterpret_cast<const char*>(&v), 4);
}

inline void put_u64(std::string& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffu));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(origin_ + ": truncated file");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return to_le(v);
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == data_.size(); }
  const std::string& origin() const { return origin_; }

 private:
  std::string data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Writes via a temporary file and rename so readers never see partial data.
inline void write_file_atomic(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

inline std::string encode_tensor(const Tensor& t, DType dtype) {
  std::string out;
  out.reserve(28 + t.size() * (dtype == DType::kUint8 ? 1 : 4));
  out.append("VSVT", 4);
  detail::put_u32(out, 1);
  const Shape s = t.shape();
  for (int d : {s.t, s.h, s.w, s.c}) detail::put_u32(out, static_cast<std::uint32_t>(d));
  detail::put_u32(out, static_cast<std::uint32_t>(dtype));
  if (dtype == DType::kUint8) {
    for (float v : t.vec()) {
      if (v < 0.0f || v > 255.0f || v != std::round(v)) {
        throw FormatError("uint8 tensor encoding needs integer values in [0,255]");
      }
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(v)));
    }
  } else {
    for (float v : t.vec()) detail::put_f32(out, v);
  }
  return out;
}

inline Tensor decode_tensor(std::string bytes, const std::string& origin = "<memory>") {
  detail::Reader r(std::move(bytes), origin);
  if (std::memcmp(r.take(4), "VSVT", 4) != 0) throw FormatError(origin + ": bad tensor magic");
  if (r.u32() != 1) throw FormatError(origin + ": unsupported tensor version");
  Shape s;
  s.t = static_cast<int>(r.u32());
  s.h = static_cast<int>(r.u32());
  s.w = static_cast<int>(r.u32());
  s.c = static_cast<int>(r.u32());
  const auto dtype = static_cast<DType>(r.u32());
  Tensor t(s);
  if (dtype == DType::kUint8) {
    const char* p = r.take(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<std::uint8_t>(p[i]);
  } else if (dtype == DType::kFloat32) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f32();
  } else {
    throw FormatError(origin + ": unknown dtype");
  }
  if (!r.done()) throw FormatError(origin + ": trailing bytes");
  return t;
}

/// uint8 when every value is an integer in [0,255], float32 otherwise.
inline DType natural_dtype(const Tensor& t) {
  for (float v : t.vec()) {
    if (v < 0.0f || v > 255.0f || v != std::round(v)) return DType::kFloat32;
  }
  return DType::kUint8;
}

inline void save_tensor(const fs::path& p, const Tensor& t) {
  write_file_atomic(p, encode_tensor(t, natural_dtype(t)));
}

inline Tensor load_tensor(const fs::path& p) {
  return decode_tensor(detail::read_file(p), p.string());
}

// ---------------------------------------------------------------- datasets

inline json meta_to_json(const toydata::VideoMeta& m) {
  return {{"bg_id", m.bg_id}, {"obj_id", m.obj_id}, {"direction_id", m.direction_id},
          {"speed", m.speed}, {"start", {m.start.x, m.start.y}}};
}

inline toydata::VideoMeta meta_from_json(const json& j) {
  toydata::VideoMeta m;
  m.bg_id = j.at("bg_id").get<int>();
  m.obj_id = j.at("obj_id").get<int>();
  m.direction_id = j.at("direction_id").get<int>();
  m.speed = j.at("speed").get<int>();
  m.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
  return m;
}

inline json toy_spec_to_json(const toydata::ToySpec& s) {
  return {{"variant", s.variant},         {"num_classes", s.num_classes},
          {"frames_per_video", s.frames_per_video}, {"videos_total", s.videos_total},
          {"frame_size", s.frame_size},   {"object_size", s.object_size},
          {"speed_min", s.speed_min},     {"speed_max", s.speed_max},
          {"contrast", s.contrast},       {"seed", s.seed}};
}

inline toydata::ToySpec toy_spec_from_json(const json& j) {
  toydata::ToySpec s;
  s.variant = j.value("variant", s.variant);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
  s.videos_total = j.value("videos_total", s.videos_total);
  s.frame_size = j.value("frame_size", s.frame_size);
  s.object_size = j.value("object_size", s.object_size);
  s.speed_min = j.value("speed_min", s.speed_min);
  s.speed_max = j.value("speed_max", s.speed_max);
  s.contrast = j.value("contrast", s.contrast);
  s.seed = j.value("seed", s.seed);
  return s;
}

/// A dataset as loaded from disk: videos plus their split tags and any extra
/// manifest fields (e.g. attack settings for perturbed sets).
struct StoredDataset {
  toydata::LabeledDataset train;
  toydata::LabeledDataset test;
  json header = json::object();
};

/// Writes videos as <dir>/videos/<split>_<index>.vst and <dir>/manifest.json.
/// `perturbations`, if given, are stored alongside as float32 tensors.
inline void save_dataset(const fs::path& dir, const toydata::LabeledDataset& train,
                         const toydata::LabeledDataset& test, json header = json::object(),
                         const std::vector<Tensor>* test_perturbations = nullptr) {
  fs::create_directories(dir / "videos");
  json items = json::array();
  auto dump = [&](const toydata::LabeledDataset& ds, const char* split, bool with_perts) {
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
      const auto& it = ds.items[i];
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05zu.vst", split, i);
      save_tensor(dir / "videos" / name, it.video);
      json row = {{"file", std::string("videos/") + name},
                  {"id", it.id},
                  {"label", it.label},
                  {"meta", meta_to_json(it.meta)},
                  {"split", split}};
      if (with_perts) {
        std::snprintf(name, sizeof(name), "%s_%05zu.pert.vst", split, i);
        write_file_atomic(dir / "videos" / name,
                          encode_tensor((*test_perturbations)[i], DType::kFloat32));
        row["perturbation_file"] = std::string("videos/") + name;
      }
      items.push_back(std::move(row));
    }
  };
  if (test_perturbations && test_perturbations->size() != test.items.size()) {
    throw std::invalid_argument("save_dataset: perturbation count mismatch");
  }
  dump(train, "train", false);
  dump(test, "test", test_perturbations != nullptr);
  header["format"] = "vidshuffle-dataset";
  header["version"] = 1;
  header["items"] = std::move(items);
  write_file_atomic(dir / "manifest.json", header.dump(1));
}

inline StoredDataset load_dataset(const fs::path& dir) {
  const fs::path mf = dir / "manifest.json";
  if (!fs::exists(mf)) throw std::runtime_error("missing dataset manifest " + mf.string());
  json j = json::parse(detail::read_file(mf));
  if (j.value("format", "") != "vidshuffle-dataset") {
    throw FormatError(mf.string() + ": not a vidshuffle dataset manifest");
  }
  StoredDataset out;
  for (const auto& row : j.at("items")) {
    toydata::LabeledVideo it;
    it.video = load_tensor(dir / row.at("file").get<std::string>());
    it.label = row.at("label").get<int>();
    it.id = row.value("id", 0);
    it.meta = meta_from_json(row.at("meta"));
    (row.at("split").get<std::string>() == "train" ? out.train : out.test).items.push_back(
        std::move(it));
  }
  out.train.split = toydata::Split::kTrain;
  out.test.split = toydata::Split::kTest;
  j.erase("items");
  out.header = std::move(j);
  return out;
}

// ------------------------------------------------------------- checkpoints

inline json predictor_spec_to_json(const PredictorSpec& s) {
  return {{"architecture", architecture_name(s.architecture)},
          {"num_classes", s.num_classes},
          {"input_shape", {s.input_shape.t, s.input_shape.h, s.input_shape.w, s.input_shape.c}},
          {"first_layer_temporal",
           {{"kernel", s.first_layer_temporal.kernel},
            {"stride", s.first_layer_temporal.stride},
            {"padding", s.first_layer_temporal.padding}}},
          {"width", s.width}};
}

inline PredictorSpec predictor_spec_from_json(const json& j) {
  PredictorSpec s;
  s.architecture = parse_architecture(j.at("architecture").get<std::string>());
  s.num_classes = j.at("num_classes").get<int>();
  const auto& is = j.at("input_shape");
  s.input_shape = {is.at(0).get<int>(), is.at(1).get<int>(), is.at(2).get<int>(),
                   is.at(3).get<int>()};
  const auto& ft = j.at("first_layer_temporal");
  s.first_layer_temporal = {ft.at("kernel").get<int>(), ft.at("stride").get<int>(),
                            ft.at("padding").get<int>()};
  s.width = j.at("width").get<int>();
  return s;
}

inline void save_checkpoint(const fs::path& p, const Predictor& model,
                            const json& metadata = json::object()) {
  json head = {{"spec", predictor_spec_to_json(model.spec())}, {"metadata", metadata}};
  const std::string text = head.dump();
  std::string out;
  out.append("VSCK", 4);
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  const auto params = model.parameters();
  detail::put_u64(out, params.size());
  for (float v : params) detail::put_f32(out, v);
  write_file_atomic(p, out);
}

struct LoadedCheckpoint {
  Predictor model;
  json metadata;
};

inline LoadedCheckpoint load_checkpoint(const fs::path& p) {
  if (!fs::exists(p)) throw std::runtime_error("missing checkpoint " + p.string());
  detail::Reader r(detail::read_file(p), p.string());
  if (std::memcmp(r.take(4), "VSCK", 4) != 0) throw FormatError(p.string() + ": bad magic");
  if (r.u32() != 1) throw FormatError(p.string() + ": unsupported checkpoint version");
  const std::uint32_t n = r.u32();
  const json head = json::parse(std::string(r.take(n), n));
  Predictor model = build_model(predictor_spec_from_json(head.at("spec")), 0);
  const std::uint64_t count = r.u64();
  auto params = model.parameters();
  if (count != params.size()) {
    throw FormatError(p.string() + ": parameter count " + std::to_string(count) +
                      " does not match architecture (" + std::to_string(params.size()) + ")");
  }
  for (auto& v : params) v = r.f32();
  if (!r.done()) throw FormatError(p.string() + ": trailing bytes");
  return {std::move(model), head.value("metadata", json::object())};
}

// --------------------------------------------------------------------- PNG

/// Encodes an 8-bit RGB image (values clamped to [0,255]).
inline std::string encode_png(const Tensor& frame_rgb) {
  const Shape s = frame_rgb.shape();
  if (s.t != 1 || s.c != 3) throw ShapeError("encode_png expects a (1,H,W,3) tensor");
  std::string raw;
  raw.reserve(static_cast<std::size_t>(s.h) * (s.w * 3 + 1));
  for (int y = 0; y < s.h; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        raw.push_back(static_cast<char>(
            static_cast<std::uint8_t>(std::clamp(std::lround(frame_rgb(0, y, x, c)), 0L, 255L))));
      }
    }
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw std::runtime_error("encode_png: zlib failure");
  }
  z.resize(zlen);
  auto be32 = [](std::string& o, std::uint32_t v) {
    for (int sh = 24; sh >= 0; sh -= 8) o.push_back(static_cast<char>((v >> sh) & 0xff));
  };
  auto chunk = [&](std::string& o, const char* type, const std::string& body) {
    be32(o, static_cast<std::uint32_t>(body.size()));
    std::string tb(type, 4);
    tb += body;
    o += tb;
    be32(o, static_cast<std::uint32_t>(
                crc32(0, reinterpret_cast<const Bytef*>(tb.data()), static_cast<uInt>(tb.size()))));
  };
  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  be32(ihdr, static_cast<std::uint32_t>(s.w));
  be32(ihdr, static_cast<std::uint32_t>(s.h));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  chunk(png, "IHDR", ihdr);
  chunk(png, "IDAT", z);
  chunk(png, "IEND", {});
  return png;
}

/// Visualizes one frame of a perturbation as 128 + gain * delta.
inline Tensor magnify_perturbation(const Tensor& delta, int frame, float gain = 20.0f) {
  const Shape s = delta.shape();
  Tensor img(Shape{1, s.h, s.w, s.c});
  const auto f = delta.frame(frame);
  for (std::size_t i = 0; i < f.size(); ++i) img[i] = std::clamp(128.0f + gain * f[i], 0.0f, 255.0f);
  return img;
}

}  // namespace vidshuffle::io

#endif  // VIDSHUFFLE_IO_HPP_
