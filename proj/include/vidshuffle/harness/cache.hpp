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

#ifndef VIDSHUFFLE_HARNESS_CACHE_HPP_
#define VIDSHUFFLE_HARNESS_CACHE_HPP_

// Content-addressed store of attack perturbations. An entry directory is
// named by a 64-bit FNV-1a hash over the model bytes, the dataset manifest
// bytes and the attack settings; each test video's perturbation is a
// float32 tensor file inside it, so partial runs are reused.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "vidshuffle/attacks.hpp"
#include "vidshuffle/harness/config.hpp"
#include "vidshuffle/io.hpp"

namespace vidshuffle::harness {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of a file's contents.
inline std::uint64_t file_digest(const fs::path& p) {
  return fnv1a(io::detail::read_file(p));
}

class AttackCache {
 public:
  /// `sampler` describes the EOT defense sampler ("" for other attacks).
  AttackCache(fs::path root, const fs::path& model, const fs::path& dataset,
              attacks::AttackMethod method, const attacks::AttackConfig& cfg,
              const std::string& sampler = "")
      : meta_{{"model", model.generic_string()},
              {"dataset", dataset.generic_string()},
              {"model_digest", hex64(file_digest(model))},
              {"dataset_digest", hex64(file_digest(dataset / "manifest.json"))},
              {"method", attacks::method_name(method)},
              {"epsilon", cfg.epsilon},
              {"iterations", cfg.iterations},
              {"eot_samples", method == attacks::AttackMethod::kEot ? cfg.eot_samples : 1},
              {"seed", cfg.seed},
              {"sampler", sampler}} {
    json keyed = meta_;
    keyed.erase("model");
    keyed.erase("dataset");
    key_ = hex64(fnv1a(keyed.dump()));
    dir_ = std::move(root) / key_;
  }

  const std::string& key() const { return key_; }
  const fs::path& dir() const { return dir_; }
  const json& meta() const { return meta_; }

  fs::path entry(int video_index) const {
    char name[32];
    std::snprintf(name, sizeof(name), "%05d.vst", video_index);
    return dir_ / name;
  }

  bool contains(int video_index) const { return fs::exists(entry(video_index)); }

  /// Cached perturbation, or `compute()` stored for next time.
  template <typename Compute>
  Tensor get(int video_index, Compute&& compute) {
    const fs::path p = entry(video_index);
    if (fs::exists(p)) {
      ++hits_;
      return io::load_tensor(p);
    }
    ++misses_;
    Tensor delta = compute();
    if (!fs::exists(dir_ / "meta.json")) io::write_file_atomic(dir_ / "meta.json", meta_.dump(1));
    io::write_file_atomic(p, io::encode_tensor(delta, io::DType::kFloat32));
    return delta;
  }

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  json meta_;
  std::string key_;
  fs::path dir_;
  int hits_ = 0;
  int misses_ = 0;
};

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_CACHE_HPP_
