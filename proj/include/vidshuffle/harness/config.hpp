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

#ifndef VIDSHUFFLE_HARNESS_CONFIG_HPP_
#define VIDSHUFFLE_HARNESS_CONFIG_HPP_

// Experiment configuration. A config is a JSON object; every key is
// optional and missing keys keep their defaults:
//
//   {
//     "experiment": "defense_sweep",      // see ExperimentKind
//     "name": "sweep_v1",                 // record name, defaults to experiment
//     "dataset": "data/v1",               // dataset directory (gen-data output)
//     "model": "models/v1.vsck",          // checkpoint (train output)
//     "seed": 0,
//     "trials": 1,                        // random draws per video
//     "max_videos": 0,                    // 0 = whole test split
//     "chunks": [1, 2, 4, 8],             // chunk sizes N for randomization
//     "row_chunks": [],                   // row-group sizes for row randomization
//     "min_bin_count": 30,
//     "attack": {"method": "ifgsm", "epsilon": 4, "iterations": 30,
//                "eot_samples": 1, "seed": 0},
//     "defense": {"method": "shuffle", "h1": 1, "h2": 1, "sigma": 12, "k": 10,
//                 "from_sweep": "sweep_v1"},  // take (h1,h2) from a sweep record
//     "grid": {"h1": [1, 2, 3, 4], "h2": [1, 2, 4]},
//     "ensemble_sizes": [10, 20, 100]
//   }
//
// Relative paths resolve against the output root.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidshuffle/attacks.hpp"
#include "vidshuffle/defense.hpp"

namespace vidshuffle::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced dataset, checkpoint or record does not exist (exit code 2).
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  kUniformizeClean,
  kRandomizeClean,
  kToyRandomize,
  kAttackRandomize,
  kTemporalPatternCases,
  kAttackUniformize,
  kDefenseSweep,
  kEnsembleSize,
  kDefenseMatrix,
  kMonotonicity,
};

inline constexpr ExperimentKind kAllExperiments[] = {
    ExperimentKind::kUniformizeClean,   ExperimentKind::kRandomizeClean,
    ExperimentKind::kToyRandomize,      ExperimentKind::kAttackRandomize,
    ExperimentKind::kTemporalPatternCases, ExperimentKind::kAttackUniformize,
    ExperimentKind::kDefenseSweep,      ExperimentKind::kEnsembleSize,
    ExperimentKind::kDefenseMatrix,     ExperimentKind::kMonotonicity,
};

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kUniformizeClean: return "uniformize_clean";
    case ExperimentKind::kRandomizeClean: return "randomize_clean";
    case ExperimentKind::kToyRandomize: return "toy_randomize";
    case ExperimentKind::kAttackRandomize: return "attack_randomize";
    case ExperimentKind::kTemporalPatternCases: return "temporal_pattern_cases";
    case ExperimentKind::kAttackUniformize: return "attack_uniformize";
    case ExperimentKind::kDefenseSweep: return "defense_sweep";
    case ExperimentKind::kEnsembleSize: return "ensemble_size";
    case ExperimentKind::kDefenseMatrix: return "defense_matrix";
    case ExperimentKind::kMonotonicity: return "monotonicity";
  }
  return "?";
}

inline ExperimentKind parse_experiment(const std::string& s) {
  for (ExperimentKind k : kAllExperiments) {
    if (s == experiment_name(k)) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

struct AttackSettings {
  attacks::AttackMethod method = attacks::AttackMethod::kIfgsm;
  attacks::AttackConfig config{};
};

struct DefenseSettings {
  defense::DefenseConfig config{};
  /// Name of a defense_sweep record whose selected (h1,h2) overrides
  /// config.shuffle; empty to use config.shuffle as given.
  std::string from_sweep;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kToyRandomize;
  std::string name;
  fs::path dataset;
  fs::path model;
  std::uint64_t seed = 0;
  int trials = 1;
  int max_videos = 0;
  std::vector<int> chunks{1, 2, 4, 8};
  std::vector<int> row_chunks{};
  int min_bin_count = 30;
  AttackSettings attack{};
  DefenseSettings defense{};
  std::vector<int> grid_h1{1, 2, 3, 4};
  std::vector<int> grid_h2{1, 2, 4};
  std::vector<int> ensemble_sizes{10, 20, 100};

  std::string record_name() const { return name.empty() ? experiment_name(experiment) : name; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (trials < 1) fail("trials must be >= 1");
    if (max_videos < 0) fail("max_videos must be >= 0");
    if (min_bin_count < 1) fail("min_bin_count must be >= 1");
    for (int n : chunks) {
      if (n < 1) fail("chunk sizes must be >= 1");
    }
    for (int n : row_chunks) {
      if (n < 1) fail("row chunk sizes must be >= 1");
    }
    for (int k : ensemble_sizes) {
      if (k < 1) fail("ensemble sizes must be >= 1");
    }
    if (grid_h1.empty() || grid_h2.empty()) fail("sweep grid must not be empty");
    for (int h : grid_h1) {
      if (h < 1) fail("grid h1 values must be >= 1");
    }
    for (int h : grid_h2) {
      if (h < 1) fail("grid h2 values must be >= 1");
    }
    if (dataset.empty()) fail("dataset is required");
    if (model.empty()) fail("model is required");
    if (record_name().find_first_of("/\\") != std::string::npos) fail("name must not contain '/'");
    try {
      attack.config.validate();
      defense.config.validate(1 << 20);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
};

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `cfg`.
inline void apply_json(ExperimentConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  using detail::take;
  std::string s;
  if (j.contains("experiment")) {
    take(j, "experiment", s);
    cfg.experiment = parse_experiment(s);
  }
  take(j, "name", cfg.name);
  if (j.contains("dataset")) {
    take(j, "dataset", s);
    cfg.dataset = s;
  }
  if (j.contains("model")) {
    take(j, "model", s);
    cfg.model = s;
  }
  take(j, "seed", cfg.seed);
  take(j, "trials", cfg.trials);
  take(j, "max_videos", cfg.max_videos);
  take(j, "chunks", cfg.chunks);
  take(j, "row_chunks", cfg.row_chunks);
  take(j, "min_bin_count", cfg.min_bin_count);
  take(j, "ensemble_sizes", cfg.ensemble_sizes);
  if (j.contains("attack")) {
    const json& a = j.at("attack");
    if (a.contains("method")) {
      take(a, "method", s);
      try {
        cfg.attack.method = attacks::parse_method(s);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    take(a, "epsilon", cfg.attack.config.epsilon);
    take(a, "iterations", cfg.attack.config.iterations);
    take(a, "eot_samples", cfg.attack.config.eot_samples);
    take(a, "seed", cfg.attack.config.seed);
  }
  if (j.contains("defense")) {
    const json& d = j.at("defense");
    if (d.contains("method")) {
      take(d, "method", s);
      try {
        cfg.defense.config.method = defense::parse_method(s);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    take(d, "h1", cfg.defense.config.shuffle.h1);
    take(d, "h2", cfg.defense.config.shuffle.h2);
    take(d, "sigma", cfg.defense.config.sigma);
    take(d, "k", cfg.defense.config.ensemble_size);
    take(d, "from_sweep", cfg.defense.from_sweep);
  }
  if (j.contains("grid")) {
    take(j.at("grid"), "h1", cfg.grid_h1);
    take(j.at("grid"), "h2", cfg.grid_h2);
  }
}

inline json to_json(const ExperimentConfig& c) {
  const auto& a = c.attack.config;
  const auto& d = c.defense.config;
  return {{"experiment", experiment_name(c.experiment)},
          {"name", c.record_name()},
          {"dataset", c.dataset.generic_string()},
          {"model", c.model.generic_string()},
          {"seed", c.seed},
          {"trials", c.trials},
          {"max_videos", c.max_videos},
          {"chunks", c.chunks},
          {"row_chunks", c.row_chunks},
          {"min_bin_count", c.min_bin_count},
          {"attack",
           {{"method", attacks::method_name(c.attack.method)},
            {"epsilon", a.epsilon},
            {"iterations", a.iterations},
            {"eot_samples", a.eot_samples},
            {"seed", a.seed}}},
          {"defense",
           {{"method", defense::method_name(d.method)},
            {"h1", d.shuffle.h1},
            {"h2", d.shuffle.h2},
            {"sigma", d.sigma},
            {"k", d.ensemble_size},
            {"from_sweep", c.defense.from_sweep}}},
          {"grid", {{"h1", c.grid_h1}, {"h2", c.grid_h2}}},
          {"ensemble_sizes", c.ensemble_sizes}};
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  apply_json(c, j);
  return c;
}

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_CONFIG_HPP_
