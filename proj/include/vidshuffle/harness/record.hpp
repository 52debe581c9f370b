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

#ifndef VIDSHUFFLE_HARNESS_RECORD_HPP_
#define VIDSHUFFLE_HARNESS_RECORD_HPP_

// Experiment records: a config snapshot, one row per (group, video, trial)
// outcome, per-group accuracies, and experiment-specific derived values.
// Aggregates and derived values are pure functions of the rows (see
// recompute_aggregates and derive in experiments.hpp).

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidshuffle/harness/config.hpp"
#include "vidshuffle/io.hpp"

namespace vidshuffle::harness {

inline constexpr const char* kToolVersion = "vidshuffle 1.0.0";

struct Row {
  std::string group;
  int video_id = 0;
  int trial = 0;
  int label = 0;
  int predicted = 0;
  bool correct = false;
  /// One frame order per classified copy (ensemble members have one each).
  std::vector<std::vector<int>> provenance;
  /// Monotonic ratio of provenance[0] under the model's first-layer window.
  double ratio = 1.0;
  /// Per-class ensemble votes; empty for single predictions.
  std::vector<int> votes;

  friend bool operator==(const Row&, const Row&) = default;
};

struct ExperimentRecord {
  json config = json::object();
  std::vector<Row> rows;
  std::map<std::string, double> aggregates;
  json derived = json::object();
  double wall_clock_s = 0.0;
  std::string tool_version = kToolVersion;

  double accuracy(const std::string& group) const {
    const auto it = aggregates.find(group);
    if (it == aggregates.end()) throw std::out_of_range("record has no group '" + group + "'");
    return it->second;
  }
};

inline json row_to_json(const Row& r) {
  json j = {{"group", r.group},       {"video_id", r.video_id}, {"trial", r.trial},
            {"label", r.label},       {"predicted", r.predicted}, {"correct", r.correct},
            {"provenance", r.provenance}, {"ratio", r.ratio}};
  if (!r.votes.empty()) j["votes"] = r.votes;
  return j;
}

inline Row row_from_json(const json& j) {
  Row r;
  r.group = j.at("group").get<std::string>();
  r.video_id = j.at("video_id").get<int>();
  r.trial = j.at("trial").get<int>();
  r.label = j.at("label").get<int>();
  r.predicted = j.at("predicted").get<int>();
  r.correct = j.at("correct").get<bool>();
  r.provenance = j.at("provenance").get<std::vector<std::vector<int>>>();
  r.ratio = j.at("ratio").get<double>();
  if (j.contains("votes")) r.votes = j.at("votes").get<std::vector<int>>();
  return r;
}

inline json record_to_json(const ExperimentRecord& rec) {
  json rows = json::array();
  for (const auto& r : rec.rows) rows.push_back(row_to_json(r));
  return {{"format", "vidshuffle-record"},
          {"version", 1},
          {"tool_version", rec.tool_version},
          {"config", rec.config},
          {"aggregates", rec.aggregates},
          {"derived", rec.derived},
          {"wall_clock_s", rec.wall_clock_s},
          {"rows", std::move(rows)}};
}

inline ExperimentRecord record_from_json(const json& j) {
  if (j.value("format", "") != "vidshuffle-record") {
    throw io::FormatError("not a vidshuffle experiment record");
  }
  ExperimentRecord rec;
  rec.tool_version = j.value("tool_version", "");
  rec.config = j.at("config");
  rec.aggregates = j.at("aggregates").get<std::map<std::string, double>>();
  rec.derived = j.value("derived", json::object());
  rec.wall_clock_s = j.value("wall_clock_s", 0.0);
  for (const auto& r : j.at("rows")) rec.rows.push_back(row_from_json(r));
  return rec;
}

/// Per-group fraction of correct rows.
inline std::map<std::string, double> recompute_aggregates(const std::vector<Row>& rows) {
  std::map<std::string, std::pair<long, long>> counts;
  for (const auto& r : rows) {
    auto& c = counts[r.group];
    ++c.first;
    c.second += r.correct ? 1 : 0;
  }
  std::map<std::string, double> out;
  for (const auto& [g, c] : counts) out[g] = static_cast<double>(c.second) / c.first;
  return out;
}

inline fs::path record_path(const fs::path& dir, const std::string& name) {
  return dir / (name + ".json");
}

/// Writes atomically; refuses to replace an existing record unless `force`.
inline void save_record(const fs::path& dir, const std::string& name, const ExperimentRecord& rec,
                        bool force) {
  const fs::path p = record_path(dir, name);
  if (fs::exists(p) && !force) {
    throw ConfigError("record " + p.string() + " exists; pass --force to overwrite");
  }
  io::write_file_atomic(p, record_to_json(rec).dump(1));
}

inline ExperimentRecord load_record(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact("missing record " + p.string());
  return record_from_json(json::parse(io::detail::read_file(p)));
}

/// Record files in `dir`, sorted by name.
inline std::vector<fs::path> list_records(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_RECORD_HPP_
