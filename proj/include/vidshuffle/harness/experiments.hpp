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

#ifndef VIDSHUFFLE_HARNESS_EXPERIMENTS_HPP_
#define VIDSHUFFLE_HARNESS_EXPERIMENTS_HPP_

// Experiment runners. Each experiment evaluates the test split (or an
// evenly spaced subset of it) under a set of named conditions ("groups"),
// producing one Row per (group, video, trial). derive() turns rows into the
// experiment's summary numbers and is shared with verify().

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vidshuffle/analysis.hpp"
#include "vidshuffle/attacks.hpp"
#include "vidshuffle/defense.hpp"
#include "vidshuffle/harness/cache.hpp"
#include "vidshuffle/harness/config.hpp"
#include "vidshuffle/harness/record.hpp"
#include "vidshuffle/io.hpp"
#include "vidshuffle/transforms.hpp"

namespace vidshuffle::harness {

using Logger = std::function<void(const std::string&)>;

/// Output-root layout.
struct Workspace {
  fs::path root;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : root / p; }
  fs::path records() const { return root / "records"; }
  fs::path attack_cache() const { return root / "cache" / "attacks"; }
  fs::path reports() const { return root / "reports"; }
};

// ------------------------------------------------------------- sweep rule

struct SweepCell {
  int h1 = 0;
  int h2 = 0;
  double clean = 0.0;
  double attacked = 0.0;
};

/// Maximizes attacked accuracy among cells whose clean accuracy is within
/// 5 points of the best clean accuracy; the earliest cell wins ties.
inline std::size_t select_cell(const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw ConfigError("sweep grid is empty");
  double best_clean = 0.0;
  for (const auto& c : cells) best_clean = std::max(best_clean, c.clean);
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].clean < best_clean - 0.05 - 1e-12) continue;
    if (!pick || cells[i].attacked > cells[*pick].attacked) pick = i;
  }
  return *pick;
}

inline std::string cell_group(int h1, int h2, const char* which) {
  return "h1=" + std::to_string(h1) + ",h2=" + std::to_string(h2) + "/" + which;
}

// ------------------------------------------------------------ derivation

namespace detail {

inline double group_acc(const std::map<std::string, double>& agg, const std::string& g) {
  const auto it = agg.find(g);
  if (it == agg.end()) throw std::runtime_error("derive: missing group '" + g + "'");
  return it->second;
}

inline double mean_over_frames(const std::map<std::string, double>& agg, const std::string& prefix) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [g, a] : agg) {
    if (g.rfind(prefix + "frame=", 0) == 0) {
      sum += a;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

inline json curve(const std::map<std::string, double>& agg, const std::vector<int>& sizes,
                  const std::string& prefix) {
  json c = json::array();
  for (int n : sizes) {
    const std::string g = prefix + std::to_string(n);
    if (agg.count(g)) c.push_back({{"n", n}, {"accuracy", agg.at(g)}});
  }
  return c;
}

}  // namespace detail

inline const std::vector<std::string>& matrix_rows() {
  static const std::vector<std::string> r{"No", "RS", "Ours", "Ours+RS"};
  return r;
}
inline const std::vector<std::string>& matrix_columns() {
  static const std::vector<std::string> c{"Clean", "I-FGSM", "Flicker", "OFA", "EOT"};
  return c;
}

/// Summary values of an experiment, computed from its rows and config only.
inline json derive(const ExperimentConfig& cfg, const std::vector<Row>& rows) {
  const auto agg = recompute_aggregates(rows);
  using detail::group_acc;
  json d = json::object();
  switch (cfg.experiment) {
    case ExperimentKind::kUniformizeClean:
      d["clean"] = group_acc(agg, "clean");
      d["uniformized_mean"] = detail::mean_over_frames(agg, "");
      break;
    case ExperimentKind::kRandomizeClean:
    case ExperimentKind::kToyRandomize:
      d["chunk_curve"] = detail::curve(agg, cfg.chunks, "chunk=");
      d["row_curve"] = detail::curve(agg, cfg.row_chunks, "rows=");
      break;
    case ExperimentKind::kAttackRandomize:
      d["clean"] = group_acc(agg, "clean");
      d["attacked"] = group_acc(agg, "attacked");
      d["attacked_chunk_curve"] = detail::curve(agg, cfg.chunks, "attacked/chunk=");
      break;
    case ExperimentKind::kTemporalPatternCases:
      for (const char* g : {"clean", "ifgsm", "static", "framewise"}) d[g] = group_acc(agg, g);
      break;
    case ExperimentKind::kAttackUniformize:
      d["clean"] = group_acc(agg, "clean");
      d["attacked"] = group_acc(agg, "attacked");
      d["uniformized_clean"] = detail::mean_over_frames(agg, "clean/");
      d["uniformized_attacked"] = detail::mean_over_frames(agg, "attacked/");
      d["gap"] = d["uniformized_clean"].get<double>() - d["uniformized_attacked"].get<double>();
      break;
    case ExperimentKind::kDefenseSweep: {
      std::vector<SweepCell> cells;
      json jc = json::array();
      for (int h1 : cfg.grid_h1) {
        for (int h2 : cfg.grid_h2) {
          const std::string gc = cell_group(h1, h2, "clean");
          if (!agg.count(gc)) continue;
          cells.push_back({h1, h2, agg.at(gc), group_acc(agg, cell_group(h1, h2, "attacked"))});
          jc.push_back({{"h1", h1}, {"h2", h2}, {"clean", cells.back().clean},
                        {"attacked", cells.back().attacked}});
        }
      }
      const SweepCell& s = cells.at(select_cell(cells));
      const double undefended = group_acc(agg, "undefended/attacked");
      double max_recovery = -1.0;
      for (const auto& c : cells) max_recovery = std::max(max_recovery, c.attacked - undefended);
      d["cells"] = jc;
      d["selected"] = {{"h1", s.h1}, {"h2", s.h2}, {"clean", s.clean}, {"attacked", s.attacked}};
      d["undefended_clean"] = group_acc(agg, "undefended/clean");
      d["undefended_attacked"] = undefended;
      d["recovery"] = s.attacked - undefended;
      d["max_recovery"] = max_recovery;
      break;
    }
    case ExperimentKind::kEnsembleSize: {
      json sizes = json::array();
      for (int k : cfg.ensemble_sizes) {
        const std::string p = "K=" + std::to_string(k) + "/";
        sizes.push_back({{"k", k},
                         {"clean", group_acc(agg, p + "clean")},
                         {"attacked", group_acc(agg, p + "attacked")}});
      }
      d["sizes"] = sizes;
      break;
    }
    case ExperimentKind::kDefenseMatrix: {
      json m = json::array();
      for (const auto& r : matrix_rows()) {
        json row = json::array();
        for (const auto& c : matrix_columns()) row.push_back(group_acc(agg, r + "/" + c));
        m.push_back(row);
      }
      d["rows"] = matrix_rows();
      d["columns"] = matrix_columns();
      d["matrix"] = m;
      break;
    }
    case ExperimentKind::kMonotonicity: {
      std::vector<analysis::VideoRecord> recs;
      for (const auto& r : rows) {
        analysis::VideoRecord v;
        v.correct = r.correct;
        v.monotonic_ratio = r.ratio;
        recs.push_back(v);
      }
      const auto bins = analysis::bin_accuracy_by_ratio(recs, cfg.min_bin_count);
      json jb = json::array();
      std::vector<double> xs, ys;
      for (const auto& b : bins) {
        jb.push_back({{"ratio", b.ratio_value}, {"count", b.video_count}, {"accuracy", b.accuracy}});
        xs.push_back(b.ratio_value);
        ys.push_back(b.accuracy);
      }
      d["bins"] = jb;
      d["surviving_bins"] = bins.size();
      d["spearman"] = analysis::spearman(xs, ys);
      d["accuracy"] = group_acc(agg, "chunk=full");
      break;
    }
  }
  return d;
}

// ------------------------------------------------------------------ runner

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;
};

namespace detail {

inline bool json_close(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    return std::fabs(a.get<double>() - b.get<double>()) <= 1e-12;
  }
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_close(a[i], b[i])) return false;
    }
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_close(it.value(), b.at(it.key()))) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace detail

/// Recomputes aggregates and derived values from the persisted rows.
inline VerifyResult verify_record(const ExperimentRecord& rec) {
  VerifyResult v;
  const auto agg = recompute_aggregates(rec.rows);
  if (agg.size() != rec.aggregates.size()) {
    v.problems.push_back("group count differs: rows give " + std::to_string(agg.size()) +
                         ", record has " + std::to_string(rec.aggregates.size()));
  }
  for (const auto& [g, a] : agg) {
    const auto it = rec.aggregates.find(g);
    if (it == rec.aggregates.end()) {
      v.problems.push_back("group '" + g + "' missing from aggregates");
    } else if (std::fabs(it->second - a) > 1e-12) {
      v.problems.push_back("group '" + g + "': stored " + std::to_string(it->second) +
                           ", rows give " + std::to_string(a));
    }
  }
  for (const auto& r : rec.rows) {
    if (r.correct != (r.predicted == r.label)) {
      v.problems.push_back("row (" + r.group + ", video " + std::to_string(r.video_id) +
                           ") correctness disagrees with its labels");
      break;
    }
  }
  try {
    const json d = derive(config_from_json(rec.config), rec.rows);
    if (!detail::json_close(d, rec.derived)) v.problems.push_back("derived values differ");
  } catch (const std::exception& e) {
    v.problems.push_back(std::string("cannot recompute derived values: ") + e.what());
  }
  v.ok = v.problems.empty();
  return v;
}

class ExperimentRunner {
 public:
  ExperimentRunner(ExperimentConfig cfg, Workspace ws, Logger log = {})
      : cfg_(std::move(cfg)), ws_(std::move(ws)), log_(std::move(log)) {}

  ExperimentRecord run() {
    cfg_.validate();
    const auto t0 = std::chrono::steady_clock::now();
    load();
    resolve_defense();
    switch (cfg_.experiment) {
      case ExperimentKind::kUniformizeClean: uniformize_clean(); break;
      case ExperimentKind::kRandomizeClean:
      case ExperimentKind::kToyRandomize: randomize_clean(); break;
      case ExperimentKind::kAttackRandomize: attack_randomize(); break;
      case ExperimentKind::kTemporalPatternCases: temporal_pattern_cases(); break;
      case ExperimentKind::kAttackUniformize: attack_uniformize(); break;
      case ExperimentKind::kDefenseSweep: defense_sweep(); break;
      case ExperimentKind::kEnsembleSize: ensemble_size(); break;
      case ExperimentKind::kDefenseMatrix: defense_matrix(); break;
      case ExperimentKind::kMonotonicity: monotonicity(); break;
    }
    ExperimentRecord rec;
    rec.config = to_json(cfg_);
    rec.config["dataset_header"] = dataset_header_;
    rec.config["model_spec"] = io::predictor_spec_to_json(model_->spec());
    rec.rows = std::move(rows_);
    rec.aggregates = recompute_aggregates(rec.rows);
    rec.derived = derive(cfg_, rec.rows);
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

  const ExperimentConfig& config() const { return cfg_; }

  /// Throws MissingArtifact unless the dataset and checkpoint exist.
  void check_inputs() {
    dataset_dir_ = ws_.resolve(cfg_.dataset);
    model_path_ = ws_.resolve(cfg_.model);
    if (!fs::exists(dataset_dir_ / "manifest.json")) {
      throw MissingArtifact("missing dataset " + dataset_dir_.string() +
                            " (no manifest.json; run gen-data)");
    }
    if (!fs::exists(model_path_)) {
      throw MissingArtifact("missing model checkpoint " + model_path_.string() + " (run train)");
    }
  }
  /// (video id, perturbation) of the configured attack, when one ran.
  const std::vector<std::pair<int, Tensor>>& perturbations() const { return perturbations_; }

 private:
  // ---- setup

  void say(const std::string& m) const {
    if (log_) log_(m);
  }

  void load() {
    check_inputs();
    io::StoredDataset ds = io::load_dataset(dataset_dir_);
    dataset_header_ = ds.header;
    test_ = std::move(ds.test);
    if (test_.items.empty()) throw MissingArtifact("dataset has an empty test split");
    model_ = std::make_unique<Predictor>(io::load_checkpoint(model_path_).model);
    window_ = model_->first_layer_temporal_spec();
    const int n = static_cast<int>(test_.items.size());
    const int take = cfg_.max_videos > 0 ? std::min(cfg_.max_videos, n) : n;
    for (int i = 0; i < take; ++i) {
      subset_.push_back(static_cast<int>(static_cast<long>(i) * n / take));
    }
    say("loaded " + std::to_string(n) + " test videos, evaluating " + std::to_string(take));
  }

  void resolve_defense() {
    if (cfg_.defense.from_sweep.empty()) return;
    const ExperimentRecord sweep =
        load_record(record_path(ws_.records(), cfg_.defense.from_sweep));
    const json& sel = sweep.derived.at("selected");
    cfg_.defense.config.shuffle = {sel.at("h1").get<int>(), sel.at("h2").get<int>()};
    say("using sweep-selected h1=" + std::to_string(cfg_.defense.config.shuffle.h1) +
        " h2=" + std::to_string(cfg_.defense.config.shuffle.h2));
  }

  int frames() const { return model_->spec().input_shape.t; }

  Rng stream(const std::string& group, int video, int trial = 0) const {
    return make_rng(cfg_.seed, {fnv1a(group), static_cast<std::uint64_t>(video),
                                static_cast<std::uint64_t>(trial)});
  }

  // ---- row producers

  void add_row(const std::string& group, int video, int trial, int predicted,
               std::vector<std::vector<int>> prov, std::vector<int> votes = {}) {
    Row r;
    r.group = group;
    r.video_id = test_.items[video].id;
    r.trial = trial;
    r.label = test_.items[video].label;
    r.predicted = predicted;
    r.correct = predicted == r.label;
    r.ratio = prov.empty() ? 1.0 : analysis::monotonic_ratio(prov.front(), window_);
    r.provenance = std::move(prov);
    r.votes = std::move(votes);
    rows_.push_back(std::move(r));
  }

  /// Classifies each selected video (or `videos[k]` if given) after a
  /// random transform, `trials` times.
  template <typename Transform>
  void classify_group(const std::string& group, Transform&& transform, int trials,
                      const std::vector<Video>* videos = nullptr) {
    for (std::size_t k = 0; k < subset_.size(); ++k) {
      const int vi = subset_[k];
      const Video& src = videos ? (*videos)[k] : test_.items[vi].video;
      for (int trial = 0; trial < trials; ++trial) {
        Rng rng = stream(group, vi, trial);
        TransformedVideo tv = transform(src, rng);
        add_row(group, vi, trial, model_->predict(tv.video).label, {tv.provenance.source_of});
      }
    }
  }

  void classify_plain(const std::string& group, const std::vector<Video>* videos = nullptr) {
    classify_group(group, analysis::IdentityTransform{}, 1, videos);
  }

  void defend_group(const std::string& group, const defense::DefenseConfig& dcfg,
                    const std::vector<Video>* videos = nullptr) {
    for (std::size_t k = 0; k < subset_.size(); ++k) {
      const int vi = subset_[k];
      const Video& src = videos ? (*videos)[k] : test_.items[vi].video;
      Rng rng = stream(group, vi);
      const auto res = defense::defend(*model_, src, dcfg, rng);
      std::vector<std::vector<int>> prov;
      for (const auto& m : res.members) prov.push_back(m.provenance.source_of);
      add_row(group, vi, 0, res.aggregate.label, std::move(prov), res.vote_counts);
    }
  }

  // ---- attacks

  static std::string sampler_name(const defense::DefenseConfig& d) {
    return std::string(defense::method_name(d.method)) + ":h1=" + std::to_string(d.shuffle.h1) +
           ",h2=" + std::to_string(d.shuffle.h2) + ",sigma=" + std::to_string(d.sigma);
  }

  /// The configured attack; EOT samples the configured defense.
  std::vector<Video> primary_attack() {
    const auto m = cfg_.attack.method;
    return attacked(m, m == attacks::AttackMethod::kEot
                               ? std::optional<defense::DefenseConfig>(cfg_.defense.config)
                               : std::nullopt,
                        &perturbations_);
  }

  /// Attacked copies of the selected videos, through the cache. EOT without
  /// a defense samples the identity transform.
  std::vector<Video> attacked(attacks::AttackMethod method,
                              const std::optional<defense::DefenseConfig>& eot_defense = {},
                              std::vector<std::pair<int, Tensor>>* deltas = nullptr) {
    const std::string sname = eot_defense ? sampler_name(*eot_defense) : "";
    AttackCache cache(ws_.attack_cache(), model_path_, dataset_dir_, method, cfg_.attack.config,
                      sname);
    attacks::DefenseSampler sampler;
    if (method == attacks::AttackMethod::kEot) {
      if (eot_defense) {
        sampler = defense::make_sampler(*eot_defense);
      } else {
        sampler = [](const Video& v, Rng&) {
          return TransformedVideo{v, FrameProvenance::identity(v.shape().t)};
        };
      }
    }
    std::vector<Video> out;
    out.reserve(subset_.size());
    for (int vi : subset_) {
      const auto& item = test_.items[vi];
      const Tensor delta = cache.get(vi, [&] {
        attacks::AttackConfig ac = cfg_.attack.config;
        ac.seed = derive_seed(cfg_.attack.config.seed, {static_cast<std::uint64_t>(vi)});
        return attacks::run_attack(*model_, method, item.video, item.label, ac, sampler).delta;
      });
      out.push_back(add(item.video, delta));
      if (deltas) deltas->emplace_back(item.id, delta);
    }
    say(std::string("attack ") + attacks::method_name(method) + (sname.empty() ? "" : " vs " + sname) +
        ": cache " + cache.key() + " (" + std::to_string(cache.hits()) + " hits, " +
        std::to_string(cache.misses()) + " computed)");
    return out;
  }

  // ---- experiments

  void uniformize_clean() {
    classify_plain("clean");
    for (int f = 1; f <= frames(); ++f) {
      classify_group("frame=" + std::to_string(f),
                     [f](const Video& v, Rng&) { return uniformize(v, f); }, 1);
    }
  }

  void randomize_clean() {
    for (int n : cfg_.chunks) {
      if (n > frames()) throw ConfigError("chunk size " + std::to_string(n) + " exceeds T");
      classify_group("chunk=" + std::to_string(n),
                     [n](const Video& v, Rng& r) { return chunk_randomize(v, {n}, r); },
                     n == 1 ? 1 : cfg_.trials);
    }
    const int rows = model_->spec().input_shape.h;
    for (int n : cfg_.row_chunks) {
      if (n > rows) throw ConfigError("row chunk size " + std::to_string(n) + " exceeds H");
      classify_group("rows=" + std::to_string(n),
                     [n](const Video& v, Rng& r) {
                       return TransformedVideo{row_randomize(v, {n}, r),
                                               FrameProvenance::identity(v.shape().t)};
                     },
                     n == 1 ? 1 : cfg_.trials);
    }
  }

  void attack_randomize() {
    const auto adv = primary_attack();
    classify_plain("clean");
    classify_plain("attacked", &adv);
    for (int n : cfg_.chunks) {
      if (n > frames()) throw ConfigError("chunk size " + std::to_string(n) + " exceeds T");
      classify_group("attacked/chunk=" + std::to_string(n),
                     [n](const Video& v, Rng& r) { return chunk_randomize(v, {n}, r); },
                     n == 1 ? 1 : cfg_.trials, &adv);
    }
  }

  void temporal_pattern_cases() {
    classify_plain("clean");
    const auto full = attacked(attacks::AttackMethod::kIfgsm);
    classify_plain("ifgsm", &full);
    const auto stat = attacked(attacks::AttackMethod::kStatic);
    classify_plain("static", &stat);
    const auto fw = attacked(attacks::AttackMethod::kFramewise);
    classify_plain("framewise", &fw);
  }

  void attack_uniformize() {
    const auto adv = primary_attack();
    classify_plain("clean");
    classify_plain("attacked", &adv);
    for (int f = 1; f <= frames(); ++f) {
      const auto u = [f](const Video& v, Rng&) { return uniformize(v, f); };
      classify_group("clean/frame=" + std::to_string(f), u, 1);
      classify_group("attacked/frame=" + std::to_string(f), u, 1, &adv);
    }
  }

  void defense_sweep() {
    const auto adv = primary_attack();
    classify_plain("undefended/clean");
    classify_plain("undefended/attacked", &adv);
    defense::DefenseConfig d = cfg_.defense.config;
    d.method = defense::DefenseMethod::kShuffle;
    for (int h1 : cfg_.grid_h1) {
      for (int h2 : cfg_.grid_h2) {
        if (h2 > frames()) continue;
        d.shuffle = {h1, h2};
        defend_group(cell_group(h1, h2, "clean"), d);
        defend_group(cell_group(h1, h2, "attacked"), d, &adv);
        say("sweep cell h1=" + std::to_string(h1) + " h2=" + std::to_string(h2) + " done");
      }
    }
  }

  void ensemble_size() {
    const auto adv = primary_attack();
    defense::DefenseConfig d = cfg_.defense.config;
    for (int k : cfg_.ensemble_sizes) {
      d.ensemble_size = k;
      const std::string p = "K=" + std::to_string(k) + "/";
      defend_group(p + "clean", d);
      defend_group(p + "attacked", d, &adv);
    }
  }

  void defense_matrix() {
    using attacks::AttackMethod;
    defense::DefenseConfig rs = cfg_.defense.config, ours = rs, both = rs;
    rs.method = defense::DefenseMethod::kSmoothing;
    ours.method = defense::DefenseMethod::kShuffle;
    both.method = defense::DefenseMethod::kShufflePlusSmoothing;
    const std::map<std::string, defense::DefenseConfig> defenses{
        {"RS", rs}, {"Ours", ours}, {"Ours+RS", both}};
    const auto ifgsm = attacked(AttackMethod::kIfgsm);
    const auto flicker = attacked(AttackMethod::kFlicker);
    const auto ofa = attacked(AttackMethod::kOneFrame);
    const std::vector<std::pair<std::string, const std::vector<Video>*>> shared{
        {"I-FGSM", &ifgsm}, {"Flicker", &flicker}, {"OFA", &ofa}};
    classify_plain("No/Clean");
    for (const auto& [col, vids] : shared) classify_plain("No/" + col, vids);
    // EOT against no defense is I-FGSM with an identity sampler.
    const auto eot_none = attacked(AttackMethod::kEot);
    classify_plain("No/EOT", &eot_none);
    for (const auto& row : {"RS", "Ours", "Ours+RS"}) {
      const auto& d = defenses.at(row);
      const std::string r = row;
      defend_group(r + "/Clean", d);
      for (const auto& [col, vids] : shared) defend_group(r + "/" + col, d, vids);
      const auto eot = attacked(AttackMethod::kEot, d);
      defend_group(r + "/EOT", d, &eot);
      say("matrix row " + r + " done");
    }
  }

  void monotonicity() {
    const int t = frames();
    classify_group("chunk=full", [t](const Video& v, Rng& r) { return chunk_randomize(v, {t}, r); },
                   cfg_.trials);
  }

  ExperimentConfig cfg_;
  Workspace ws_;
  Logger log_;
  fs::path dataset_dir_;
  fs::path model_path_;
  json dataset_header_;
  toydata::LabeledDataset test_;
  std::unique_ptr<Predictor> model_;
  analysis::TemporalWindowSpec window_;
  std::vector<int> subset_;
  std::vector<Row> rows_;
  std::vector<std::pair<int, Tensor>> perturbations_;
};

/// Runs an experiment and persists its record under `ws.records()`.
inline ExperimentRecord run_experiment(ExperimentRunner& runner, const Workspace& ws,
                                       bool force = false) {
  const std::string name = runner.config().record_name();
  runner.check_inputs();
  const fs::path target = record_path(ws.records(), name);
  if (fs::exists(target) && !force) {
    throw ConfigError("record " + target.string() + " exists; pass --force to overwrite");
  }
  ExperimentRecord rec = runner.run();
  save_record(ws.records(), name, rec, force);
  return rec;
}

inline ExperimentRecord run_experiment(const ExperimentConfig& cfg, const Workspace& ws,
                                       bool force = false, const Logger& log = {}) {
  ExperimentRunner runner(cfg, ws, log);
  return run_experiment(runner, ws, force);
}

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_EXPERIMENTS_HPP_
