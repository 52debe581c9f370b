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

#ifndef VIDSHUFFLE_HARNESS_CLI_HPP_
#define VIDSHUFFLE_HARNESS_CLI_HPP_

// The `vidshuffle` command line. Exit codes: 0 success, 1 configuration
// error, 2 missing input artifact, 3 runtime failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vidshuffle/harness/report.hpp"
#include "vidshuffle/io.hpp"
#include "vidshuffle/model.hpp"
#include "vidshuffle/toydata.hpp"

namespace vidshuffle::harness {

enum ExitCode : int { kOk = 0, kConfigError = 1, kMissingArtifact = 2, kRuntimeFailure = 3 };

inline fs::path output_root() {
  const char* env = std::getenv("VIDSHUFFLE_OUT");
  return env && *env ? fs::path(env) : fs::path("vidshuffle_out");
}

namespace cli {

inline json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated integer list, got '" + s + "'");
    }
  }
  return out;
}

/// Collects flags that were given on the command line as a JSON overlay.
class Overlay {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::vector<std::string>& path,
           const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *holder, help);
    entries_.push_back([opt, holder, path](json& j) {
      if (opt->count() == 0) return;
      json* node = &j;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
      (*node)[path.back()] = *holder;
    });
  }

  void add_list(CLI::App* app, const std::string& flag, const std::vector<std::string>& path,
                const std::string& help) {
    auto holder = std::make_shared<std::string>();
    CLI::Option* opt = app->add_option(flag, *holder, help);
    entries_.push_back([opt, holder, path](json& j) {
      if (opt->count() == 0) return;
      json* node = &j;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
      (*node)[path.back()] = parse_int_list(*holder);
    });
  }

  json build() const {
    json j = json::object();
    for (const auto& e : entries_) e(j);
    return j;
  }

 private:
  std::vector<std::function<void(json&)>> entries_;
};

inline void merge(json& base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

struct Common {
  std::string config_file;
  bool force = false;
};

inline void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "JSON config file; flags override its keys");
  app->add_flag("--force", c.force, "overwrite existing outputs");
}

inline void add_experiment_flags(CLI::App* app, Overlay& o) {
  o.add<std::string>(app, "--data", {"dataset"}, "dataset directory");
  o.add<std::string>(app, "--model", {"model"}, "model checkpoint");
  o.add<std::string>(app, "--name", {"name"}, "record name");
  o.add<std::uint64_t>(app, "--seed", {"seed"}, "seed for random transforms");
  o.add<int>(app, "--trials", {"trials"}, "random draws per video");
  o.add<int>(app, "--max-videos", {"max_videos"}, "evaluate an evenly spaced test subset");
}

inline void add_attack_flags(CLI::App* app, Overlay& o, bool method_flag) {
  o.add<std::string>(app, method_flag ? "--method" : "--attack", {"attack", "method"},
                     "ifgsm, static, framewise, oneframe, flicker or eot");
  o.add<float>(app, "--eps", {"attack", "epsilon"}, "L-inf budget in pixel levels");
  o.add<int>(app, "--iters", {"attack", "iterations"}, "iterations M");
  o.add<int>(app, "--eot-samples", {"attack", "eot_samples"}, "defense samples per EOT step");
  o.add<std::uint64_t>(app, "--attack-seed", {"attack", "seed"}, "EOT sampling seed");
}

inline void add_defense_flags(CLI::App* app, Overlay& o, bool method_flag) {
  o.add<std::string>(app, method_flag ? "--method" : "--defense", {"defense", "method"},
                     "shuffle, rs or shuffle+rs");
  o.add<int>(app, "--h1", {"defense", "h1"}, "shuffle h1");
  o.add<int>(app, "--h2", {"defense", "h2"}, "shuffle h2");
  o.add<float>(app, "--sigma", {"defense", "sigma"}, "noise std in pixel levels");
  o.add<int>(app, "--k", {"defense", "k"}, "ensemble size K");
  o.add<std::string>(app, "--from-sweep", {"defense", "from_sweep"},
                     "take (h1,h2) from this sweep record");
}

inline ExperimentConfig make_config(const Common& c, const Overlay& o, json fixed) {
  json j = read_config_file(c.config_file);
  merge(j, o.build());
  merge(j, fixed);
  return config_from_json(j);
}

inline void dump_perturbations(const Workspace& ws, const std::string& name,
                               const std::vector<std::pair<int, Tensor>>& perts, int count,
                               std::ostream& out) {
  const fs::path dir = ws.reports() / "perturbations" / name;
  fs::create_directories(dir);
  int written = 0;
  for (std::size_t i = 0; i < perts.size() && static_cast<int>(i) < count; ++i) {
    const auto& [id, delta] = perts[i];
    for (int t = 0; t < delta.shape().t; ++t) {
      char file[64];
      std::snprintf(file, sizeof(file), "video%05d_frame%02d.png", id, t);
      io::write_file_atomic(dir / file, io::encode_png(io::magnify_perturbation(delta, t)));
      ++written;
    }
  }
  out << "wrote " << written << " perturbation images (x20) to " << dir.string() << "\n";
}

inline void print_summary(const ExperimentRecord& rec, const Workspace& ws, std::ostream& out) {
  for (const auto& [g, a] : rec.aggregates) out << "  " << g << ": " << fmt(a) << "\n";
  out << "record " << record_path(ws.records(), rec.config.value("name", "")).string() << " ("
      << fmt(rec.wall_clock_s, 1) << " s)\n";
}

}  // namespace cli

/// Runs the command line. `argv[0]` is the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace cli;
  CLI::App app{"vidshuffle: temporal-shuffle defense experiments on toy videos", "vidshuffle"};
  app.require_subcommand(1);
  const Workspace ws{output_root()};
  Logger log = [&err](const std::string& m) { err << "[vidshuffle] " << m << "\n"; };

  // gen-data
  Common gc;
  Overlay go;
  auto* gen = app.add_subcommand("gen-data", "generate a toy dataset");
  add_common(gen, gc);
  go.add<int>(gen, "--variant", {"variant"}, "1: color+motion, 2: motion only, 3: appearance only");
  go.add<std::uint64_t>(gen, "--seed", {"seed"}, "generation seed");
  go.add<int>(gen, "--videos", {"videos_total"}, "total videos (multiple of 8)");
  go.add<int>(gen, "--frames", {"frames_per_video"}, "frames per video");
  go.add<int>(gen, "--frame-size", {"frame_size"}, "frame side in pixels");
  go.add<int>(gen, "--object-size", {"object_size"}, "object side in pixels");
  go.add<float>(gen, "--contrast", {"contrast"}, "palette contrast in (0,1]");
  go.add<double>(gen, "--train-fraction", {"train_fraction"}, "share of each class used for training");
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  Common tc;
  Overlay to;
  auto* trn = app.add_subcommand("train", "train a classifier on a dataset");
  add_common(trn, tc);
  to.add<std::string>(trn, "--data", {"dataset"}, "dataset directory");
  to.add<std::string>(trn, "--arch", {"architecture"}, "plain3dcnn_small or inflated_resnet18");
  to.add<int>(trn, "--width", {"width"}, "first-stage channels");
  to.add<int>(trn, "--epochs", {"epochs"}, "training epochs");
  to.add<int>(trn, "--batch-size", {"batch_size"}, "mini-batch size");
  to.add<double>(trn, "--lr", {"lr"}, "Adam learning rate");
  to.add<std::uint64_t>(trn, "--seed", {"seed"}, "init and shuffling seed");
  to.add_list(trn, "--temporal", {"first_layer_temporal"}, "first-layer kernel,stride,padding");
  std::string train_out;
  trn->add_option("--out", train_out, "checkpoint path")->required();

  // attack
  Common ac;
  Overlay ao;
  auto* atk = app.add_subcommand("attack", "attack the test split and report accuracy");
  add_common(atk, ac);
  add_experiment_flags(atk, ao);
  add_attack_flags(atk, ao, true);
  add_defense_flags(atk, ao, false);
  ao.add_list(atk, "--chunks", {"chunks"}, "also evaluate chunk randomization at these N");
  bool dump = false;
  int dump_count = 4;
  atk->add_flag("--dump-perts", dump, "write x20 perturbation PNGs");
  atk->add_option("--dump-count", dump_count, "videos to dump");

  // defend
  Common dc;
  Overlay dov;
  auto* def = app.add_subcommand("defend", "evaluate a defense on clean and attacked videos");
  add_common(def, dc);
  add_experiment_flags(def, dov);
  add_defense_flags(def, dov, true);
  add_attack_flags(def, dov, false);

  // analyze
  Common nc;
  Overlay no;
  auto* ana = app.add_subcommand("analyze", "run one analysis experiment");
  add_common(ana, nc);
  add_experiment_flags(ana, no);
  add_attack_flags(ana, no, false);
  add_defense_flags(ana, no, false);
  no.add<std::string>(ana, "--experiment", {"experiment"},
                      "uniformize_clean, randomize_clean, toy_randomize, attack_randomize, "
                      "temporal_pattern_cases, attack_uniformize, ensemble_size, defense_matrix, "
                      "monotonicity");
  no.add_list(ana, "--chunks", {"chunks"}, "chunk sizes N");
  no.add_list(ana, "--row-chunks", {"row_chunks"}, "row-group sizes");
  no.add_list(ana, "--sizes", {"ensemble_sizes"}, "ensemble sizes K");
  no.add<int>(ana, "--min-bin-count", {"min_bin_count"}, "smallest reported ratio bin");

  // sweep
  Common sc;
  Overlay so;
  auto* swp = app.add_subcommand("sweep", "grid search of shuffle (h1,h2)");
  add_common(swp, sc);
  add_experiment_flags(swp, so);
  add_attack_flags(swp, so, false);
  so.add<int>(swp, "--k", {"defense", "k"}, "ensemble size K");
  so.add_list(swp, "--h1-grid", {"grid", "h1"}, "h1 values");
  so.add_list(swp, "--h2-grid", {"grid", "h2"}, "h2 values");

  auto* rep = app.add_subcommand("report", "write tables and plots for all records");

  auto* ver = app.add_subcommand("verify", "recompute aggregates from persisted rows");
  std::vector<std::string> verify_names;
  ver->add_option("names", verify_names, "record names (default: all)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kConfigError;
    }

    if (gen->parsed()) {
      json j = json::object();
      merge(j, read_config_file(gc.config_file));
      merge(j, go.build());
      const double fraction = j.value("train_fraction", 0.75);
      j.erase("train_fraction");
      toydata::ToySpec spec;
      try {
        spec = io::toy_spec_from_json(j);
        spec.validate();
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");
      const fs::path dir = ws.resolve(gen_out);
      if (fs::exists(dir / "manifest.json") && !gc.force) {
        throw ConfigError("dataset " + dir.string() + " exists; pass --force to overwrite");
      }
      const auto [train_set, test_set] = toydata::split_dataset(toydata::generate_dataset(spec), fraction);
      json header = {{"spec", io::toy_spec_to_json(spec)}, {"train_fraction", fraction}};
      io::save_dataset(dir, train_set, test_set, header);
      out << "wrote " << train_set.items.size() << " train and " << test_set.items.size()
          << " test videos to " << dir.string() << "\n";
      return kOk;
    }

    if (trn->parsed()) {
      json j = read_config_file(tc.config_file);
      merge(j, to.build());
      const fs::path data = ws.resolve(j.value("dataset", std::string()));
      if (j.value("dataset", std::string()).empty()) throw ConfigError("train: --data is required");
      const fs::path ckpt = ws.resolve(train_out);
      if (fs::exists(ckpt) && !tc.force) {
        throw ConfigError("checkpoint " + ckpt.string() + " exists; pass --force to overwrite");
      }
      if (!fs::exists(data / "manifest.json")) {
        throw MissingArtifact("missing dataset " + data.string() + " (run gen-data)");
      }
      const io::StoredDataset ds = io::load_dataset(data);
      PredictorSpec ps;
      TrainConfig cfg;
      try {
        ps.architecture = parse_architecture(j.value("architecture", "plain3dcnn_small"));
        ps.width = j.value("width", ps.width);
        ps.input_shape = ds.train.items.at(0).video.shape();
        if (j.contains("first_layer_temporal")) {
          const auto v = j.at("first_layer_temporal").get<std::vector<int>>();
          if (v.size() != 3) throw ConfigError("--temporal takes kernel,stride,padding");
          ps.first_layer_temporal = {v[0], v[1], v[2]};
        }
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.seed = j.value("seed", cfg.seed);
        ps.validate();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      Predictor model = build_model(ps, cfg.seed);
      std::string csv = "epoch,loss,accuracy\n";
      const TrainHistory hist = train(model, ds.train, cfg, [&](const EpochStats& s) {
        log("epoch " + std::to_string(s.epoch) + " loss " + fmt(s.loss, 6) + " acc " + fmt(s.accuracy));
      });
      csv += "0," + fmt(hist.initial_loss, 8) + ",\n";
      for (const auto& e : hist.epochs) {
        csv += std::to_string(e.epoch) + "," + fmt(e.loss, 8) + "," + fmt(e.accuracy, 6) + "\n";
      }
      const auto test = evaluate_loss(model, ds.test);
      fs::create_directories(ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path());
      io::save_checkpoint(ckpt, model,
                          {{"dataset", data.generic_string()},
                           {"train", {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size},
                                      {"lr", cfg.lr}, {"seed", cfg.seed}}},
                           {"test_accuracy", test.accuracy}});
      io::write_file_atomic(fs::path(ckpt.string() + ".history.csv"), csv);
      out << "test accuracy " << fmt(test.accuracy) << "\nwrote " << ckpt.string() << "\n";
      return kOk;
    }

    auto run = [&](const ExperimentConfig& cfg, bool force) {
      ExperimentRunner runner(cfg, ws, log);
      const ExperimentRecord rec = run_experiment(runner, ws, force);
      print_summary(rec, ws, out);
      return std::make_pair(rec, runner.perturbations());
    };

    if (atk->parsed()) {
      json fixed = {{"experiment", "attack_randomize"}};
      if (ao.build().count("chunks") == 0 && read_config_file(ac.config_file).count("chunks") == 0) {
        fixed["chunks"] = json::array();
      }
      ExperimentConfig cfg = make_config(ac, ao, fixed);
      if (cfg.name.empty()) cfg.name = std::string("attack_") + attacks::method_name(cfg.attack.method);
      const auto [rec, perts] = run(cfg, ac.force);
      if (dump) dump_perturbations(ws, cfg.record_name(), perts, dump_count, out);
      return kOk;
    }
    if (def->parsed()) {
      ExperimentConfig cfg = make_config(dc, dov, {{"experiment", "ensemble_size"}});
      cfg.ensemble_sizes = {cfg.defense.config.ensemble_size};
      if (cfg.name.empty()) cfg.name = std::string("defend_") + defense::method_name(cfg.defense.config.method);
      run(cfg, dc.force);
      return kOk;
    }
    if (ana->parsed()) {
      ExperimentConfig cfg = make_config(nc, no, json::object());
      const json merged = [&] {
        json j = read_config_file(nc.config_file);
        merge(j, no.build());
        return j;
      }();
      if (!merged.contains("experiment")) throw ConfigError("analyze: --experiment is required");
      if (cfg.experiment == ExperimentKind::kDefenseSweep) {
        throw ConfigError("analyze: use the sweep subcommand for defense_sweep");
      }
      run(cfg, nc.force);
      return kOk;
    }
    if (swp->parsed()) {
      ExperimentConfig cfg = make_config(sc, so, {{"experiment", "defense_sweep"}});
      const auto [rec, perts] = run(cfg, sc.force);
      const json& s = rec.derived.at("selected");
      out << "selected h1=" << s.at("h1") << " h2=" << s.at("h2") << " (clean " << fmt(s.at("clean"))
          << ", attacked " << fmt(s.at("attacked")) << ")\n";
      return kOk;
    }
    if (rep->parsed()) {
      const auto files = write_reports(ws);
      for (const auto& f : files) out << "wrote " << f.string() << "\n";
      return kOk;
    }
    if (ver->parsed()) {
      std::vector<fs::path> paths;
      if (verify_names.empty()) {
        paths = list_records(ws.records());
        if (paths.empty()) throw MissingArtifact("no records under " + ws.records().string());
      } else {
        for (const auto& n : verify_names) paths.push_back(record_path(ws.records(), n));
      }
      bool all_ok = true;
      for (const auto& p : paths) {
        const VerifyResult v = verify_record(load_record(p));
        out << (v.ok ? "OK   " : "FAIL ") << p.stem().string() << "\n";
        for (const auto& m : v.problems) out << "       " << m << "\n";
        all_ok = all_ok && v.ok;
      }
      return all_ok ? kOk : kRuntimeFailure;
    }
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const MissingArtifact& e) {
    err << "missing artifact: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_CLI_HPP_
