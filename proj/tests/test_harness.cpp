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

#include <cstdlib>
#include <sstream>

#include "vidshuffle/harness/cli.hpp"

namespace vidshuffle::harness {
namespace {

// ------------------------------------------------------------ sweep rule

TEST(SelectCell, PrefersAttackedAccuracyAmongNearBestClean) {
  const std::vector<SweepCell> cells{
      {1, 1, 1.00, 0.20}, {2, 1, 0.97, 0.60}, {3, 1, 0.90, 0.95}, {4, 1, 0.99, 0.60}};
  EXPECT_EQ(select_cell(cells), 1u);  // cell 2 is 10 points below the best clean
}

TEST(SelectCell, BoundaryIsInclusiveAndTiesGoToEarliest) {
  EXPECT_EQ(select_cell({{1, 1, 1.0, 0.5}, {2, 1, 0.95, 0.7}}), 1u);
  EXPECT_EQ(select_cell({{1, 1, 1.0, 0.5}, {2, 1, 1.0, 0.5}}), 0u);
  EXPECT_THROW(select_cell({}), ConfigError);
}

// ---------------------------------------------------------------- config

TEST(Config, JsonOverlayKeepsUnsetDefaults) {
  ExperimentConfig c;
  apply_json(c, json::parse(R"({"experiment": "defense_sweep", "attack": {"epsilon": 8},
                                "defense": {"k": 20}, "grid": {"h2": [1]}})"));
  EXPECT_EQ(c.experiment, ExperimentKind::kDefenseSweep);
  EXPECT_FLOAT_EQ(c.attack.config.epsilon, 8.0f);
  EXPECT_EQ(c.attack.config.iterations, 30);
  EXPECT_EQ(c.defense.config.ensemble_size, 20);
  EXPECT_EQ(c.grid_h1, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(c.grid_h2, std::vector<int>{1});
}

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::kEnsembleSize;
  c.dataset = "d";
  c.model = "m";
  c.seed = 42;
  c.defense.config.method = defense::DefenseMethod::kShufflePlusSmoothing;
  c.defense.from_sweep = "sw";
  c.attack.method = attacks::AttackMethod::kEot;
  EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
}

TEST(Config, BadValuesAreConfigErrors) {
  ExperimentConfig c;
  EXPECT_THROW(apply_json(c, json::parse(R"({"trials": "many"})")), ConfigError);
  EXPECT_THROW(apply_json(c, json::parse(R"({"experiment": "nope"})")), ConfigError);
  EXPECT_THROW(apply_json(c, json::parse(R"({"attack": {"method": "pgd"}})")), ConfigError);
  EXPECT_THROW(apply_json(c, json::array()), ConfigError);
  c = ExperimentConfig{};
  EXPECT_THROW(c.validate(), ConfigError);  // no dataset or model
  c.dataset = "d";
  c.model = "m";
  EXPECT_NO_THROW(c.validate());
  c.attack.config.epsilon = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

// --------------------------------------------------------- tiny workspace

class TinyWorkspace : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("vidshuffle_harness_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    toydata::ToySpec s;
    s.variant = 1;
    s.videos_total = 48;
    s.frames_per_video = 4;
    s.frame_size = 32;
    s.object_size = 8;
    s.seed = 4;
    const auto [tr, te] = toydata::split_dataset(toydata::generate_dataset(s), 0.75);
    io::save_dataset(root_ / "data", tr, te, {{"spec", io::toy_spec_to_json(s)}});
    PredictorSpec ps;
    ps.input_shape = {4, 32, 32, 3};
    ps.width = 4;
    Predictor m = build_model(ps, 1);
    TrainConfig tc;
    tc.epochs = 2;
    tc.lr = 3e-3;
    train(m, tr, tc);
    io::save_checkpoint(root_ / "model.vsck", m);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  void SetUp() override { fs::remove_all(ws().records()); }

  static Workspace ws() { return {root_}; }

  static ExperimentConfig base(ExperimentKind k) {
    ExperimentConfig c;
    c.experiment = k;
    c.dataset = "data";
    c.model = "model.vsck";
    c.attack.config.iterations = 2;
    c.max_videos = 6;
    return c;
  }

  static inline fs::path root_;
};

TEST_F(TinyWorkspace, EveryExperimentRunsAndVerifies) {
  for (ExperimentKind k : kAllExperiments) {
    auto c = base(k);
    c.min_bin_count = 1;
    c.trials = 2;
    c.chunks = {1, 2};
    c.row_chunks = {2};
    c.ensemble_sizes = {1, 3};
    c.grid_h1 = {1, 2};
    c.grid_h2 = {1, 2};
    c.defense.config.ensemble_size = 2;
    c.max_videos = k == ExperimentKind::kDefenseMatrix ? 2 : 6;
    const ExperimentRecord rec = run_experiment(c, ws());
    EXPECT_FALSE(rec.rows.empty()) << experiment_name(k);
    const VerifyResult v = verify_record(load_record(record_path(ws().records(), c.record_name())));
    EXPECT_TRUE(v.ok) << experiment_name(k) << ": "
                      << (v.problems.empty() ? "" : v.problems.front());
  }
}

TEST_F(TinyWorkspace, RowsCarryProvenanceAndRatios) {
  auto c = base(ExperimentKind::kMonotonicity);
  c.min_bin_count = 1;
  c.trials = 3;
  const ExperimentRecord rec = run_experiment(c, ws());
  ASSERT_EQ(rec.rows.size(), 18u);
  for (const auto& r : rec.rows) {
    ASSERT_EQ(r.provenance.size(), 1u);
    const auto w = analysis::TemporalWindowSpec{3, 1, 1};
    EXPECT_DOUBLE_EQ(r.ratio, analysis::monotonic_ratio(r.provenance[0], w));
    EXPECT_EQ(r.correct, r.predicted == r.label);
  }
}

TEST_F(TinyWorkspace, RunsAreDeterministic) {
  auto c = base(ExperimentKind::kDefenseSweep);
  c.grid_h1 = {1, 2};
  c.grid_h2 = {2};
  c.defense.config.ensemble_size = 3;
  const auto a = run_experiment(c, ws());
  const auto b = run_experiment(c, ws(), true);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.derived, b.derived);
}

TEST_F(TinyWorkspace, ExistingRecordNeedsForce) {
  const auto c = base(ExperimentKind::kUniformizeClean);
  run_experiment(c, ws());
  EXPECT_THROW(run_experiment(c, ws()), ConfigError);
  EXPECT_NO_THROW(run_experiment(c, ws(), true));
}

TEST_F(TinyWorkspace, MissingInputsAreMissingArtifacts) {
  auto c = base(ExperimentKind::kUniformizeClean);
  c.model = "absent.vsck";
  EXPECT_THROW(run_experiment(c, ws()), MissingArtifact);
  c = base(ExperimentKind::kEnsembleSize);
  c.defense.from_sweep = "no_such_sweep";
  EXPECT_THROW(run_experiment(c, ws()), MissingArtifact);
}

TEST_F(TinyWorkspace, VerifyDetectsTampering) {
  auto c = base(ExperimentKind::kToyRandomize);
  c.chunks = {1, 2};
  run_experiment(c, ws());
  const fs::path p = record_path(ws().records(), c.record_name());
  ExperimentRecord rec = load_record(p);
  Row& r = rec.rows[0];
  r.predicted = r.correct ? (r.label + 1) % 8 : r.label;
  rec.rows[0].correct = rec.rows[0].predicted == rec.rows[0].label;
  save_record(ws().records(), c.record_name(), rec, true);
  EXPECT_FALSE(verify_record(load_record(p)).ok);
}

TEST_F(TinyWorkspace, AttackCacheIsReused) {
  const AttackCache cache0(ws().attack_cache(), root_ / "model.vsck", root_ / "data",
                           attacks::AttackMethod::kStatic, base(ExperimentKind::kAttackRandomize).attack.config);
  auto c = base(ExperimentKind::kAttackRandomize);
  c.attack.method = attacks::AttackMethod::kStatic;
  c.chunks = {};
  const auto a = run_experiment(c, ws());
  AttackCache cache(ws().attack_cache(), root_ / "model.vsck", root_ / "data",
                    attacks::AttackMethod::kStatic, c.attack.config);
  const int n = static_cast<int>(io::load_dataset(root_ / "data").test.items.size());
  for (int i = 0; i < 6; ++i) {
    cache.get(i * n / 6, []() -> Tensor { throw std::runtime_error("cache miss"); });
  }
  EXPECT_EQ(cache.hits(), 6);
  EXPECT_EQ(cache0.key(), cache.key());
  c.attack.config.epsilon = 2;
  const AttackCache other(ws().attack_cache(), root_ / "model.vsck", root_ / "data",
                          attacks::AttackMethod::kStatic, c.attack.config);
  EXPECT_NE(other.key(), cache.key());
  EXPECT_EQ(run_experiment(c, ws(), true).rows.size(), a.rows.size());
}

TEST_F(TinyWorkspace, SweepSelectionFeedsLaterExperiments) {
  auto s = base(ExperimentKind::kDefenseSweep);
  s.grid_h1 = {1, 2};
  s.grid_h2 = {1, 2};
  s.defense.config.ensemble_size = 2;
  const auto sweep = run_experiment(s, ws());
  auto e = base(ExperimentKind::kEnsembleSize);
  e.ensemble_sizes = {2};
  e.defense.from_sweep = "defense_sweep";
  const auto rec = run_experiment(e, ws());
  EXPECT_EQ(rec.config.at("defense").at("h1"), sweep.derived.at("selected").at("h1"));
  EXPECT_EQ(rec.config.at("defense").at("h2"), sweep.derived.at("selected").at("h2"));
}

TEST_F(TinyWorkspace, ReportWritesMatrixWithToyHeader) {
  auto c = base(ExperimentKind::kDefenseMatrix);
  c.max_videos = 1;
  c.defense.config.ensemble_size = 2;
  run_experiment(c, ws());
  const auto files = write_reports(ws());
  const std::string table = io::detail::read_file(ws().reports() / "defense_matrix_table.csv");
  EXPECT_EQ(table.rfind("# toy substitution", 0), 0u);
  EXPECT_NE(table.find("Ours+RS,"), std::string::npos);
  EXPECT_TRUE(fs::exists(ws().reports() / "summary.json"));
}

// -------------------------------------------------------------------- CLI

class Cli : public TinyWorkspace {
 protected:
  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "vidshuffle");
    out_.str("");
    err_.str("");
    ::setenv("VIDSHUFFLE_OUT", root_.c_str(), 1);
    return run_cli(args, out_, err_);
  }
  std::ostringstream out_, err_;
};

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"attack", "--method", "pgd", "--data", "data", "--model", "model.vsck"}), 1);
  EXPECT_EQ(run({"attack", "--eps", "four"}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"attack", "--data", "data", "--model", "nope.vsck"}), 2);
  EXPECT_EQ(run({"defend", "--data", "nodata", "--model", "model.vsck"}), 2);
  EXPECT_EQ(run({"verify"}), 2);
  EXPECT_EQ(run({"train", "--data", "nodata", "--out", "x.vsck"}), 2);
  EXPECT_EQ(run({"analyze", "--data", "data", "--model", "model.vsck"}), 1);
}

TEST_F(Cli, GenDataTrainAttackDefendVerify) {
  ASSERT_EQ(run({"gen-data", "--variant", "2", "--seed", "1", "--out", "cli_data", "--videos", "32",
                 "--frames", "4", "--frame-size", "32", "--object-size", "8"}), 0) << err_.str();
  EXPECT_EQ(run({"gen-data", "--variant", "2", "--seed", "1", "--out", "cli_data"}), 1);
  ASSERT_EQ(run({"train", "--data", "cli_data", "--out", "cli.vsck", "--epochs", "1", "--width", "4",
                 "--temporal", "3,2,1"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(root_ / "cli.vsck.history.csv"));
  EXPECT_EQ(io::load_checkpoint(root_ / "cli.vsck").model.spec().first_layer_temporal.stride, 2);
  ASSERT_EQ(run({"attack", "--method", "ifgsm", "--eps", "4", "--iters", "2", "--data", "cli_data",
                 "--model", "cli.vsck", "--dump-perts", "--dump-count", "1"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(ws().reports() / "perturbations" / "attack_ifgsm"));
  EXPECT_EQ(run({"attack", "--method", "ifgsm", "--iters", "2", "--data", "cli_data", "--model",
                 "cli.vsck"}), 1);  // record exists
  EXPECT_EQ(run({"defend", "--method", "shuffle", "--h1", "2", "--h2", "2", "--k", "3", "--iters", "2",
                 "--data", "cli_data", "--model", "cli.vsck"}), 0) << err_.str();
  const auto rec = load_record(record_path(ws().records(), "defend_shuffle"));
  EXPECT_EQ(rec.config.at("defense").at("h1"), 2);
  EXPECT_TRUE(rec.aggregates.count("K=3/attacked"));
  EXPECT_EQ(run({"report"}), 0);
  EXPECT_EQ(run({"verify"}), 0) << out_.str();
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  const fs::path cfg = root_ / "cfg.json";
  io::write_file_atomic(cfg, R"({"experiment": "uniformize_clean", "dataset": "data",
      "model": "model.vsck", "max_videos": 2, "name": "from_file"})");
  ASSERT_EQ(run({"analyze", "--config", cfg.string(), "--max-videos", "3"}), 0) << err_.str();
  const auto rec = load_record(record_path(ws().records(), "from_file"));
  EXPECT_EQ(rec.config.at("max_videos"), 3);
  EXPECT_EQ(run({"analyze", "--config", (root_ / "missing.json").string()}), 1);
}

TEST_F(Cli, VerifyFailsOnTamperedRecord) {
  ASSERT_EQ(run({"analyze", "--experiment", "uniformize_clean", "--data", "data", "--model",
                 "model.vsck", "--max-videos", "2"}), 0);
  const fs::path p = record_path(ws().records(), "uniformize_clean");
  json j = json::parse(io::detail::read_file(p));
  j["aggregates"]["clean"] = 0.123;
  io::write_file_atomic(p, j.dump());
  EXPECT_EQ(run({"verify", "uniformize_clean"}), 3);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace vidshuffle::harness
