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

// Acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any hard criterion fails.
//
//   acceptance [work_dir]
//
// Datasets, checkpoints and attack perturbations are kept in work_dir and
// reused by later runs; timings.json keeps the wall-clock cost of the run
// that produced them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vidshuffle/harness/experiments.hpp"

namespace vs = vidshuffle;
namespace h = vidshuffle::harness;
using h::json;
namespace fs = std::filesystem;

namespace {

// Toy setup shared by all toy criteria.
constexpr float kContrast = 1.0f;
constexpr int kObjectSize = 24;
constexpr vs::analysis::TemporalWindowSpec kFirstLayer{4, 4, 0};
constexpr int kWidth = 16;
// Variant used by the attack and defense criteria.
constexpr int kAttackVariant = 3;
constexpr int kEpochs = 20;
constexpr int kMonotonicityTrials = 5;

int failures = 0;

void report(int id, bool pass, const std::string& detail, bool soft = false) {
  const char* tag = pass ? "PASS" : (soft ? "SOFT-FAIL" : "FAIL");
  std::printf("[%s] criterion %d: %s\n", tag, id, detail.c_str());
  std::fflush(stdout);
  if (!pass && !soft) ++failures;
}

std::string pct(double a) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Timings {
 public:
  explicit Timings(fs::path p) : path_(std::move(p)) {
    if (fs::exists(path_)) j_ = json::parse(vs::io::detail::read_file(path_));
  }
  /// Runs `work` unless a timing for `key` exists and `cached` is true.
  double measure(const std::string& key, bool cached, const std::function<void()>& work) {
    if (cached && j_.contains(key)) return j_[key].get<double>();
    const auto t0 = std::chrono::steady_clock::now();
    work();
    j_[key] = seconds_since(t0);
    vs::io::write_file_atomic(path_, j_.dump(1));
    return j_[key].get<double>();
  }

 private:
  fs::path path_;
  json j_ = json::object();
};

struct Toy {
  h::Workspace ws;
  Timings timings;

  std::string data(int v) const { return "data/v" + std::to_string(v); }
  std::string model(int v) const { return "models/v" + std::to_string(v) + ".vsck"; }

  vs::toydata::ToySpec spec(int v) const {
    vs::toydata::ToySpec s;
    s.variant = v;
    s.contrast = kContrast;
    s.object_size = kObjectSize;
    s.seed = 1;
    return s;
  }

  /// Generates and trains variant `v` unless matching artifacts exist.
  /// Returns the seconds spent (or recorded for the cached artifacts).
  double prepare(int v) {
    const auto s = spec(v);
    const fs::path dir = ws.resolve(data(v));
    const json want = vs::io::toy_spec_to_json(s);
    bool have_data = false;
    if (fs::exists(dir / "manifest.json")) {
      const auto j = json::parse(vs::io::detail::read_file(dir / "manifest.json"));
      have_data = j.contains("header") && j["header"].value("spec", json()) == want;
    }
    const double gen_s = timings.measure("gen_v" + std::to_string(v), have_data, [&] {
      const auto [tr, te] = vs::toydata::split_dataset(vs::toydata::generate_dataset(s), 0.75);
      vs::io::save_dataset(dir, tr, te, {{"spec", want}, {"train_fraction", 0.75}});
    });
    const fs::path ckpt = ws.resolve(model(v));
    json train_meta = {{"epochs", kEpochs}, {"seed", 3}, {"dataset", want},
                       {"first_layer", {kFirstLayer.kernel, kFirstLayer.stride, kFirstLayer.padding}},
                       {"width", kWidth}};
    bool have_model = have_data && fs::exists(ckpt) &&
                      vs::io::load_checkpoint(ckpt).metadata.value("train", json()) == train_meta;
    const double train_s = timings.measure("train_v" + std::to_string(v), have_model, [&] {
      const auto ds = vs::io::load_dataset(dir);
      vs::PredictorSpec ps;
      ps.first_layer_temporal = kFirstLayer;
      ps.width = kWidth;
      vs::Predictor m = vs::build_model(ps, 7);
      vs::TrainConfig tc;
      tc.epochs = kEpochs;
      tc.seed = 3;
      vs::train(m, ds.train, tc);
      fs::create_directories(ckpt.parent_path());
      vs::io::save_checkpoint(ckpt, m, {{"train", train_meta}});
    });
    return gen_s + train_s;
  }

  h::ExperimentConfig base(h::ExperimentKind k, int v) const {
    h::ExperimentConfig c;
    c.experiment = k;
    c.dataset = data(v);
    c.model = model(v);
    c.seed = 11;
    return c;
  }

  h::ExperimentRecord run(h::ExperimentConfig c, const std::string& name, double* seconds = nullptr) {
    c.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    h::ExperimentRecord rec = h::run_experiment(c, ws, true, [](const std::string& m) {
      std::fprintf(stderr, "  %s\n", m.c_str());
    });
    if (seconds) *seconds = seconds_since(t0);
    return rec;
  }
};

// ------------------------------------------------------------ toy criteria

void toy_criteria(Toy& toy) {
  using K = h::ExperimentKind;
  // 1. clean accuracy and full frame randomization
  double setup_s = 0.0;
  std::map<int, double> clean, rand8;
  for (int v : {1, 2, 3}) {
    setup_s += toy.prepare(v);
    auto c = toy.base(K::kToyRandomize, v);
    c.chunks = {1, 8};
    double eval_s = 0.0;
    const auto rec = toy.run(c, "toy_randomize_v" + std::to_string(v), &eval_s);
    setup_s += eval_s;
    clean[v] = rec.accuracy("chunk=1");
    rand8[v] = rec.accuracy("chunk=8");
  }
  const bool c1 = clean[1] >= 0.95 && clean[2] >= 0.95 && clean[3] >= 0.90 && rand8[1] >= 0.85 &&
                  rand8[2] >= rand8[3] && rand8[3] > 0.20 && setup_s < 1800.0;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "clean v1/v2/v3 = %s/%s/%s, N=8 randomized = %s/%s/%s, generate+train+evaluate %.0f s",
                pct(clean[1]).c_str(), pct(clean[2]).c_str(), pct(clean[3]).c_str(),
                pct(rand8[1]).c_str(), pct(rand8[2]).c_str(), pct(rand8[3]).c_str(), setup_s);
  report(1, c1, buf);

  // 2. I-FGSM efficacy on the full test split
  const int av = kAttackVariant;
  const std::string tag = "_v" + std::to_string(av);
  auto ac = toy.base(K::kAttackRandomize, av);
  ac.chunks = {};
  const auto probe = toy.base(K::kAttackRandomize, av);
  h::AttackCache cache(toy.ws.attack_cache(), toy.ws.resolve(probe.model), toy.ws.resolve(probe.dataset),
                       vs::attacks::AttackMethod::kIfgsm, probe.attack.config);
  const bool cached = cache.contains(0);
  const double attack_s =
      toy.timings.measure("ifgsm" + tag, cached, [&] { toy.run(ac, "attack_ifgsm" + tag); });
  const auto arec = toy.run(ac, "attack_ifgsm" + tag);
  const std::size_t n_attacked = arec.rows.size() / 2;
  std::snprintf(buf, sizeof(buf), "variant %d, I-FGSM eps=4 M=30: %s -> %s on %zu videos in %.0f s", av,
                pct(arec.accuracy("clean")).c_str(), pct(arec.accuracy("attacked")).c_str(),
                n_attacked, attack_s);
  report(2, arec.accuracy("attacked") <= 0.10 && attack_s < 600.0, buf);

  // 3. static > framewise > full
  auto pc = toy.base(K::kTemporalPatternCases, av);
  const auto prec = toy.run(pc, "temporal_pattern_cases" + tag);
  const double st = prec.accuracy("static"), fw = prec.accuracy("framewise"), full = prec.accuracy("ifgsm");
  std::snprintf(buf, sizeof(buf), "static %s, framewise %s, full %s on %zu videos", pct(st).c_str(),
                pct(fw).c_str(), pct(full).c_str(), prec.rows.size() / 4);
  report(3, st - fw >= 0.03 && fw - full >= 0.03, buf);

  // 4. uniformized attacked vs uniformized clean
  const auto urec = toy.run(toy.base(K::kAttackUniformize, av), "attack_uniformize" + tag);
  const double uc = urec.derived.at("uniformized_clean"), ua = urec.derived.at("uniformized_attacked");
  std::snprintf(buf, sizeof(buf), "uniformized clean %s, uniformized attacked %s (mean over frames)",
                pct(uc).c_str(), pct(ua).c_str());
  report(4, uc - ua <= 0.10, buf);

  // 5. sweep-selected shuffle defense
  const auto srec = toy.run(toy.base(K::kDefenseSweep, av), "defense_sweep" + tag);
  const json& sel = srec.derived.at("selected");
  const double dc = sel.at("clean"), da = sel.at("attacked");
  const double und = srec.derived.at("undefended_attacked");
  std::snprintf(buf, sizeof(buf),
                "selected h1=%d h2=%d, K=10: defended clean %s, defended attacked %s, undefended attacked %s",
                sel.at("h1").get<int>(), sel.at("h2").get<int>(), pct(dc).c_str(), pct(da).c_str(),
                pct(und).c_str());
  report(5, dc - da <= 0.15 && da - und >= 0.50, buf);

  // 6. ensemble size
  auto ec = toy.base(K::kEnsembleSize, av);
  ec.defense.from_sweep = "defense_sweep" + tag;
  const auto erec = toy.run(ec, "ensemble_size" + tag);
  bool c6 = true;
  std::string detail;
  const double base_clean = erec.accuracy("K=10/clean"), base_att = erec.accuracy("K=10/attacked");
  for (int k : {10, 20, 100}) {
    const std::string p = "K=" + std::to_string(k) + "/";
    const double cl = erec.accuracy(p + "clean"), at = erec.accuracy(p + "attacked");
    c6 = c6 && cl - base_clean < 0.03 && at - base_att < 0.03;
    detail += p + "clean " + pct(cl) + " attacked " + pct(at) + (k == 100 ? "" : "; ");
  }
  report(6, c6, detail);

}

void toy_model_criteria(Toy& toy) {
  using K = h::ExperimentKind;
  char buf[512];
  // 10. gradient check on a trained model and a test video
  const int av = kAttackVariant;
  const auto m = vs::io::load_checkpoint(toy.ws.resolve(toy.model(av))).model;
  const auto ds = vs::io::load_dataset(toy.ws.resolve(toy.data(av)));
  const auto& item = ds.test.items.at(5);
  const auto fd = vs::test::finite_difference_check(m, item.video, item.label, 100, 0.5f, 2024);
  std::snprintf(buf, sizeof(buf),
                "max relative error %.2e over %d coordinates (%d ReLU-crossing draws replaced)",
                fd.max_rel_error, fd.coordinates, fd.kinks_skipped);
  report(10, fd.coordinates == 100 && fd.max_rel_error < 1e-2, buf);

  // 11. monotonicity trend on variant 3
  auto mc = toy.base(K::kMonotonicity, 3);
  mc.trials = kMonotonicityTrials;
  const auto mrec = toy.run(mc, "monotonicity_v3");
  const double rho = mrec.derived.at("spearman");
  const int bins = mrec.derived.at("surviving_bins");
  std::snprintf(buf, sizeof(buf), "Spearman %.3f over %d bins (%zu randomized records)", rho, bins,
                mrec.rows.size());
  report(11, rho > 0.0 && bins >= 4, buf, /*soft=*/true);

}

// ---------------------------------------------------------- exact criteria

/// Brute force: enumerate every (zero-padded) window position, test each
/// window's frame list for strict increase.
double brute_ratio(const std::vector<int>& order, int k, int s, int p) {
  const int n = static_cast<int>(order.size());
  int windows = 0, mono = 0;
  for (int start = -p; start + k <= n + p; start += s) {
    std::vector<int> frames;
    for (int j = start; j < start + k; ++j) {
      if (j >= 0 && j < n) frames.push_back(order[j]);
    }
    ++windows;
    bool inc = true;
    for (std::size_t i = 1; i < frames.size(); ++i) inc = inc && frames[i] > frames[i - 1];
    mono += inc ? 1 : 0;
  }
  return static_cast<double>(mono) / windows;
}

void criterion7() {
  std::vector<int> order{1, 2, 3, 4, 5};
  int perms = 0, mismatches = 0;
  do {
    ++perms;
    if (vs::analysis::monotonic_ratio(order, {3, 1, 1}) != brute_ratio(order, 3, 1, 1)) ++mismatches;
  } while (std::next_permutation(order.begin(), order.end()));
  const double worked = vs::analysis::monotonic_ratio({2, 3, 4, 1, 5}, {3, 1, 1});
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%d/%d permutations match brute force, [2,3,4,1,5] -> %.3f",
                perms - mismatches, perms, worked);
  report(7, perms == 120 && mismatches == 0 && worked == 0.6, buf);
}

void criterion8() {
  vs::Rng rng(8);
  const int runs = 10000;
  int violations = 0;
  std::string first;
  auto fail = [&](const std::string& m) {
    if (violations++ == 0) first = m;
  };
  for (int r = 0; r < runs; ++r) {
    const int t_len = std::array<int, 3>{8, 16, 32}[vs::uniform_int(rng, 0, 2)];
    const int h1 = vs::uniform_int(rng, 1, 16);
    const int h2 = vs::uniform_int(rng, 1, t_len);
    const vs::ShufflePlan plan = vs::draw_shuffle_plan(t_len, {h1, h2}, rng);  // terminates
    const auto& src = plan.provenance.source_of;
    if (static_cast<int>(src.size()) != t_len) fail("provenance length");
    int expect_dest = 1;
    for (const auto& b : plan.blocks) {
      if (b.dest != expect_dest) fail("blocks do not tile the output");
      expect_dest += b.length;
      const int lo = std::max(b.dest - h1, 1), hi = std::min(b.dest + h1, t_len - h2 + 1);
      const bool has_candidate = [&] {
        for (int c = lo; c <= hi; ++c) {
          if (c != b.dest) return true;
        }
        return false;
      }();
      if (std::abs(b.source - b.dest) > h1) fail("block start displaced by more than h1");
      if (has_candidate) {
        if (b.source == b.dest) fail("block copied in place although another start was allowed");
        if (b.source + h2 - 1 > t_len) fail("copied block runs past T");
      } else if (b.source != b.dest) {
        fail("degenerate block is not copied in place");
      }
      for (int j = 0; j < b.length; ++j) {
        if (src[b.dest - 1 + j] != b.source + j) fail("block is not contiguous");
      }
    }
    if (expect_dest != t_len + 1) fail("blocks do not cover T");
    for (int t = 1; t <= t_len; ++t) {
      if (src[t - 1] < 1 || src[t - 1] > t_len) fail("provenance outside [1,T]");
    }
    if (h2 == t_len) {
      for (int t = 1; t <= t_len; ++t) {
        if (src[t - 1] != t) fail("h2 = T is not the identity");
      }
    }
  }
  report(8, violations == 0,
         std::to_string(runs) + " random shuffles, " + std::to_string(violations) + " violations" +
             (first.empty() ? "" : " (first: " + first + ")"));
}

void criterion9() {
  using vs::attacks::AttackMethod;
  const auto spec = vs::test::small_spec();
  const vs::Predictor m = vs::build_model(spec, 9);
  vs::attacks::AttackConfig cfg;
  cfg.iterations = 10;
  cfg.eot_samples = 2;
  vs::defense::DefenseConfig d;
  d.shuffle = {1, 1};
  const auto sampler = vs::defense::make_sampler(d);
  long checks = 0;
  int violations = 0;
  std::string first;
  for (int i = 0; i < 50; ++i) {
    vs::Video v = vs::test::random_video(spec.input_shape, 900 + i);
    if (i % 5 == 0) {  // saturated pixels exercise the range clip
      for (std::size_t j = 0; j < v.size(); j += 3) v[j] = (j / 3) % 2 ? 255.0f : 0.0f;
    }
    const int label = i % 8;
    for (AttackMethod method : {AttackMethod::kIfgsm, AttackMethod::kStatic, AttackMethod::kFramewise,
                                AttackMethod::kOneFrame, AttackMethod::kFlicker, AttackMethod::kEot}) {
      const auto kind = [&] {
        switch (method) {
          case AttackMethod::kStatic: return vs::attacks::PerturbationKind::kStatic;
          case AttackMethod::kOneFrame: return vs::attacks::PerturbationKind::kOneFrame;
          case AttackMethod::kFlicker: return vs::attacks::PerturbationKind::kFlicker;
          default: return vs::attacks::PerturbationKind::kFull;
        }
      }();
      int frame = 0;
      const auto hook = [&](int it, const vs::Tensor& delta) {
        if (method == AttackMethod::kOneFrame || method == AttackMethod::kFramewise) {
          if (it == 1) ++frame;  // one-frame runs restart their iteration count per frame
        }
        std::optional<int> idx;
        if (method == AttackMethod::kOneFrame || method == AttackMethod::kFramewise) idx = frame;
        const vs::attacks::Perturbation p{delta,
                                          method == AttackMethod::kFramewise
                                              ? vs::attacks::PerturbationKind::kOneFrame
                                              : kind,
                                          idx};
        const std::string msg = vs::attacks::check_invariants(p, v, cfg.epsilon);
        ++checks;
        if (!msg.empty() && violations++ == 0) {
          first = std::string(vs::attacks::method_name(method)) + ": " + msg;
        }
      };
      const auto p = vs::attacks::run_attack(m, method, v, label, cfg, sampler, hook);
      const std::string msg = vs::attacks::check_invariants(p, v, cfg.epsilon);
      ++checks;
      if (!msg.empty() && violations++ == 0) first = std::string(vs::attacks::method_name(method)) + ": " + msg;
    }
  }
  report(9, violations == 0,
         "50 videos x 6 attacks, " + std::to_string(checks) + " per-iteration checks, " +
             std::to_string(violations) + " violations" + (first.empty() ? "" : " (first: " + first + ")"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  fs::create_directories(work);
  std::printf("acceptance work directory: %s\n", fs::absolute(work).string().c_str());
  try {
    Toy toy{h::Workspace{work}, Timings(work / "timings.json")};
    toy_criteria(toy);
    criterion7();
    criterion8();
    criterion9();
    toy_model_criteria(toy);
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance run aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d hard criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
