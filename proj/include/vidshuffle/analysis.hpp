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

#ifndef VIDSHUFFLE_ANALYSIS_HPP_
#define VIDSHUFFLE_ANALYSIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vidshuffle/random.hpp"
#include "vidshuffle/toydata.hpp"
#include "vidshuffle/transforms.hpp"

namespace vidshuffle::analysis {

/// Temporal kernel geometry of a network's first convolution.
struct TemporalWindowSpec {
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  void validate() const {
    if (kernel < 1 || stride < 1 || padding < 0) {
      throw std::invalid_argument("TemporalWindowSpec: need kernel>=1, stride>=1, padding>=0");
    }
  }
};

/// Frame indices seen by each temporal kernel position. Padded slots are
/// dropped, so border windows can be shorter than the kernel.
inline std::vector<std::vector<int>> receptive_windows(const std::vector<int>& order,
                                                       const TemporalWindowSpec& w) {
  w.validate();
  const int frames = static_cast<int>(order.size());
  if (frames < 1) throw std::invalid_argument("receptive_windows: empty order");
  const int padded = frames + 2 * w.padding;
  std::vector<std::vector<int>> windows;
  for (int start = 0; start + w.kernel <= padded; start += w.stride) {
    std::vector<int> win;
    for (int j = start; j < start + w.kernel; ++j) {
      const int idx = j - w.padding;
      if (idx >= 0 && idx < frames) win.push_back(order[idx]);
    }
    windows.push_back(std::move(win));
  }
  return windows;
}

/// Fraction of receptive windows whose frame indices are strictly
/// increasing. Windows of length <= 1 count as monotonic.
inline double monotonic_ratio(const std::vector<int>& order, const TemporalWindowSpec& w) {
  const auto windows = receptive_windows(order, w);
  if (windows.empty()) return 1.0;
  int mono = 0;
  for (const auto& win : windows) {
    if (std::adjacent_find(win.begin(), win.end(), [](int a, int b) { return a >= b; }) ==
        win.end()) {
      ++mono;
    }
  }
  return static_cast<double>(mono) / static_cast<double>(windows.size());
}

inline int expected_window_count(int frames, const TemporalWindowSpec& w) {
  const int span = frames + 2 * w.padding - w.kernel;
  return span < 0 ? 0 : span / w.stride + 1;
}

/// Per (video, trial) outcome.
struct VideoRecord {
  int video_id = 0;
  int trial = 0;
  int label = 0;
  int predicted = 0;
  bool correct = false;
  FrameProvenance provenance;
  double monotonic_ratio = 1.0;
};

struct AccuracyResult {
  double accuracy = 0.0;
  std::vector<VideoRecord> records;
};

inline double mean_correct(const std::vector<VideoRecord>& records) {
  if (records.empty()) return 0.0;
  const auto hits = std::count_if(records.begin(), records.end(),
                                  [](const VideoRecord& r) { return r.correct; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

/// Applies `transform(video, rng) -> TransformedVideo` (or none) once per
/// trial per video, classifies with `classify(video, rng) -> int` and
/// collects per-trial records. Each (video, trial) pair gets its own rng
/// stream derived from `seed`, so results do not depend on evaluation order.
template <typename Classify, typename Transform>
AccuracyResult evaluate_accuracy(Classify&& classify, const toydata::LabeledDataset& ds,
                                 Transform&& transform, int trials, std::uint64_t seed,
                                 const TemporalWindowSpec& window = {}) {
  if (ds.items.empty()) throw std::invalid_argument("evaluate_accuracy: empty dataset");
  if (trials < 1) throw std::invalid_argument("evaluate_accuracy: trials must be >= 1");
  AccuracyResult out;
  out.records.reserve(ds.items.size() * trials);
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& item = ds.items[i];
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng = make_rng(seed, {i, static_cast<std::uint64_t>(trial)});
      VideoRecord rec;
      rec.video_id = static_cast<int>(i);
      rec.trial = trial;
      rec.label = item.label;
      TransformedVideo tv = transform(item.video, rng);
      rec.provenance = std::move(tv.provenance);
      rec.monotonic_ratio = monotonic_ratio(rec.provenance.source_of, window);
      rec.predicted = classify(tv.video, rng);
      rec.correct = rec.predicted == rec.label;
      out.records.push_back(std::move(rec));
    }
  }
  out.accuracy = mean_correct(out.records);
  return out;
}

/// Transform that leaves the video untouched.
struct IdentityTransform {
  TransformedVideo operator()(const Video& v, Rng&) const {
    return {v, FrameProvenance::identity(v.shape().t)};
  }
};

template <typename Classify>
AccuracyResult evaluate_accuracy(Classify&& classify, const toydata::LabeledDataset& ds,
                                 int trials, std::uint64_t seed) {
  return evaluate_accuracy(std::forward<Classify>(classify), ds, IdentityTransform{}, trials, seed);
}

struct RatioBin {
  double ratio_value = 0.0;
  int video_count = 0;
  double accuracy = 0.0;
};

/// Groups records by exact ratio value (ratios are k/n fractions, so
/// equality after rounding to 1e-9 is exact enough) and drops sparse bins.
inline std::vector<RatioBin> bin_accuracy_by_ratio(const std::vector<VideoRecord>& records,
                                                   int min_count = 30) {
  std::map<std::int64_t, std::pair<int, int>> groups;  // key -> (count, correct)
  for (const auto& r : records) {
    const auto key = static_cast<std::int64_t>(std::llround(r.monotonic_ratio * 1e9));
    auto& g = groups[key];
    ++g.first;
    g.second += r.correct ? 1 : 0;
  }
  std::vector<RatioBin> bins;
  for (const auto& [key, g] : groups) {
    if (g.first < min_count) continue;
    bins.push_back({static_cast<double>(key) * 1e-9, g.first,
                    static_cast<double>(g.second) / g.first});
  }
  return bins;
}

/// Recomputes ratios for records under a different window geometry.
inline void assign_ratios(std::vector<VideoRecord>& records, const TemporalWindowSpec& w) {
  for (auto& r : records) r.monotonic_ratio = monotonic_ratio(r.provenance.source_of, w);
}

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

/// Spearman rank correlation (Pearson on average ranks). Returns 0 for
/// fewer than two points or zero variance.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace vidshuffle::analysis

#endif  // VIDSHUFFLE_ANALYSIS_HPP_
