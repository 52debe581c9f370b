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

#ifndef VIDSHUFFLE_TOYDATA_HPP_
#define VIDSHUFFLE_TOYDATA_HPP_

// Synthetic eight-class moving-object clips. Each class is defined by some
// subset of {background texture, object shape, motion direction}:
//   variant 1: background, object and direction all fixed per class
//   variant 2: object and direction fixed, background random
//   variant 3: direction fixed, background and object random

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "vidshuffle/random.hpp"
#include "vidshuffle/tensor.hpp"

namespace vidshuffle::toydata {

inline constexpr int kNumPatterns = 8;
inline constexpr int kChannels = 3;

struct Point {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

/// Unit step per frame for the 8 compass directions, 45 degrees apart,
/// counter-clockwise from east. Image y grows downward.
inline constexpr std::array<Point, 8> kDirections = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1},
}};

inline constexpr int kMinSpeed = 3;
inline constexpr int kMaxSpeed = 5;

struct ToySpec {
  int variant = 1;
  int num_classes = 8;
  int frames_per_video = 8;
  int videos_total = 1600;
  int frame_size = 64;
  int object_size = 16;
  /// Scales every palette color's distance from mid-gray.
  float contrast = 1.0f;
  int speed_min = kMinSpeed;
  int speed_max = kMaxSpeed;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ToySpec: " + m); };
    if (variant < 1 || variant > 3) fail("variant must be 1, 2 or 3");
    if (num_classes != kNumPatterns) fail("num_classes must be 8");
    if (frames_per_video < 1) fail("frames_per_video must be >= 1");
    if (videos_total <= 0 || videos_total % num_classes != 0) {
      fail("videos_total must be a positive multiple of num_classes");
    }
    if (object_size < 4 || object_size > frame_size) fail("object_size out of range");
    if (!(contrast > 0.0f && contrast <= 1.0f)) fail("contrast must lie in (0,1]");
    if (speed_min < kMinSpeed || speed_max > kMaxSpeed || speed_min > speed_max) {
      fail("speed range must lie within [3,5]");
    }
  }
};

struct VideoMeta {
  int bg_id = 0;
  int obj_id = 0;
  int direction_id = 0;
  int speed = 0;
  Point start{};
  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

struct LabeledVideo {
  Video video;
  int label = 0;
  VideoMeta meta;
  /// Index of the item in the generated dataset; survives splitting.
  int id = 0;
};

enum class Split { kTrain, kTest, kAll };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    default: return "all";
  }
}

struct LabeledDataset {
  std::vector<LabeledVideo> items;
  Split split = Split::kAll;
  int num_classes = kNumPatterns;

  std::size_t size() const { return items.size(); }
};

struct RenderConfig {
  int frame_size = 64;
  int object_size = 16;
  float contrast = 1.0f;
};

namespace detail {

struct Rgb {
  float r, g, b;
};

// Two endpoint colors per background texture; stripes interpolate them.
inline constexpr std::array<std::array<Rgb, 2>, 8> kBackgroundColors = {{
    {{{60, 90, 140}, {150, 170, 200}}},
    {{{120, 70, 50}, {200, 160, 110}}},
    {{{50, 110, 60}, {140, 190, 120}}},
    {{{100, 100, 100}, {190, 190, 190}}},
    {{{110, 60, 120}, {190, 150, 200}}},
    {{{130, 120, 40}, {210, 200, 120}}},
    {{{40, 110, 120}, {120, 200, 200}}},
    {{{140, 70, 90}, {210, 150, 160}}},
}};

// Stripe orientation (degrees) and period (pixels).
inline constexpr std::array<std::array<float, 2>, 8> kBackgroundStripes = {{
    {0.0f, 8.0f}, {45.0f, 8.0f}, {90.0f, 8.0f}, {135.0f, 8.0f},
    {0.0f, 16.0f}, {45.0f, 16.0f}, {90.0f, 16.0f}, {135.0f, 16.0f},
}};

inline constexpr std::array<Rgb, 8> kObjectColors = {{
    {255, 20, 20}, {20, 230, 20}, {20, 40, 255}, {255, 240, 0},
    {255, 0, 255}, {0, 255, 255}, {255, 255, 255}, {10, 10, 10},
}};

// Shape masks over the unit square [0,1)^2 sampled at pixel centres.
inline bool object_mask(int obj_id, int px, int py, int size) {
  const float u = (px + 0.5f) / size * 2.0f - 1.0f;  // [-1,1]
  const float v = (py + 0.5f) / size * 2.0f - 1.0f;
  const float au = std::fabs(u), av = std::fabs(v);
  switch (obj_id) {
    case 0: return au <= 0.8f && av <= 0.8f;                    // filled square
    case 1: return u * u + v * v <= 0.8f;                       // disc
    case 2: return v >= -0.85f && v <= 0.85f && au <= (v + 0.85f) * 0.55f;  // triangle
    case 3: return au + av <= 0.95f;                            // diamond
    case 4: return au <= 0.3f || av <= 0.3f;                    // plus
    case 5: {                                                    // ring
      const float r2 = u * u + v * v;
      return r2 <= 0.9f && r2 >= 0.35f;
    }
    case 6: return std::fabs(au - av) <= 0.3f;                  // diagonal cross
    case 7: return (au <= 0.9f && av <= 0.9f) && (au >= 0.5f || av >= 0.5f);  // hollow square
    default: return false;
  }
}

}  // namespace detail

/// Draws background `bg_id` and composites object `obj_id` with its top-left
/// corner at `pos`. The object must lie fully inside the frame.
inline Tensor render_frame(int bg_id, int obj_id, Point pos, const RenderConfig& cfg = {}) {
  if (bg_id < 0 || bg_id >= kNumPatterns) {
    throw std::out_of_range("render_frame: bg_id " + std::to_string(bg_id) + " not in [0,8)");
  }
  if (obj_id < 0 || obj_id >= kNumPatterns) {
    throw std::out_of_range("render_frame: obj_id " + std::to_string(obj_id) + " not in [0,8)");
  }
  const int s = cfg.frame_size;
  const int o = cfg.object_size;
  if (pos.x < 0 || pos.x + o > s) {
    throw std::out_of_range("render_frame: object x=" + std::to_string(pos.x) +
                            " leaves the frame (valid range [0," + std::to_string(s - o) + "])");
  }
  if (pos.y < 0 || pos.y + o > s) {
    throw std::out_of_range("render_frame: object y=" + std::to_string(pos.y) +
                            " leaves the frame (valid range [0," + std::to_string(s - o) + "])");
  }
  Tensor frame(Shape{1, s, s, kChannels});
  const auto tone = [&](float c) { return std::round(128.0f + cfg.contrast * (c - 128.0f)); };
  const auto& cols = detail::kBackgroundColors[bg_id];
  const float theta = detail::kBackgroundStripes[bg_id][0] * std::numbers::pi_v<float> / 180.0f;
  const float period = detail::kBackgroundStripes[bg_id][1];
  const float ct = std::cos(theta), st = std::sin(theta);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const float phase = (x * ct + y * st) / period;
      const float a = 0.5f + 0.5f * std::sin(2.0f * std::numbers::pi_v<float> * phase);
      frame(0, y, x, 0) = tone(cols[0].r + a * (cols[1].r - cols[0].r));
      frame(0, y, x, 1) = tone(cols[0].g + a * (cols[1].g - cols[0].g));
      frame(0, y, x, 2) = tone(cols[0].b + a * (cols[1].b - cols[0].b));
    }
  }
  const auto& oc = detail::kObjectColors[obj_id];
  for (int py = 0; py < o; ++py) {
    for (int px = 0; px < o; ++px) {
      if (!detail::object_mask(obj_id, px, py, o)) continue;
      frame(0, pos.y + py, pos.x + px, 0) = tone(oc.r);
      frame(0, pos.y + py, pos.x + px, 1) = tone(oc.g);
      frame(0, pos.y + py, pos.x + px, 2) = tone(oc.b);
    }
  }
  return frame;
}

/// Object position at frame t (0-based) of a constant-velocity trajectory.
inline Point trajectory_point(Point start, int direction_id, int speed, int t) {
  const Point d = kDirections.at(direction_id);
  return {start.x + d.x * speed * t, start.y + d.y * speed * t};
}

inline void check_speed(int speed) {
  if (speed < kMinSpeed || speed > kMaxSpeed) {
    throw std::invalid_argument("speed " + std::to_string(speed) + " px/frame outside [3,5]");
  }
}

/// Samples a start position uniformly from the region where all T positions
/// keep the object inside the frame.
inline Point sample_start(int direction_id, int speed, int frames, Rng& rng,
                          const RenderConfig& cfg = {}) {
  if (direction_id < 0 || direction_id >= 8) {
    throw std::out_of_range("direction_id " + std::to_string(direction_id) + " not in [0,8)");
  }
  check_speed(speed);
  const Point d = kDirections[direction_id];
  const int max_pos = cfg.frame_size - cfg.object_size;
  const int travel = speed * (frames - 1);
  auto axis_range = [&](int step) -> std::pair<int, int> {
    if (step > 0) return {0, max_pos - travel};
    if (step < 0) return {travel, max_pos};
    return {0, max_pos};
  };
  const auto [x_lo, x_hi] = axis_range(d.x);
  const auto [y_lo, y_hi] = axis_range(d.y);
  if (x_lo > x_hi || y_lo > y_hi) {
    throw std::invalid_argument("no feasible start: speed " + std::to_string(speed) + " over " +
                                std::to_string(frames) + " frames exceeds the frame");
  }
  const int x = uniform_int(rng, x_lo, x_hi);
  const int y = uniform_int(rng, y_lo, y_hi);
  return {x, y};
}

inline Video render_video(int bg_id, int obj_id, Point start, int direction_id, int speed,
                          int frames, const RenderConfig& cfg = {}) {
  Video v(Shape{frames, cfg.frame_size, cfg.frame_size, kChannels});
  for (int t = 0; t < frames; ++t) {
    const Tensor f = render_frame(bg_id, obj_id, trajectory_point(start, direction_id, speed, t), cfg);
    std::copy(f.data(), f.data() + f.size(), v.frame(t).data());
  }
  return v;
}

inline Video generate_video(int bg_id, int obj_id, int direction_id, int speed, int frames, Rng& rng,
                            const RenderConfig& cfg = {}) {
  const Point start = sample_start(direction_id, speed, frames, rng, cfg);
  return render_video(bg_id, obj_id, start, direction_id, speed, frames, cfg);
}

/// Class/pattern assignment plus rendering for item `index` of a dataset.
inline LabeledVideo generate_item(const ToySpec& spec, int index) {
  Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(spec.variant),
                                 static_cast<std::uint64_t>(index)});
  const int label = index % spec.num_classes;
  VideoMeta m;
  m.direction_id = label;
  switch (spec.variant) {
    case 1:
      m.bg_id = label;
      m.obj_id = label;
      break;
    case 2:
      m.bg_id = uniform_int(rng, 0, kNumPatterns - 1);
      m.obj_id = label;
      break;
    default:
      m.bg_id = uniform_int(rng, 0, kNumPatterns - 1);
      m.obj_id = uniform_int(rng, 0, kNumPatterns - 1);
      break;
  }
  m.speed = uniform_int(rng, spec.speed_min, spec.speed_max);
  const RenderConfig rc{spec.frame_size, spec.object_size, spec.contrast};
  m.start = sample_start(m.direction_id, m.speed, spec.frames_per_video, rng, rc);
  LabeledVideo item;
  item.video = render_video(m.bg_id, m.obj_id, m.start, m.direction_id, m.speed,
                            spec.frames_per_video, rc);
  item.label = label;
  item.meta = m;
  item.id = index;
  return item;
}

/// Items are interleaved by class (item i has label i mod 8).
inline LabeledDataset generate_dataset(const ToySpec& spec) {
  spec.validate();
  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  ds.items.reserve(spec.videos_total);
  for (int i = 0; i < spec.videos_total; ++i) ds.items.push_back(generate_item(spec, i));
  return ds;
}

/// Stratified split: within each class, the first round(n_c * fraction)
/// items in dataset order go to train.
inline std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                               double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  }
  std::vector<int> per_class(ds.num_classes, 0);
  for (const auto& it : ds.items) {
    if (it.label < 0 || it.label >= ds.num_classes) throw std::out_of_range("label out of range");
    ++per_class[it.label];
  }
  std::vector<int> quota(ds.num_classes);
  for (int c = 0; c < ds.num_classes; ++c) {
    quota[c] = static_cast<int>(std::lround(per_class[c] * train_fraction));
  }
  LabeledDataset train, test;
  train.split = Split::kTrain;
  test.split = Split::kTest;
  train.num_classes = test.num_classes = ds.num_classes;
  std::vector<int> taken(ds.num_classes, 0);
  for (const auto& it : ds.items) {
    if (taken[it.label] < quota[it.label]) {
      ++taken[it.label];
      train.items.push_back(it);
    } else {
      test.items.push_back(it);
    }
  }
  if (train.items.empty() || test.items.empty()) {
    throw std::invalid_argument("train_fraction " + std::to_string(train_fraction) +
                                " yields an empty split");
  }
  return {std::move(train), std::move(test)};
}

}  // namespace vidshuffle::toydata

#endif  // VIDSHUFFLE_TOYDATA_HPP_
