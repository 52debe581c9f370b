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

#ifndef VIDSHUFFLE_TRANSFORMS_HPP_
#define VIDSHUFFLE_TRANSFORMS_HPP_

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vidshuffle/random.hpp"
#include "vidshuffle/tensor.hpp"

namespace vidshuffle {

/// source_of[t-1] is the 1-based index of the input frame that ended up at
/// output position t.
struct FrameProvenance {
  std::vector<int> source_of;

  static FrameProvenance identity(int frames) {
    FrameProvenance p;
    p.source_of.resize(frames);
    std::iota(p.source_of.begin(), p.source_of.end(), 1);
    return p;
  }
  int size() const { return static_cast<int>(source_of.size()); }
  bool is_permutation() const {
    std::vector<int> s = source_of;
    std::sort(s.begin(), s.end());
    for (int i = 0; i < size(); ++i) {
      if (s[i] != i + 1) return false;
    }
    return true;
  }
  friend bool operator==(const FrameProvenance&, const FrameProvenance&) = default;
};

struct TransformedVideo {
  Video video;
  FrameProvenance provenance;
};

struct ChunkConfig {
  int chunk = 1;
};

struct ShuffleConfig {
  int h1 = 1;
  int h2 = 1;

  void validate(int frames) const {
    if (h1 < 1) throw std::invalid_argument("ShuffleConfig: h1 must be >= 1");
    if (h2 < 1 || h2 > frames) {
      throw std::invalid_argument("ShuffleConfig: h2=" + std::to_string(h2) + " must lie in [1," +
                                  std::to_string(frames) + "]");
    }
  }
};

/// Builds the video whose frame t is input frame provenance.source_of[t].
inline Video apply_provenance(const Video& in, const FrameProvenance& prov) {
  const int frames = in.shape().t;
  if (prov.size() != frames) {
    throw std::invalid_argument("provenance length " + std::to_string(prov.size()) +
                                " does not match T=" + std::to_string(frames));
  }
  Video out(in.shape());
  for (int t = 0; t < frames; ++t) {
    const int src = prov.source_of[t];
    if (src < 1 || src > frames) throw std::out_of_range("provenance entry out of [1,T]");
    const auto f = in.frame(src - 1);
    std::copy(f.begin(), f.end(), out.frame(t).begin());
  }
  return out;
}

/// Transpose of apply_provenance for gradients: the gradient at output
/// position t accumulates onto input frame source_of[t].
inline Gradient scatter_provenance(const Gradient& out_grad, const FrameProvenance& prov) {
  Gradient in(out_grad.shape());
  for (int t = 0; t < prov.size(); ++t) {
    const auto g = out_grad.frame(t);
    auto dst = in.frame(prov.source_of[t] - 1);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
  return in;
}

/// Replaces every frame with frame `index` (1-based).
inline TransformedVideo uniformize(const Video& video, int index) {
  const int frames = video.shape().t;
  if (index < 1 || index > frames) {
    throw std::out_of_range("uniformize: frame index " + std::to_string(index) + " not in [1," +
                            std::to_string(frames) + "]");
  }
  FrameProvenance p;
  p.source_of.assign(frames, index);
  return {apply_provenance(video, p), std::move(p)};
}

/// Permutes frames uniformly at random within disjoint consecutive chunks of
/// `cfg.chunk` frames. A trailing partial chunk is permuted within itself.
inline FrameProvenance draw_chunk_permutation(int frames, ChunkConfig cfg, Rng& rng) {
  if (cfg.chunk < 1) throw std::invalid_argument("chunk size must be >= 1");
  FrameProvenance p = FrameProvenance::identity(frames);
  for (int begin = 0; begin < frames; begin += cfg.chunk) {
    const int end = std::min(frames, begin + cfg.chunk);
    std::shuffle(p.source_of.begin() + begin, p.source_of.begin() + end, rng);
  }
  return p;
}

inline TransformedVideo chunk_randomize(const Video& video, ChunkConfig cfg, Rng& rng) {
  FrameProvenance p = draw_chunk_permutation(video.shape().t, cfg, rng);
  return {apply_provenance(video, p), std::move(p)};
}

/// Permutes rows within groups of `cfg.chunk` rows; the same row order is
/// used for every frame.
inline std::vector<int> draw_row_permutation(int rows, ChunkConfig cfg, Rng& rng) {
  if (cfg.chunk < 1) throw std::invalid_argument("chunk size must be >= 1");
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  for (int begin = 0; begin < rows; begin += cfg.chunk) {
    const int end = std::min(rows, begin + cfg.chunk);
    std::shuffle(order.begin() + begin, order.begin() + end, rng);
  }
  return order;
}

inline Video apply_row_permutation(const Video& video, const std::vector<int>& row_source) {
  const Shape s = video.shape();
  Video out(s);
  const std::size_t row_len = static_cast<std::size_t>(s.w) * s.c;
  for (int t = 0; t < s.t; ++t) {
    for (int y = 0; y < s.h; ++y) {
      const float* src = video.data() + video.index(t, row_source[y], 0, 0);
      std::copy(src, src + row_len, out.data() + out.index(t, y, 0, 0));
    }
  }
  return out;
}

inline Video row_randomize(const Video& video, ChunkConfig cfg, Rng& rng) {
  return apply_row_permutation(video, draw_row_permutation(video.shape().h, cfg, rng));
}

/// One copied block of a temporal shuffle: output positions
/// [dest, dest+length) take input frames [source, source+length), 1-based.
struct ShuffleBlock {
  int dest = 1;
  int source = 1;
  int length = 1;
};

struct ShufflePlan {
  std::vector<ShuffleBlock> blocks;
  FrameProvenance provenance;
};

/// Temporal shuffling: for block starts t = 1, 1+h2, 1+2*h2, ... pick a
/// source start t' uniformly from [max(t-h1,1), min(t+h1, T-h2+1)] \ {t} and
/// copy h2 consecutive input frames from t'. The final block is truncated at
/// T. When the candidate set is empty the block is copied in place (t' = t).
inline ShufflePlan draw_shuffle_plan(int frames, ShuffleConfig cfg, Rng& rng) {
  cfg.validate(frames);
  ShufflePlan plan;
  plan.provenance.source_of.assign(frames, 0);
  for (int t = 1; t <= frames; t += cfg.h2) {
    const int lo = std::max(t - cfg.h1, 1);
    const int hi = std::min(t + cfg.h1, frames - cfg.h2 + 1);
    int count = hi >= lo ? hi - lo + 1 : 0;
    if (count > 0 && t >= lo && t <= hi) --count;
    int src = t;
    if (count > 0) {
      src = lo + uniform_int(rng, 0, count - 1);
      if (src >= t && t >= lo && t <= hi) ++src;  // skip t itself
    }
    const int len = std::min(cfg.h2, frames - t + 1);
    plan.blocks.push_back({t, src, len});
    for (int j = 0; j < len; ++j) plan.provenance.source_of[t - 1 + j] = src + j;
  }
  return plan;
}

inline TransformedVideo temporal_shuffle(const Video& video, ShuffleConfig cfg, Rng& rng) {
  ShufflePlan plan = draw_shuffle_plan(video.shape().t, cfg, rng);
  return {apply_provenance(video, plan.provenance), std::move(plan.provenance)};
}

}  // namespace vidshuffle

#endif  // VIDSHUFFLE_TRANSFORMS_HPP_
