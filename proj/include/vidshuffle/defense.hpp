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

#ifndef VIDSHUFFLE_DEFENSE_HPP_
#define VIDSHUFFLE_DEFENSE_HPP_

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vidshuffle/attacks.hpp"
#include "vidshuffle/model.hpp"
#include "vidshuffle/random.hpp"
#include "vidshuffle/transforms.hpp"

namespace vidshuffle::defense {

enum class DefenseMethod { kShuffle, kSmoothing, kShufflePlusSmoothing };

inline const char* method_name(DefenseMethod m) {
  switch (m) {
    case DefenseMethod::kShuffle: return "shuffle";
    case DefenseMethod::kSmoothing: return "rs";
    default: return "shuffle+rs";
  }
}

inline DefenseMethod parse_method(const std::string& s) {
  if (s == "shuffle") return DefenseMethod::kShuffle;
  if (s == "rs" || s == "smoothing") return DefenseMethod::kSmoothing;
  if (s == "shuffle+rs" || s == "shuffle_plus_smoothing") return DefenseMethod::kShufflePlusSmoothing;
  throw std::invalid_argument("unknown defense method '" + s + "'");
}

struct DefenseConfig {
  DefenseMethod method = DefenseMethod::kShuffle;
  ShuffleConfig shuffle{};
  /// Gaussian noise std in pixel levels.
  float sigma = 12.0f;
  int ensemble_size = 10;

  bool uses_shuffle() const { return method != DefenseMethod::kSmoothing; }
  bool uses_noise() const { return method != DefenseMethod::kShuffle; }

  void validate(int frames) const {
    if (ensemble_size < 1) throw std::invalid_argument("DefenseConfig: ensemble size must be >= 1");
    if (!(sigma >= 0.0f)) throw std::invalid_argument("DefenseConfig: sigma must be >= 0");
    if (uses_shuffle()) shuffle.validate(frames);
  }
};

struct EnsembleMember {
  Prediction prediction;
  /// Identity for smoothing-only members.
  FrameProvenance provenance;
  /// Seed of the noise draw; 0 when the member adds no noise.
  std::uint64_t noise_seed = 0;
};

struct EnsembleResult {
  std::vector<EnsembleMember> members;
  /// Scores are vote fractions; the label follows the vote rule.
  Prediction aggregate;
  std::vector<int> vote_counts;
};

/// Majority vote over member labels. Ties go to the class with the larger
/// summed member probability, then to the lowest index.
inline EnsembleResult aggregate(std::vector<EnsembleMember> members, int num_classes) {
  if (members.empty()) throw std::invalid_argument("aggregate: no members");
  EnsembleResult r;
  r.vote_counts.assign(num_classes, 0);
  std::vector<double> prob_sum(num_classes, 0.0);
  for (const auto& m : members) {
    ++r.vote_counts.at(m.prediction.label);
    for (int c = 0; c < num_classes; ++c) prob_sum[c] += m.prediction.scores.at(c);
  }
  int best = 0;
  for (int c = 1; c < num_classes; ++c) {
    if (r.vote_counts[c] > r.vote_counts[best] ||
        (r.vote_counts[c] == r.vote_counts[best] && prob_sum[c] > prob_sum[best])) {
      best = c;
    }
  }
  r.aggregate.label = best;
  r.aggregate.scores.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    r.aggregate.scores[c] = static_cast<double>(r.vote_counts[c]) / members.size();
  }
  r.members = std::move(members);
  return r;
}

/// Adds N(0, sigma^2) noise per element and clips to [0,255].
inline Video add_gaussian_noise(const Video& v, float sigma, std::uint64_t seed) {
  Video out = v;
  if (sigma == 0.0f) return out;
  Rng rng(seed);
  std::normal_distribution<float> nd(0.0f, sigma);
  for (float& x : out.vec()) x = std::clamp(x + nd(rng), 0.0f, 255.0f);
  return out;
}

namespace detail {

// Member k draws its shuffle from stream (base, k, 0) and its noise from
// (base, k, 1); combined and single-method ensembles therefore share draws.
inline Rng shuffle_stream(std::uint64_t base, int k) {
  return make_rng(base, {static_cast<std::uint64_t>(k), 0});
}
inline std::uint64_t noise_seed(std::uint64_t base, int k) {
  return derive_seed(base, {static_cast<std::uint64_t>(k), 1}) | 1ULL;
}

template <Classifier M>
EnsembleResult run_ensemble(const M& model, const Video& video, const DefenseConfig& cfg,
                            bool shuffle, bool noise, Rng& rng) {
  cfg.validate(video.shape().t);
  const std::uint64_t base = rng();
  std::vector<EnsembleMember> members;
  members.reserve(cfg.ensemble_size);
  for (int k = 0; k < cfg.ensemble_size; ++k) {
    EnsembleMember m;
    Video v = video;
    if (shuffle) {
      Rng srng = shuffle_stream(base, k);
      TransformedVideo tv = temporal_shuffle(video, cfg.shuffle, srng);
      v = std::move(tv.video);
      m.provenance = std::move(tv.provenance);
    } else {
      m.provenance = FrameProvenance::identity(video.shape().t);
    }
    if (noise) {
      m.noise_seed = noise_seed(base, k);
      v = add_gaussian_noise(v, cfg.sigma, m.noise_seed);
    }
    m.prediction = model.predict(v);
    members.push_back(std::move(m));
  }
  const int classes = static_cast<int>(members.front().prediction.scores.size());
  return aggregate(std::move(members), classes);
}

}  // namespace detail

/// K independent temporal shuffles of the input, each classified, then voted.
template <Classifier M>
EnsembleResult shuffle_ensemble_predict(const M& model, const Video& video,
                                        const DefenseConfig& cfg, Rng& rng) {
  return detail::run_ensemble(model, video, cfg, true, false, rng);
}

/// K Gaussian-noise copies of the input, each classified, then voted.
template <Classifier M>
EnsembleResult randomized_smoothing_predict(const M& model, const Video& video,
                                            const DefenseConfig& cfg, Rng& rng) {
  return detail::run_ensemble(model, video, cfg, false, true, rng);
}

/// Each member is shuffled and then noised before classification.
template <Classifier M>
EnsembleResult combined_predict(const M& model, const Video& video, const DefenseConfig& cfg,
                                Rng& rng) {
  return detail::run_ensemble(model, video, cfg, true, true, rng);
}

template <Classifier M>
EnsembleResult defend(const M& model, const Video& video, const DefenseConfig& cfg, Rng& rng) {
  switch (cfg.method) {
    case DefenseMethod::kShuffle: return shuffle_ensemble_predict(model, video, cfg, rng);
    case DefenseMethod::kSmoothing: return randomized_smoothing_predict(model, video, cfg, rng);
    default: return combined_predict(model, video, cfg, rng);
  }
}

/// One random draw of the defense's input transform, for EOT.
inline attacks::DefenseSampler make_sampler(const DefenseConfig& cfg) {
  return [cfg](const Video& v, Rng& rng) -> TransformedVideo {
    TransformedVideo tv{v, FrameProvenance::identity(v.shape().t)};
    if (cfg.uses_shuffle()) tv = temporal_shuffle(v, cfg.shuffle, rng);
    if (cfg.uses_noise()) tv.video = add_gaussian_noise(tv.video, cfg.sigma, rng());
    return tv;
  };
}

}  // namespace vidshuffle::defense

#endif  // VIDSHUFFLE_DEFENSE_HPP_
