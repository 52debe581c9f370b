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

#ifndef VIDSHUFFLE_ATTACKS_HPP_
#define VIDSHUFFLE_ATTACKS_HPP_

// L-infinity bounded perturbation attacks on video classifiers.
//
// All attacks follow the iterative fast gradient sign scheme: starting from a
// zero perturbation, take M steps of size eps/M along the sign of the loss
// gradient, after each step clip so that the perturbed video stays inside
// [0,255] and then clip the perturbation to [-eps, eps]. Variants differ in
// how the perturbation is parameterized (full, one shared frame, one frame,
// per-frame colour offsets) and, for EOT, in how the gradient is estimated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vidshuffle/model.hpp"
#include "vidshuffle/random.hpp"
#include "vidshuffle/tensor.hpp"
#include "vidshuffle/transforms.hpp"

namespace vidshuffle::attacks {

struct AttackConfig {
  /// Max-norm bound in pixel levels (4 levels == 4/255 in [0,1] units).
  float epsilon = 4.0f;
  int iterations = 30;
  /// Transform samples per gradient estimate (EOT only).
  int eot_samples = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon > 0.0f)) throw std::invalid_argument("AttackConfig: epsilon must be > 0");
    if (iterations < 1) throw std::invalid_argument("AttackConfig: iterations must be >= 1");
    if (eot_samples < 1) throw std::invalid_argument("AttackConfig: eot_samples must be >= 1");
  }
  float step() const { return epsilon / static_cast<float>(iterations); }
};

enum class PerturbationKind { kFull, kStatic, kFramewise, kOneFrame, kFlicker };

inline const char* kind_name(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::kFull: return "full";
    case PerturbationKind::kStatic: return "static";
    case PerturbationKind::kFramewise: return "framewise";
    case PerturbationKind::kOneFrame: return "one_frame";
    default: return "flicker";
  }
}

struct Perturbation {
  Tensor delta;
  PerturbationKind kind = PerturbationKind::kFull;
  /// 1-based frame carrying the perturbation (one-frame attacks only).
  std::optional<int> frame_index;

  Video apply(const Video& v) const { return add(v, delta); }
};

/// Called after every iteration with (iteration, current perturbation).
using IterationHook = std::function<void(int, const Tensor&)>;

inline float sgn(float g) { return static_cast<float>((g > 0.0f) - (g < 0.0f)); }

/// Describes the first violated invariant, or returns an empty string.
inline std::string check_invariants(const Perturbation& p, const Video& video, float epsilon) {
  const Shape s = video.shape();
  if (p.delta.shape() != s) return "shape mismatch";
  // Tolerance absorbs float rounding of x + delta at the pixel bounds.
  constexpr float kTol = 1e-3f;
  for (std::size_t i = 0; i < video.size(); ++i) {
    const float d = p.delta[i];
    if (!(std::fabs(d) <= epsilon + kTol)) return "max-norm exceeds epsilon";
    const float x = video[i] + d;
    if (x < -kTol || x > 255.0f + kTol) return "perturbed pixel outside [0,255]";
  }
  switch (p.kind) {
    case PerturbationKind::kStatic:
      for (int t = 1; t < s.t; ++t) {
        if (!std::equal(p.delta.frame(t).begin(), p.delta.frame(t).end(),
                        p.delta.frame(0).begin())) {
          return "static perturbation differs between frames";
        }
      }
      break;
    case PerturbationKind::kOneFrame: {
      if (!p.frame_index) return "one-frame perturbation without frame index";
      for (int t = 0; t < s.t; ++t) {
        if (t + 1 == *p.frame_index) continue;
        for (float d : p.delta.frame(t)) {
          if (d != 0.0f) return "one-frame perturbation touches another frame";
        }
      }
      break;
    }
    case PerturbationKind::kFlicker:
      for (int t = 0; t < s.t; ++t) {
        for (int y = 0; y < s.h; ++y) {
          for (int x = 0; x < s.w; ++x) {
            for (int c = 0; c < s.c; ++c) {
              if (p.delta(t, y, x, c) != p.delta(t, 0, 0, c)) {
                return "flicker perturbation varies over space";
              }
            }
          }
        }
      }
      break;
    default:
      break;
  }
  return {};
}

namespace detail {

/// Eq. (1)/(2) clip for one element: pixel range first, then the eps ball.
inline float clip(float d, float lo, float hi, float eps) {
  return std::clamp(std::clamp(d, lo, hi), -eps, eps);
}

template <DifferentiableClassifier M>
Gradient gradient_at(const M& model, const Video& video, const Tensor& delta, int label) {
  return model.loss_gradient(add(video, delta), label).grad;
}

}  // namespace detail

/// Full spatio-temporal I-FGSM (untargeted, ascends cross-entropy).
template <DifferentiableClassifier M>
Perturbation ifgsm(const M& model, const Video& video, int label, const AttackConfig& cfg,
                   const IterationHook& hook = {}) {
  cfg.validate();
  const float step = cfg.step();
  Perturbation p{Tensor(video.shape()), PerturbationKind::kFull, std::nullopt};
  for (int m = 1; m <= cfg.iterations; ++m) {
    const Gradient g = detail::gradient_at(model, video, p.delta, label);
    for (std::size_t i = 0; i < video.size(); ++i) {
      p.delta[i] = detail::clip(p.delta[i] + step * sgn(g[i]), -video[i], 255.0f - video[i],
                                cfg.epsilon);
    }
    if (hook) hook(m, p.delta);
  }
  return p;
}

/// One perturbation frame shared by all frames. The per-frame gradients are
/// summed (the chain rule for a shared parameter) before the sign step, and
/// the pixel-range clip uses the tightest bound over frames.
template <DifferentiableClassifier M>
Perturbation static_attack(const M& model, const Video& video, int label, const AttackConfig& cfg,
                           const IterationHook& hook = {}) {
  cfg.validate();
  const Shape s = video.shape();
  const std::size_t fs = s.frame_size();
  std::vector<float> lo(fs, -std::numeric_limits<float>::infinity());
  std::vector<float> hi(fs, std::numeric_limits<float>::infinity());
  for (int t = 0; t < s.t; ++t) {
    const auto f = video.frame(t);
    for (std::size_t j = 0; j < fs; ++j) {
      lo[j] = std::max(lo[j], -f[j]);
      hi[j] = std::min(hi[j], 255.0f - f[j]);
    }
  }
  const float step = cfg.step();
  std::vector<float> shared(fs, 0.0f);
  Perturbation p{Tensor(s), PerturbationKind::kStatic, std::nullopt};
  for (int m = 1; m <= cfg.iterations; ++m) {
    const Gradient g = detail::gradient_at(model, video, p.delta, label);
    std::vector<double> gsum(fs, 0.0);
    for (int t = 0; t < s.t; ++t) {
      const auto gf = g.frame(t);
      for (std::size_t j = 0; j < fs; ++j) gsum[j] += gf[j];
    }
    for (std::size_t j = 0; j < fs; ++j) {
      shared[j] = detail::clip(shared[j] + step * sgn(static_cast<float>(gsum[j])), lo[j], hi[j],
                               cfg.epsilon);
    }
    for (int t = 0; t < s.t; ++t) std::copy(shared.begin(), shared.end(), p.delta.frame(t).begin());
    if (hook) hook(m, p.delta);
  }
  return p;
}

/// I-FGSM restricted to frame `frame` (1-based); other frames stay zero.
template <DifferentiableClassifier M>
Perturbation one_frame_attack_at(const M& model, const Video& video, int label,
                                 const AttackConfig& cfg, int frame,
                                 const IterationHook& hook = {}) {
  cfg.validate();
  const Shape s = video.shape();
  if (frame < 1 || frame > s.t) {
    throw std::out_of_range("one_frame_attack: frame " + std::to_string(frame) + " not in [1," +
                            std::to_string(s.t) + "]");
  }
  const float step = cfg.step();
  Perturbation p{Tensor(s), PerturbationKind::kOneFrame, frame};
  const auto x = video.frame(frame - 1);
  for (int m = 1; m <= cfg.iterations; ++m) {
    const Gradient g = detail::gradient_at(model, video, p.delta, label);
    const auto gf = g.frame(frame - 1);
    auto d = p.delta.frame(frame - 1);
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] = detail::clip(d[j] + step * sgn(gf[j]), -x[j], 255.0f - x[j], cfg.epsilon);
    }
    if (hook) hook(m, p.delta);
  }
  return p;
}

/// Loss and misclassification of `video + delta`.
template <Classifier M>
std::pair<double, bool> outcome(const M& model, const Video& video, const Tensor& delta,
                                int label) {
  const Prediction pr = model.predict(add(video, delta));
  const double loss = -std::log(std::max(pr.scores.at(label), std::numeric_limits<double>::min()));
  return {loss, pr.label != label};
}

/// One-frame attack. With a frame given, attacks that frame. Otherwise
/// frames 1..T are tried in order; the first that fools the model wins, and
/// if none does, the frame with the highest final loss (earliest on ties).
template <DifferentiableClassifier M>
Perturbation one_frame_attack(const M& model, const Video& video, int label,
                              const AttackConfig& cfg, std::optional<int> frame = std::nullopt,
                              const IterationHook& hook = {}) {
  if (frame) return one_frame_attack_at(model, video, label, cfg, *frame, hook);
  std::optional<Perturbation> best;
  double best_loss = -std::numeric_limits<double>::infinity();
  for (int f = 1; f <= video.shape().t; ++f) {
    Perturbation p = one_frame_attack_at(model, video, label, cfg, f, hook);
    const auto [loss, fooled] = outcome(model, video, p.delta, label);
    if (fooled) return p;
    if (loss > best_loss) {
      best_loss = loss;
      best = std::move(p);
    }
  }
  return *best;
}

/// Frame-wise perturbation: each frame's perturbation comes from an
/// independent one-frame attack at that frame; the results are stacked.
template <DifferentiableClassifier M>
Perturbation framewise_attack(const M& model, const Video& video, int label,
                              const AttackConfig& cfg, const IterationHook& hook = {}) {
  const Shape s = video.shape();
  Perturbation merged{Tensor(s), PerturbationKind::kFramewise, std::nullopt};
  for (int f = 1; f <= s.t; ++f) {
    const Perturbation p = one_frame_attack_at(model, video, label, cfg, f, hook);
    const auto src = p.delta.frame(f - 1);
    std::copy(src.begin(), src.end(), merged.delta.frame(f - 1).begin());
  }
  return merged;
}

/// Per-frame, per-channel colour offsets (constant over space). The offset
/// gradient is the spatial mean of the input gradient.
template <DifferentiableClassifier M>
Perturbation flickering_attack(const M& model, const Video& video, int label,
                               const AttackConfig& cfg, const IterationHook& hook = {}) {
  cfg.validate();
  const Shape s = video.shape();
  const std::size_t pixels = static_cast<std::size_t>(s.h) * s.w;
  std::vector<float> lo(static_cast<std::size_t>(s.t) * s.c, -std::numeric_limits<float>::infinity());
  std::vector<float> hi(lo.size(), std::numeric_limits<float>::infinity());
  for (int t = 0; t < s.t; ++t) {
    const auto f = video.frame(t);
    for (std::size_t i = 0; i < pixels; ++i) {
      for (int c = 0; c < s.c; ++c) {
        const std::size_t k = static_cast<std::size_t>(t) * s.c + c;
        lo[k] = std::max(lo[k], -f[i * s.c + c]);
        hi[k] = std::min(hi[k], 255.0f - f[i * s.c + c]);
      }
    }
  }
  const float step = cfg.step();
  std::vector<float> offset(lo.size(), 0.0f);
  Perturbation p{Tensor(s), PerturbationKind::kFlicker, std::nullopt};
  for (int m = 1; m <= cfg.iterations; ++m) {
    const Gradient g = detail::gradient_at(model, video, p.delta, label);
    for (int t = 0; t < s.t; ++t) {
      const auto gf = g.frame(t);
      for (int c = 0; c < s.c; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) mean += gf[i * s.c + c];
        mean /= static_cast<double>(pixels);
        const std::size_t k = static_cast<std::size_t>(t) * s.c + c;
        offset[k] = detail::clip(offset[k] + step * sgn(static_cast<float>(mean)), lo[k], hi[k],
                                 cfg.epsilon);
      }
      auto d = p.delta.frame(t);
      for (std::size_t i = 0; i < pixels; ++i) {
        for (int c = 0; c < s.c; ++c) d[i * s.c + c] = offset[static_cast<std::size_t>(t) * s.c + c];
      }
    }
    if (hook) hook(m, p.delta);
  }
  return p;
}

/// Draws one random defense transform of a video: a frame reindexing
/// (recorded as provenance) possibly followed by additive noise.
using DefenseSampler = std::function<TransformedVideo(const Video&, Rng&)>;

/// Expectation over transformation: each step's gradient is the mean over
/// `eot_samples` sampled defense transforms, pulled back to the untransformed
/// video through each sample's provenance (additive noise passes gradients
/// through unchanged).
template <DifferentiableClassifier M, typename Sampler>
Perturbation eot_attack(const M& model, Sampler&& sampler, const Video& video, int label,
                        const AttackConfig& cfg, const IterationHook& hook = {}) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {0x656f74ULL});
  const float step = cfg.step();
  const float inv = 1.0f / static_cast<float>(cfg.eot_samples);
  Perturbation p{Tensor(video.shape()), PerturbationKind::kFull, std::nullopt};
  for (int m = 1; m <= cfg.iterations; ++m) {
    const Video adv = add(video, p.delta);
    Gradient acc(video.shape());
    for (int k = 0; k < cfg.eot_samples; ++k) {
      const TransformedVideo tv = sampler(adv, rng);
      const Gradient g = scatter_provenance(model.loss_gradient(tv.video, label).grad, tv.provenance);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i] * inv;
    }
    for (std::size_t i = 0; i < video.size(); ++i) {
      p.delta[i] = detail::clip(p.delta[i] + step * sgn(acc[i]), -video[i], 255.0f - video[i],
                                cfg.epsilon);
    }
    if (hook) hook(m, p.delta);
  }
  return p;
}

enum class AttackMethod { kIfgsm, kStatic, kFramewise, kOneFrame, kFlicker, kEot };

inline const char* method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::kIfgsm: return "ifgsm";
    case AttackMethod::kStatic: return "static";
    case AttackMethod::kFramewise: return "framewise";
    case AttackMethod::kOneFrame: return "oneframe";
    case AttackMethod::kFlicker: return "flicker";
    default: return "eot";
  }
}

inline AttackMethod parse_method(const std::string& s) {
  for (AttackMethod m : {AttackMethod::kIfgsm, AttackMethod::kStatic, AttackMethod::kFramewise,
                         AttackMethod::kOneFrame, AttackMethod::kFlicker, AttackMethod::kEot}) {
    if (s == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown attack method '" + s + "'");
}

/// Dispatches by method. `sampler` is required for EOT and ignored otherwise.
template <DifferentiableClassifier M>
Perturbation run_attack(const M& model, AttackMethod method, const Video& video, int label,
                        const AttackConfig& cfg, const DefenseSampler& sampler = {},
                        const IterationHook& hook = {}) {
  switch (method) {
    case AttackMethod::kIfgsm: return ifgsm(model, video, label, cfg, hook);
    case AttackMethod::kStatic: return static_attack(model, video, label, cfg, hook);
    case AttackMethod::kFramewise: return framewise_attack(model, video, label, cfg, hook);
    case AttackMethod::kOneFrame: return one_frame_attack(model, video, label, cfg, std::nullopt, hook);
    case AttackMethod::kFlicker: return flickering_attack(model, video, label, cfg, hook);
    case AttackMethod::kEot:
      if (!sampler) throw std::invalid_argument("EOT attack needs a defense sampler");
      return eot_attack(model, sampler, video, label, cfg, hook);
  }
  throw std::invalid_argument("unknown attack method");
}

}  // namespace vidshuffle::attacks

#endif  // VIDSHUFFLE_ATTACKS_HPP_
