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

#ifndef VIDSHUFFLE_MODEL_HPP_
#define VIDSHUFFLE_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "vidshuffle/analysis.hpp"
#include "vidshuffle/nn/layers.hpp"
#include "vidshuffle/random.hpp"
#include "vidshuffle/tensor.hpp"
#include "vidshuffle/toydata.hpp"

namespace vidshuffle {

/// Softmax scores of one video (or one ensemble) plus the argmax label.
struct Prediction {
  std::vector<double> scores;
  int label = 0;

  static Prediction from_logits(const std::vector<double>& logits) {
    Prediction p;
    const double m = *std::max_element(logits.begin(), logits.end());
    p.scores.resize(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += p.scores[i] = std::exp(logits[i] - m);
    for (double& s : p.scores) s /= z;
    p.label = argmax(p.scores);
    return p;
  }

  /// Lowest index wins ties.
  static int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }
};

/// Loss, input gradient (pixel units) and prediction of one forward/backward.
struct LossGradient {
  double loss = 0.0;
  Gradient grad;
  Prediction prediction;
};

/// Anything that maps a video to class scores.
template <typename M>
concept Classifier = requires(const M& m, const Video& v) {
  { m.predict(v) } -> std::same_as<Prediction>;
};

/// A classifier that also exposes the cross-entropy gradient w.r.t. its input.
template <typename M>
concept DifferentiableClassifier = Classifier<M> && requires(const M& m, const Video& v, int y) {
  { m.loss_gradient(v, y) } -> std::same_as<LossGradient>;
};

enum class Architecture { kInflatedResNet18, kPlain3dCnnSmall };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::kInflatedResNet18 ? "inflated_resnet18" : "plain3dcnn_small";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "inflated_resnet18") return Architecture::kInflatedResNet18;
  if (s == "plain3dcnn_small") return Architecture::kPlain3dCnnSmall;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}

struct PredictorSpec {
  Architecture architecture = Architecture::kPlain3dCnnSmall;
  int num_classes = 8;
  Shape input_shape{8, 64, 64, 3};
  /// Temporal geometry of the first convolution.
  analysis::TemporalWindowSpec first_layer_temporal{3, 1, 1};
  /// Channel count of the first stage; later stages scale from it.
  int width = 8;

  void validate() const {
    first_layer_temporal.validate();
    if (num_classes < 2) throw std::invalid_argument("PredictorSpec: num_classes must be >= 2");
    if (width < 1) throw std::invalid_argument("PredictorSpec: width must be >= 1");
    if (input_shape.t < 1 || input_shape.h < 8 || input_shape.w < 8 || input_shape.c < 1) {
      throw ShapeError("PredictorSpec: unsupported input shape " + input_shape.str());
    }
  }
};

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  double initial_loss = 0.0;
  std::vector<EpochStats> epochs;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trainable 3D CNN classifier over pixel-space videos. Inputs are divided by
/// 255 before the first layer; gradients are reported in pixel units.
class Predictor {
 public:
  Predictor(PredictorSpec spec, nn::Sequential net)
      : spec_(spec), net_(std::make_shared<nn::Sequential>(std::move(net))),
        params_(net_->num_params(), 0.0f) {}

  const PredictorSpec& spec() const { return spec_; }
  std::span<float> parameters() { return params_; }
  std::span<const float> parameters() const { return params_; }
  const nn::Sequential& network() const { return *net_; }

  /// Parameter slice of layer `i` of the top-level chain.
  std::span<float> layer_parameters(std::size_t i) { return net_->slice(std::span<float>(params_), i); }

  analysis::TemporalWindowSpec first_layer_temporal_spec() const {
    return spec_.first_layer_temporal;
  }

  void check_input(const Video& v) const {
    if (v.shape() != spec_.input_shape) {
      throw ShapeError("video shape " + v.shape().str() + " does not match model input " +
                       spec_.input_shape.str());
    }
  }

  std::vector<double> logits(const Video& v) const {
    check_input(v);
    const Tensor out = net_->forward(params_, normalized(v), nullptr);
    return {out.vec().begin(), out.vec().end()};
  }

  Prediction predict(const Video& v) const { return Prediction::from_logits(logits(v)); }

  /// Cross-entropy loss w.r.t. `label` and its gradient w.r.t. the pixels.
  LossGradient loss_gradient(const Video& v, int label) const {
    LossGradient r;
    r.grad = backprop(v, label, {}, true, &r.loss, &r.prediction);
    return r;
  }

  Gradient input_gradient(const Video& v, int label) const { return loss_gradient(v, label).grad; }

  /// Accumulates dL/dparams into `param_grad`; returns the loss.
  double accumulate_param_gradient(const Video& v, int label, std::span<float> param_grad,
                                   Prediction* pred = nullptr) const {
    double loss = 0.0;
    backprop(v, label, param_grad, false, &loss, pred);
    return loss;
  }

 private:
  static Tensor normalized(const Video& v) {
    Tensor x = v;
    for (float& p : x.vec()) p *= (1.0f / 255.0f);
    return x;
  }

  Tensor backprop(const Video& v, int label, std::span<float> param_grad, bool need_input_grad,
                  double* loss, Prediction* pred) const {
    check_input(v);
    if (label < 0 || label >= spec_.num_classes) {
      throw std::out_of_range("label " + std::to_string(label) + " out of range");
    }
    std::vector<nn::Cache> caches;
    const Tensor out = net_->forward(params_, normalized(v), &caches);
    const Prediction p = Prediction::from_logits({out.vec().begin(), out.vec().end()});
    *loss = -std::log(std::max(p.scores[label], std::numeric_limits<double>::min()));
    Tensor g(out.shape());
    for (int k = 0; k < spec_.num_classes; ++k) {
      g[k] = static_cast<float>(p.scores[k] - (k == label ? 1.0 : 0.0));
    }
    Tensor gin = net_->backward(params_, caches, std::move(g), param_grad, need_input_grad);
    if (need_input_grad) {
      for (float& x : gin.vec()) x *= (1.0f / 255.0f);
    }
    if (pred) *pred = p;
    return gin;
  }

  PredictorSpec spec_;
  std::shared_ptr<const nn::Sequential> net_;
  std::vector<float> params_;
};

namespace detail {

inline nn::Triple spatial(int t, int hw) { return {t, hw, hw}; }

inline nn::Sequential build_plain_small(const PredictorSpec& s) {
  using nn::Triple;
  const auto& ft = s.first_layer_temporal;
  const int w = s.width;
  nn::Sequential net;
  net.add(std::make_unique<nn::Conv3d>(s.input_shape.c, w, Triple{ft.kernel, 3, 3},
                                       Triple{ft.stride, 2, 2}, Triple{ft.padding, 1, 1}));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Conv3d>(w, 2 * w, Triple{3, 3, 3}, Triple{1, 2, 2}, Triple{1, 1, 1}));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Conv3d>(2 * w, 4 * w, Triple{3, 3, 3}, Triple{2, 2, 2},
                                       Triple{1, 1, 1}));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Conv3d>(4 * w, 4 * w, Triple{3, 3, 3}, Triple{1, 2, 2},
                                       Triple{1, 1, 1}));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::GlobalAvgPool>());
  net.add(std::make_unique<nn::Linear>(4 * w, s.num_classes));
  return net;
}

// ResNet18 layout (stem + 4 stages of 2 basic blocks) with every 3x3 kernel
// inflated to 3x3x3. No normalization layers; the residual branch is
// initialized small instead.
inline nn::Sequential build_inflated_resnet18(const PredictorSpec& s) {
  using nn::Triple;
  const auto& ft = s.first_layer_temporal;
  const int w = s.width;
  nn::Sequential net;
  net.add(std::make_unique<nn::Conv3d>(s.input_shape.c, w, Triple{ft.kernel, 3, 3},
                                       Triple{ft.stride, 2, 2}, Triple{ft.padding, 1, 1}));
  net.add(std::make_unique<nn::ReLU>());
  const int widths[4] = {w, 2 * w, 4 * w, 8 * w};
  int cin = w;
  for (int stage = 0; stage < 4; ++stage) {
    const Triple stride = stage == 0 ? Triple{1, 1, 1} : Triple{1, 2, 2};
    net.add(std::make_unique<nn::BasicBlock3d>(cin, widths[stage], stride));
    net.add(std::make_unique<nn::BasicBlock3d>(widths[stage], widths[stage], Triple{1, 1, 1}));
    cin = widths[stage];
  }
  net.add(std::make_unique<nn::GlobalAvgPool>());
  net.add(std::make_unique<nn::Linear>(cin, s.num_classes));
  return net;
}

}  // namespace detail

/// Constructs an untrained network; weights drawn from `rng`.
inline Predictor build_model(const PredictorSpec& spec, Rng& rng) {
  spec.validate();
  nn::Sequential net = spec.architecture == Architecture::kInflatedResNet18
                           ? detail::build_inflated_resnet18(spec)
                           : detail::build_plain_small(spec);
  const Shape out = net.output_shape(spec.input_shape);  // throws on unsupported shapes
  if (out.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw ShapeError("network output " + out.str() + " does not match num_classes");
  }
  Predictor p(spec, std::move(net));
  p.network().init(p.parameters(), rng);
  return p;
}

inline Predictor build_model(const PredictorSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x6d6f64656cULL});
  return build_model(spec, rng);
}

/// Mean cross-entropy and accuracy over a dataset.
inline EpochStats evaluate_loss(const Predictor& model, const toydata::LabeledDataset& ds) {
  EpochStats s;
  int hits = 0;
  for (const auto& it : ds.items) {
    const auto lg = model.logits(it.video);
    const Prediction p = Prediction::from_logits(lg);
    s.loss += -std::log(std::max(p.scores[it.label], std::numeric_limits<double>::min()));
    hits += p.label == it.label ? 1 : 0;
  }
  s.loss /= static_cast<double>(ds.items.size());
  s.accuracy = static_cast<double>(hits) / static_cast<double>(ds.items.size());
  return s;
}

/// Mini-batch Adam on mean cross-entropy. Training is single-threaded and
/// bitwise reproducible for a fixed (seed, data, spec).
inline TrainHistory train(Predictor& model, const toydata::LabeledDataset& train_set,
                          const TrainConfig& cfg,
                          const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (train_set.items.empty()) throw std::invalid_argument("train: empty training set");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw std::invalid_argument("train: bad schedule");
  for (const auto& it : train_set.items) {
    if (it.label < 0 || it.label >= model.spec().num_classes) {
      throw std::out_of_range("train: label " + std::to_string(it.label) + " out of range");
    }
  }
  TrainHistory hist;
  hist.initial_loss = evaluate_loss(model, train_set).loss;
  if (cfg.epochs == 0) return hist;

  auto params = model.parameters();
  const std::size_t n = params.size();
  std::vector<float> grad(n), m1(n, 0.0f), m2(n, 0.0f);
  std::vector<std::size_t> order(train_set.items.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_rng(cfg.seed, {0x747261696eULL, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int hits = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t i = b; i < e; ++i) {
        const auto& it = train_set.items[order[i]];
        Prediction p;
        const double l = model.accumulate_param_gradient(it.video, it.label, grad, &p);
        if (!std::isfinite(l)) {
          throw TrainingDiverged("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
        }
        loss_sum += l;
        hits += p.label == it.label ? 1 : 0;
      }
      ++step;
      const double inv_batch = 1.0 / static_cast<double>(e - b);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < n; ++k) {
        const double g = grad[k] * inv_batch;
        m1[k] = static_cast<float>(cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * g);
        m2[k] = static_cast<float>(cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * g * g);
        const double mh = m1[k] / c1, vh = m2[k] / c2;
        params[k] -= static_cast<float>(cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps));
      }
    }
    EpochStats s{epoch, loss_sum / static_cast<double>(order.size()),
                 static_cast<double>(hits) / static_cast<double>(order.size())};
    if (!std::isfinite(s.loss)) {
      throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    hist.epochs.push_back(s);
    if (on_epoch) on_epoch(s);
  }
  return hist;
}

static_assert(DifferentiableClassifier<Predictor>);

}  // namespace vidshuffle

#endif  // VIDSHUFFLE_MODEL_HPP_
