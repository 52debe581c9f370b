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

#ifndef VIDSHUFFLE_NN_LAYERS_HPP_
#define VIDSHUFFLE_NN_LAYERS_HPP_

// Minimal 3D convolutional layers with hand-written backward passes.
//
// Layers are stateless: parameters live in a flat buffer owned by the
// network and are handed to each layer as a span. Anything a layer needs for
// its backward pass goes into a caller-owned Cache, so a trained network can
// be shared read-only between threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "vidshuffle/random.hpp"
#include "vidshuffle/tensor.hpp"

namespace vidshuffle::nn {

struct Cache {
  Shape in_shape{};
  std::vector<Tensor> saved;
  std::vector<Cache> children;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  virtual Shape output_shape(Shape in) const = 0;
  virtual std::size_t num_params() const { return 0; }
  virtual void init(std::span<float> /*params*/, Rng& /*rng*/) const {}

  /// `cache` may be null for inference-only calls.
  virtual Tensor forward(std::span<const float> params, const Tensor& in, Cache* cache) const = 0;

  /// Returns dL/dinput (empty tensor if !need_input_grad) and accumulates
  /// dL/dparams into `param_grad` when it is non-empty.
  virtual Tensor backward(std::span<const float> params, const Cache& cache, const Tensor& grad_out,
                          std::span<float> param_grad, bool need_input_grad) const = 0;
};

using LayerPtr = std::unique_ptr<Layer>;

struct Triple {
  int t = 1, h = 1, w = 1;
};

/// Channels-last 3D convolution with bias.
/// Weight layout [kt][kh][kw][cin][cout], followed by cout biases.
class Conv3d final : public Layer {
 public:
  Conv3d(int cin, int cout, Triple kernel, Triple stride, Triple padding, float init_gain = 1.0f)
      : cin_(cin), cout_(cout), k_(kernel), s_(stride), p_(padding), gain_(init_gain) {
    if (cin < 1 || cout < 1 || kernel.t < 1 || kernel.h < 1 || kernel.w < 1 || stride.t < 1 ||
        stride.h < 1 || stride.w < 1 || padding.t < 0 || padding.h < 0 || padding.w < 0) {
      throw std::invalid_argument("Conv3d: invalid geometry");
    }
  }

  std::string name() const override { return "conv3d"; }
  const Triple& kernel() const { return k_; }
  const Triple& stride() const { return s_; }
  const Triple& padding() const { return p_; }
  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }

  Shape output_shape(Shape in) const override {
    if (in.c != cin_) {
      throw ShapeError("Conv3d expects " + std::to_string(cin_) + " channels, got " + in.str());
    }
    auto dim = [](int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; };
    Shape out{dim(in.t, k_.t, s_.t, p_.t), dim(in.h, k_.h, s_.h, p_.h),
              dim(in.w, k_.w, s_.w, p_.w), cout_};
    if (in.t + 2 * p_.t < k_.t || in.h + 2 * p_.h < k_.h || in.w + 2 * p_.w < k_.w) {
      throw ShapeError("Conv3d kernel larger than padded input " + in.str());
    }
    return out;
  }

  std::size_t weight_count() const {
    return static_cast<std::size_t>(k_.t) * k_.h * k_.w * cin_ * cout_;
  }
  std::size_t num_params() const override { return weight_count() + cout_; }

  void init(std::span<float> params, Rng& rng) const override {
    const double fan_in = static_cast<double>(k_.t) * k_.h * k_.w * cin_;
    std::normal_distribution<double> nd(0.0, gain_ * std::sqrt(2.0 / fan_in));
    for (std::size_t i = 0; i < weight_count(); ++i) params[i] = static_cast<float>(nd(rng));
    std::fill(params.begin() + weight_count(), params.end(), 0.0f);
  }

  Tensor forward(std::span<const float> params, const Tensor& in, Cache* cache) const override {
    const Shape is = in.shape();
    const Shape os = output_shape(is);
    Tensor out(os);
    const float* w = params.data();
    const float* bias = params.data() + weight_count();
    const std::size_t kstride = static_cast<std::size_t>(cin_) * cout_;
    const int cout = cout_;
    for (int ot = 0; ot < os.t; ++ot) {
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox) {
          float* __restrict o = out.data() + out.index(ot, oy, ox, 0);
          std::copy(bias, bias + cout, o);
          const auto [kx0, kx1] = tap_range(ox, s_.w, p_.w, k_.w, is.w);
          const int ix0 = ox * s_.w - p_.w + kx0;
          const int run = (kx1 - kx0) * cin_;
          for (int kt = 0; kt < k_.t; ++kt) {
            const int it = ot * s_.t - p_.t + kt;
            if (it < 0 || it >= is.t) continue;
            for (int ky = 0; ky < k_.h; ++ky) {
              const int iy = oy * s_.h - p_.h + ky;
              if (iy < 0 || iy >= is.h) continue;
              // (kx, ci) pairs are contiguous in both the input and the weights.
              const float* __restrict x = in.data() + in.index(it, iy, ix0, 0);
              const float* __restrict wk =
                  w + ((static_cast<std::size_t>(kt) * k_.h + ky) * k_.w + kx0) * kstride;
              switch (cout) {
                case 8: accumulate_run<8>(o, x, wk, run); break;
                case 16: accumulate_run<16>(o, x, wk, run); break;
                case 32: accumulate_run<32>(o, x, wk, run); break;
                default:
                  for (int j = 0; j < run; ++j) {
                    const float xv = x[j];
                    if (xv == 0.0f) continue;
                    const float* __restrict wr = wk + static_cast<std::size_t>(j) * cout;
#pragma omp simd
                    for (int co = 0; co < cout; ++co) o[co] += xv * wr[co];
                  }
              }
            }
          }
        }
      }
    }
    if (cache) {
      cache->in_shape = is;
      cache->saved = {in};
    }
    return out;
  }

  Tensor backward(std::span<const float> params, const Cache& cache, const Tensor& grad_out,
                  std::span<float> param_grad, bool need_input_grad) const override {
    const Tensor& in = cache.saved.at(0);
    const Shape is = in.shape();
    const Shape os = grad_out.shape();
    Tensor din;
    if (need_input_grad) din = Tensor(is);
    const bool want_w = !param_grad.empty();
    const float* w = params.data();
    float* dw = want_w ? param_grad.data() : nullptr;
    float* db = want_w ? param_grad.data() + weight_count() : nullptr;
    const std::size_t kstride = static_cast<std::size_t>(cin_) * cout_;
    const std::size_t row = static_cast<std::size_t>(k_.w) * cin_;
    const int cout = cout_;
    // Weights re-laid out as [kt][kh][cout][kw][cin] so that, for one output
    // channel, the (kx, ci) run matches the contiguous input run.
    std::vector<float> wt;
    if (need_input_grad) {
      wt.resize(weight_count());
      for (int kt = 0; kt < k_.t; ++kt) {
        for (int ky = 0; ky < k_.h; ++ky) {
          const std::size_t plane = static_cast<std::size_t>(kt) * k_.h + ky;
          for (int kx = 0; kx < k_.w; ++kx) {
            for (int ci = 0; ci < cin_; ++ci) {
              for (int co = 0; co < cout; ++co) {
                wt[(plane * cout + co) * row + static_cast<std::size_t>(kx) * cin_ + ci] =
                    w[(plane * k_.w + kx) * kstride + static_cast<std::size_t>(ci) * cout + co];
              }
            }
          }
        }
      }
    }
    for (int ot = 0; ot < os.t; ++ot) {
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox) {
          const float* __restrict g = grad_out.data() + grad_out.index(ot, oy, ox, 0);
          bool any = false;
          for (int co = 0; co < cout; ++co) any |= g[co] != 0.0f;
          if (!any) continue;
          if (want_w) {
            for (int co = 0; co < cout; ++co) db[co] += g[co];
          }
          const auto [kx0, kx1] = tap_range(ox, s_.w, p_.w, k_.w, is.w);
          const int ix0 = ox * s_.w - p_.w + kx0;
          const int run = (kx1 - kx0) * cin_;
          for (int kt = 0; kt < k_.t; ++kt) {
            const int it = ot * s_.t - p_.t + kt;
            if (it < 0 || it >= is.t) continue;
            for (int ky = 0; ky < k_.h; ++ky) {
              const int iy = oy * s_.h - p_.h + ky;
              if (iy < 0 || iy >= is.h) continue;
              const std::size_t plane = static_cast<std::size_t>(kt) * k_.h + ky;
              const std::size_t ioff = in.index(it, iy, ix0, 0);
              if (need_input_grad) {
                float* __restrict dx = din.data() + ioff;
                for (int co = 0; co < cout; ++co) {
                  const float gv = g[co];
                  if (gv == 0.0f) continue;
                  const float* __restrict wr =
                      wt.data() + (plane * cout + co) * row + static_cast<std::size_t>(kx0) * cin_;
#pragma omp simd
                  for (int j = 0; j < run; ++j) dx[j] += gv * wr[j];
                }
              }
              if (want_w) {
                const float* __restrict x = in.data() + ioff;
                float* __restrict dwk = dw + (plane * k_.w + kx0) * kstride;
                for (int j = 0; j < run; ++j) {
                  const float xv = x[j];
                  if (xv == 0.0f) continue;
                  float* __restrict dwr = dwk + static_cast<std::size_t>(j) * cout;
#pragma omp simd
                  for (int co = 0; co < cout; ++co) dwr[co] += xv * g[co];
                }
              }
            }
          }
        }
      }
    }
    return din;
  }

  /// o[0..CO) += sum_j x[j] * w[j][0..CO) with the accumulator held in
  /// registers.
  template <int CO>
  static void accumulate_run(float* __restrict o, const float* __restrict x,
                             const float* __restrict w, int run) {
    float acc[CO];
    for (int co = 0; co < CO; ++co) acc[co] = o[co];
    for (int j = 0; j < run; ++j) {
      const float xv = x[j];
      const float* __restrict wr = w + static_cast<std::size_t>(j) * CO;
#pragma omp simd
      for (int co = 0; co < CO; ++co) acc[co] += xv * wr[co];
    }
    for (int co = 0; co < CO; ++co) o[co] = acc[co];
  }

  /// Kernel taps [k0, k1) along one axis that land inside the input.
  static std::pair<int, int> tap_range(int o, int stride, int pad, int k, int n) {
    const int base = o * stride - pad;
    return {std::max(0, -base), std::min(k, n - base)};
  }

 private:
  int cin_, cout_;
  Triple k_, s_, p_;
  float gain_;
};

class ReLU final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Shape output_shape(Shape in) const override { return in; }

  Tensor forward(std::span<const float>, const Tensor& in, Cache* cache) const override {
    Tensor out = in;
    for (float& v : out.vec()) v = std::max(v, 0.0f);
    if (cache) {
      cache->in_shape = in.shape();
      cache->saved = {out};
    }
    return out;
  }

  Tensor backward(std::span<const float>, const Cache& cache, const Tensor& grad_out,
                  std::span<float>, bool) const override {
    const Tensor& out = cache.saved.at(0);
    Tensor din = grad_out;
    for (std::size_t i = 0; i < din.size(); ++i) {
      if (out[i] <= 0.0f) din[i] = 0.0f;
    }
    return din;
  }
};

/// Mean over (t, h, w); output shape (1,1,1,C).
class GlobalAvgPool final : public Layer {
 public:
  std::string name() const override { return "global_avg_pool"; }
  Shape output_shape(Shape in) const override { return {1, 1, 1, in.c}; }

  Tensor forward(std::span<const float>, const Tensor& in, Cache* cache) const override {
    const Shape s = in.shape();
    Tensor out(output_shape(s));
    const std::size_t n = static_cast<std::size_t>(s.t) * s.h * s.w;
    std::vector<double> acc(s.c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = in.data() + i * s.c;
      for (int c = 0; c < s.c; ++c) acc[c] += x[c];
    }
    for (int c = 0; c < s.c; ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(n));
    if (cache) cache->in_shape = s;
    return out;
  }

  Tensor backward(std::span<const float>, const Cache& cache, const Tensor& grad_out,
                  std::span<float>, bool) const override {
    const Shape s = cache.in_shape;
    Tensor din(s);
    const std::size_t n = static_cast<std::size_t>(s.t) * s.h * s.w;
    const float inv = 1.0f / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i) {
      float* d = din.data() + i * s.c;
      for (int c = 0; c < s.c; ++c) d[c] = grad_out[c] * inv;
    }
    return din;
  }
};

/// Fully connected layer on the flattened input. Weights [in][out] then bias.
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {
    if (in_ < 1 || out_ < 1) throw std::invalid_argument("Linear: invalid size");
  }
  std::string name() const override { return "linear"; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Shape output_shape(Shape in) const override {
    if (static_cast<int>(in.size()) != in_) {
      throw ShapeError("Linear expects " + std::to_string(in_) + " features, got " + in.str());
    }
    return {1, 1, 1, out_};
  }
  std::size_t num_params() const override {
    return static_cast<std::size_t>(in_) * out_ + out_;
  }
  void init(std::span<float> params, Rng& rng) const override {
    std::normal_distribution<double> nd(0.0, std::sqrt(1.0 / in_));
    for (std::size_t i = 0; i < static_cast<std::size_t>(in_) * out_; ++i) {
      params[i] = static_cast<float>(nd(rng));
    }
    std::fill(params.begin() + static_cast<std::ptrdiff_t>(in_) * out_, params.end(), 0.0f);
  }

  Tensor forward(std::span<const float> params, const Tensor& in, Cache* cache) const override {
    Tensor out(output_shape(in.shape()));
    const float* w = params.data();
    const float* b = params.data() + static_cast<std::size_t>(in_) * out_;
    for (int o = 0; o < out_; ++o) out[o] = b[o];
    for (int i = 0; i < in_; ++i) {
      const float x = in[i];
      const float* wr = w + static_cast<std::size_t>(i) * out_;
      for (int o = 0; o < out_; ++o) out[o] += x * wr[o];
    }
    if (cache) {
      cache->in_shape = in.shape();
      cache->saved = {in};
    }
    return out;
  }

  Tensor backward(std::span<const float> params, const Cache& cache, const Tensor& grad_out,
                  std::span<float> param_grad, bool need_input_grad) const override {
    const Tensor& in = cache.saved.at(0);
    const float* w = params.data();
    Tensor din;
    if (need_input_grad) din = Tensor(in.shape());
    for (int i = 0; i < in_; ++i) {
      const float* wr = w + static_cast<std::size_t>(i) * out_;
      if (need_input_grad) {
        float s = 0.0f;
        for (int o = 0; o < out_; ++o) s += wr[o] * grad_out[o];
        din[i] = s;
      }
      if (!param_grad.empty()) {
        float* dwr = param_grad.data() + static_cast<std::size_t>(i) * out_;
        for (int o = 0; o < out_; ++o) dwr[o] += in[i] * grad_out[o];
      }
    }
    if (!param_grad.empty()) {
      float* db = param_grad.data() + static_cast<std::size_t>(in_) * out_;
      for (int o = 0; o < out_; ++o) db[o] += grad_out[o];
    }
    return din;
  }

 private:
  int in_, out_;
};

/// Residual basic block: relu(conv(relu(conv(x))) + shortcut(x)), with a
/// 1x1x1 projection shortcut when stride or width changes.
class BasicBlock3d final : public Layer {
 public:
  BasicBlock3d(int cin, int cout, Triple stride)
      : conv1_(cin, cout, {3, 3, 3}, stride, {1, 1, 1}),
        conv2_(cout, cout, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, 0.25f) {
    if (cin != cout || stride.t != 1 || stride.h != 1 || stride.w != 1) {
      proj_ = std::make_unique<Conv3d>(cin, cout, Triple{1, 1, 1}, stride, Triple{0, 0, 0});
    }
  }

  std::string name() const override { return "basic_block3d"; }
  const Conv3d& conv1() const { return conv1_; }
  const Conv3d& conv2() const { return conv2_; }
  const Conv3d* projection() const { return proj_.get(); }
  Shape output_shape(Shape in) const override {
    return conv2_.output_shape(conv1_.output_shape(in));
  }
  std::size_t num_params() const override {
    return conv1_.num_params() + conv2_.num_params() + (proj_ ? proj_->num_params() : 0);
  }
  void init(std::span<float> params, Rng& rng) const override {
    auto [p1, p2, pp] = split(params);
    conv1_.init(p1, rng);
    conv2_.init(p2, rng);
    if (proj_) proj_->init(pp, rng);
  }

  Tensor forward(std::span<const float> params, const Tensor& in, Cache* cache) const override {
    auto [p1, p2, pp] = split(params);
    Cache* c = nullptr;
    if (cache) {
      cache->in_shape = in.shape();
      cache->children.assign(4, Cache{});
      c = cache->children.data();
    }
    Tensor h = conv1_.forward(p1, in, c ? &c[0] : nullptr);
    h = relu_.forward({}, h, c ? &c[1] : nullptr);
    h = conv2_.forward(p2, h, c ? &c[2] : nullptr);
    const Tensor sc = proj_ ? proj_->forward(pp, in, c ? &c[3] : nullptr) : in;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::max(h[i] + sc[i], 0.0f);
    if (cache) cache->saved = {h};
    return h;
  }

  Tensor backward(std::span<const float> params, const Cache& cache, const Tensor& grad_out,
                  std::span<float> param_grad, bool need_input_grad) const override {
    auto [p1, p2, pp] = split(params);
    std::span<float> g1, g2, gp;
    if (!param_grad.empty()) std::tie(g1, g2, gp) = split(param_grad);
    const Tensor& out = cache.saved.at(0);
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (out[i] <= 0.0f) g[i] = 0.0f;
    }
    const auto& c = cache.children;
    Tensor gh = conv2_.backward(p2, c[2], g, g2, true);
    gh = relu_.backward({}, c[1], gh, {}, true);
    Tensor din = conv1_.backward(p1, c[0], gh, g1, need_input_grad);
    if (proj_) {
      Tensor ds = proj_->backward(pp, c[3], g, gp, need_input_grad);
      if (need_input_grad) {
        for (std::size_t i = 0; i < din.size(); ++i) din[i] += ds[i];
      }
    } else if (need_input_grad) {
      for (std::size_t i = 0; i < din.size(); ++i) din[i] += g[i];
    }
    return din;
  }

 private:
  template <typename T>
  std::tuple<std::span<T>, std::span<T>, std::span<T>> split(std::span<T> p) const {
    const std::size_t n1 = conv1_.num_params(), n2 = conv2_.num_params();
    return {p.subspan(0, n1), p.subspan(n1, n2), p.subspan(n1 + n2)};
  }

  Conv3d conv1_;
  Conv3d conv2_;
  ReLU relu_;
  std::unique_ptr<Conv3d> proj_;
};

/// A chain of layers over one flat parameter buffer.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(LayerPtr layer) {
    offsets_.push_back(total_);
    total_ += layer->num_params();
    layers_.push_back(std::move(layer));
  }

  std::size_t num_params() const { return total_; }
  std::size_t size() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  std::span<const float> slice(std::span<const float> all, std::size_t i) const {
    return all.subspan(offsets_[i], layers_[i]->num_params());
  }
  std::span<float> slice(std::span<float> all, std::size_t i) const {
    return all.subspan(offsets_[i], layers_[i]->num_params());
  }

  void init(std::span<float> params, Rng& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->init(slice(params, i), rng);
  }

  Shape output_shape(Shape in) const {
    for (const auto& l : layers_) in = l->output_shape(in);
    return in;
  }

  Tensor forward(std::span<const float> params, Tensor x, std::vector<Cache>* caches) const {
    if (caches) caches->assign(layers_.size(), Cache{});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i]->forward(slice(params, i), x, caches ? &(*caches)[i] : nullptr);
    }
    return x;
  }

  Tensor backward(std::span<const float> params, const std::vector<Cache>& caches, Tensor grad,
                  std::span<float> param_grad, bool need_input_grad) const {
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const bool need = need_input_grad || i > 0;
      std::span<float> pg = param_grad.empty() ? std::span<float>{} : slice(param_grad, i);
      grad = layers_[i]->backward(slice(params, i), caches[i], grad, pg, need);
    }
    return grad;
  }

 private:
  std::vector<LayerPtr> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

}  // namespace vidshuffle::nn

#endif  // VIDSHUFFLE_NN_LAYERS_HPP_
