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

#ifndef VIDSHUFFLE_TENSOR_HPP_
#define VIDSHUFFLE_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vidshuffle {

/// Dimensions of a rank-4 channels-last tensor (time, height, width, channel).
struct Shape {
  int t = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  constexpr std::size_t size() const {
    return static_cast<std::size_t>(t) * h * w * c;
  }
  constexpr std::size_t frame_size() const {
    return static_cast<std::size_t>(h) * w * c;
  }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << t << "," << h << "," << w << "," << c << ")";
    return os.str();
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense float tensor laid out as [t][h][w][c].
///
/// Videos, perturbations, gradients and network activations all share this
/// type. Pixel-space tensors hold intensities in [0,255].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f)
      : shape_(shape), data_(shape.size(), fill) {
    if (shape.t < 0 || shape.h < 0 || shape.w < 0 || shape.c < 0) {
      throw ShapeError("negative tensor dimension in " + shape.str());
    }
  }
  Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> span() { return data_; }
  std::span<const float> span() const { return data_; }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  std::size_t index(int t, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(t) * shape_.h + y) * shape_.w + x) * shape_.c + ch;
  }
  float& operator()(int t, int y, int x, int ch) { return data_[index(t, y, x, ch)]; }
  float operator()(int t, int y, int x, int ch) const { return data_[index(t, y, x, ch)]; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  /// Contiguous view of frame `t` (0-based).
  std::span<float> frame(int t) {
    return {data_.data() + static_cast<std::size_t>(t) * shape_.frame_size(), shape_.frame_size()};
  }
  std::span<const float> frame(int t) const {
    return {data_.data() + static_cast<std::size_t>(t) * shape_.frame_size(), shape_.frame_size()};
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_{};
  std::vector<float> data_;
};

/// A T x H x W x C clip of pixel intensities in [0,255].
using Video = Tensor;
/// Same shape as a Video; additive, bounded in max-norm.
using Gradient = Tensor;

inline float max_abs(std::span<const float> v) {
  float m = 0.0f;
  for (float x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline void clamp_pixels(Tensor& v) {
  for (float& x : v.vec()) x = std::clamp(x, 0.0f, 255.0f);
}

}  // namespace vidshuffle

#endif  // VIDSHUFFLE_TENSOR_HPP_
