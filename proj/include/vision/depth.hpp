// Copyright 2026 The Vision Authors. All Rights Reserved.
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

#ifndef VISION_DEPTH_HPP_
#define VISION_DEPTH_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "vision/ops.hpp"
#include "vision/tensor.hpp"

namespace vision {

/// Baseline (meters) and focal length (pixels) of a rectified stereo pair.
struct StereoRig {
  double baseline_m = 0.54;
  double focal_px = 721.0;

  void validate() const {
    if (!(baseline_m > 0.0) || !std::isfinite(baseline_m)) throw ConfigError("stereo rig: baseline must be positive");
    if (!(focal_px > 0.0) || !std::isfinite(focal_px)) throw ConfigError("stereo rig: focal length must be positive");
  }
};

/// Per-pixel disparity in pixels, [1,H,W]. Zero means unknown / at infinity.
struct DisparityMap {
  Tensor<float> values;

  std::size_t height() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }
};

/// Per-pixel metric depth in meters, [1,H,W]. +infinity marks zero-disparity pixels.
struct DepthMap {
  Tensor<float> values;

  std::size_t height() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }

  static DepthMap uniform(std::size_t height, std::size_t width, float meters) {
    return {Tensor<float>::full({1, height, width}, meters)};
  }
};

/// Z = b * F / d per pixel; d == 0 maps to +infinity.
inline DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig) {
  rig.validate();
  const auto& v = disparity.values;
  if (v.rank() != 3 || v.dim(0) != 1) throw ShapeError("disparity map must be [1,H,W], got " + shape_str(v.shape()));
  const double bf = rig.baseline_m * rig.focal_px;
  std::vector<float> z(v.numel());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const float d = v[i];
    if (!(d >= 0.0f)) throw std::invalid_argument("disparity_to_depth: negative or NaN disparity at pixel " +
                                                  std::to_string(i));
    z[i] = d == 0.0f ? std::numeric_limits<float>::infinity() : static_cast<float>(bf / static_cast<double>(d));
  }
  return {Tensor<float>(v.shape(), std::move(z))};
}

/// Inverse of disparity_to_depth: d = b * F / Z, with infinite depth mapping to 0.
inline DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig) {
  rig.validate();
  const double bf = rig.baseline_m * rig.focal_px;
  std::vector<float> d(depth.values.numel());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const float z = depth.values[i];
    if (!(z > 0.0f)) throw std::invalid_argument("depth_to_disparity: depth must be positive");
    d[i] = std::isinf(z) ? 0.0f : static_cast<float>(bf / static_cast<double>(z));
  }
  return {Tensor<float>(depth.values.shape(), std::move(d))};
}

/**
 * Stack of horizontally shifted copies of a [C,H,W] image, [n,C,H,W].
 * Slice k samples column min(x + k, W - 1): content moves left by k pixels,
 * as seen from a camera displaced to the right, with the right border
 * replicated.
 */
template <typename T>
Tensor<T> shift_stack(const Tensor<T>& image, std::size_t n = 33) {
  if (image.rank() != 3) throw ShapeError("shift_stack: image must be [C,H,W], got " + shape_str(image.shape()));
  const std::size_t c = image.dim(0);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (n == 0 || n > w)
    throw ShapeError("shift_stack: " + std::to_string(n) + " shifts need 1 <= n <= width " + std::to_string(w));
  const std::size_t vol = c * h * w;
  auto in = image.data();
  std::vector<T> out(n * vol);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t row = 0; row < c * h; ++row) {
      const T* src = in.data() + row * w;
      T* dst = out.data() + k * vol + row * w;
      for (std::size_t x = 0; x < w; ++x) dst[x] = src[std::min(x + k, w - 1)];
    }
  return Tensor<T>::from_op({n, c, h, w}, std::move(out), {image}, [=](const typename Tensor<T>::NodeType& self) {
    auto& pi = *self.parents[0];
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t row = 0; row < c * h; ++row) {
        const T* g = self.grad.data() + k * vol + row * w;
        T* dst = pi.grad.data() + row * w;
        for (std::size_t x = 0; x < w; ++x) dst[std::min(x + k, w - 1)] += g[x];
      }
  });
}

/**
 * Blends the shifted views with a per-pixel softmax over the selection
 * logits: out(c,y,x) = sum_k softmax(selection)(k,y,x) * stack(k,c,y,x).
 */
template <typename T>
Tensor<T> disparity_select(const Tensor<T>& selection, const Tensor<T>& stack) {
  if (selection.rank() != 3 || stack.rank() != 4 || selection.dim(0) != stack.dim(0) ||
      selection.dim(1) != stack.dim(2) || selection.dim(2) != stack.dim(3))
    throw ShapeError("disparity_select: selection " + shape_str(selection.shape()) + " does not match stack " +
                     shape_str(stack.shape()));
  return blend(softmax_channels(selection), stack);
}

}  // namespace vision

#endif  // VISION_DEPTH_HPP_
