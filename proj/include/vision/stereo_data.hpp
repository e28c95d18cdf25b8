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

#ifndef VISION_STEREO_DATA_HPP_
#define VISION_STEREO_DATA_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "vision/depth.hpp"
#include "vision/tensor.hpp"

namespace vision {

/// Left/right pair in [0,1] pixels with optional ground-truth left disparity.
struct StereoSample {
  Tensor<float> left;
  Tensor<float> right;
  std::optional<Tensor<float>> disparity;
};

/// Right view of a fronto-parallel plane at a uniform disparity.
inline StereoSample uniform_shift_pair(const Tensor<float>& left, std::size_t shift) {
  auto stack = shift_stack(left.detach(), shift + 1);
  const std::size_t vol = left.numel();
  std::vector<float> right(stack.data().begin() + static_cast<std::ptrdiff_t>(shift * vol),
                           stack.data().begin() + static_cast<std::ptrdiff_t>((shift + 1) * vol));
  return {left.detach(), Tensor<float>(left.shape(), std::move(right)),
          Tensor<float>::full({1, left.dim(1), left.dim(2)}, static_cast<float>(shift))};
}

struct SyntheticSceneConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t rectangles = 3;
  std::size_t background_disparity = 1;
  std::size_t max_disparity = 8;
  std::size_t texture_cell = 16;
  float contrast = 0.6f;
};

namespace detail {

inline std::uint32_t mix(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x7feb352dU;
  h ^= h >> 15;
  h *= 0x846ca68bU;
  h ^= h >> 16;
  return h;
}

// Fronto-parallel textured layer; its appearance is fixed in scene columns,
// so each view samples it at (x + disparity) without resampling holes.
struct SceneLayer {
  std::int64_t x0, x1, y0, y1;  // scene-column extent, half-open
  std::size_t disparity;
  std::array<float, 3> base;
  float contrast;
  std::uint32_t seed;

  bool covers(std::int64_t u, std::int64_t y) const { return u >= x0 && u < x1 && y >= y0 && y < y1; }

  float sample(std::size_t c, std::int64_t u, std::int64_t y, std::int64_t cell) const {
    // Value noise: hashed lattice values every `cell` pixels, bilinearly interpolated.
    auto lattice = [&](std::int64_t i, std::int64_t j) {
      auto key = static_cast<std::uint32_t>((j * 7919 + i * 104729 + static_cast<std::int64_t>(c) * 15485863) &
                                            0x7fffffff);
      return static_cast<float>(mix(key ^ seed) & 0xffff) / 65535.0f - 0.5f;
    };
    const std::int64_t i0 = u >= 0 ? u / cell : (u - cell + 1) / cell;
    const std::int64_t j0 = y / cell;
    const float fu = static_cast<float>(u - i0 * cell) / static_cast<float>(cell);
    const float fy = static_cast<float>(y - j0 * cell) / static_cast<float>(cell);
    const float top = lattice(i0, j0) * (1 - fu) + lattice(i0 + 1, j0) * fu;
    const float bot = lattice(i0, j0 + 1) * (1 - fu) + lattice(i0 + 1, j0 + 1) * fu;
    return std::clamp(base[c] + contrast * (top * (1 - fy) + bot * fy), 0.0f, 1.0f);
  }
};

}  // namespace detail

/**
 * Textured rectangles at known integer disparities over a textured background.
 * Nearer layers (larger disparity) occlude farther ones in both views; the
 * ground truth is the disparity of the visible layer in the left view.
 */
inline std::vector<StereoSample> make_synthetic_pairs(std::size_t count, const SyntheticSceneConfig& cfg,
                                                      std::uint64_t seed) {
  if (cfg.width <= cfg.max_disparity || cfg.height == 0) throw ConfigError("synthetic scene: image too small");
  if (cfg.background_disparity > cfg.max_disparity) throw ConfigError("synthetic scene: bad disparity range");
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const auto h = static_cast<std::int64_t>(cfg.height);
  const auto w = static_cast<std::int64_t>(cfg.width);
  const auto cell = static_cast<std::int64_t>(std::max<std::size_t>(1, cfg.texture_cell));

  std::vector<StereoSample> out;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<detail::SceneLayer> layers;
    auto colour = [&] {
      return std::array<float, 3>{static_cast<float>(uniform(0.15, 0.85)), static_cast<float>(uniform(0.15, 0.85)),
                                  static_cast<float>(uniform(0.15, 0.85))};
    };
    layers.push_back({std::numeric_limits<std::int64_t>::min() / 4, std::numeric_limits<std::int64_t>::max() / 4, 0,
                      h, cfg.background_disparity, colour(), cfg.contrast, static_cast<std::uint32_t>(rng())});
    for (std::size_t r = 0; r < cfg.rectangles; ++r) {
      const std::int64_t rw = integer(w / 6, w / 2);
      const std::int64_t rh = integer(h / 6, h / 2);
      const std::int64_t x0 = integer(0, w - rw);
      const std::int64_t y0 = integer(0, h - rh);
      const auto d = static_cast<std::size_t>(
          integer(static_cast<std::int64_t>(cfg.background_disparity) + 1, static_cast<std::int64_t>(cfg.max_disparity)));
      layers.push_back({x0, x0 + rw, y0, y0 + rh, d, colour(), cfg.contrast, static_cast<std::uint32_t>(rng())});
    }
    std::stable_sort(layers.begin(), layers.end(),
                     [](const auto& a, const auto& b) { return a.disparity < b.disparity; });

    const std::size_t plane = cfg.height * cfg.width;
    std::vector<float> left(3 * plane), right(3 * plane), disp(plane);
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y * w + x);
        const detail::SceneLayer* top_left = nullptr;
        const detail::SceneLayer* top_right = nullptr;
        for (const auto& l : layers) {
          if (l.covers(x, y)) top_left = &l;
          if (l.covers(x + static_cast<std::int64_t>(l.disparity), y)) top_right = &l;
        }
        const auto ur = x + static_cast<std::int64_t>(top_right->disparity);
        for (std::size_t c = 0; c < 3; ++c) {
          left[c * plane + i] = top_left->sample(c, x, y, cell);
          right[c * plane + i] = top_right->sample(c, ur, y, cell);
        }
        disp[i] = static_cast<float>(top_left->disparity);
      }
    out.push_back({Tensor<float>({3, cfg.height, cfg.width}, std::move(left)),
                   Tensor<float>({3, cfg.height, cfg.width}, std::move(right)),
                   Tensor<float>({1, cfg.height, cfg.width}, std::move(disp))});
  }
  return out;
}

}  // namespace vision

#endif  // VISION_STEREO_DATA_HPP_
