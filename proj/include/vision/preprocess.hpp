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

#ifndef VISION_PREPROCESS_HPP_
#define VISION_PREPROCESS_HPP_

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vision/tensor.hpp"

namespace vision {

/// Dataset-wide per-channel means and a shared scale.
struct ChannelStats {
  double mu_r = 0.0;
  double mu_g = 0.0;
  double mu_b = 0.0;
  double sigma = 255.0;

  double mean(std::size_t channel) const {
    switch (channel) {
      case 0: return mu_r;
      case 1: return mu_g;
      default: return mu_b;
    }
  }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("channel stats: sigma must be positive");
    if (!std::isfinite(mu_r) || !std::isfinite(mu_g) || !std::isfinite(mu_b))
      throw ConfigError("channel stats: means must be finite");
  }
};

namespace detail {

inline void require_rgb(const Tensor<float>& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw ShapeError(std::string(what) + ": expected a [3,H,W] image, got " + shape_str(image.shape()));
}

}  // namespace detail

/// Mean intensity of each channel over every pixel of every image. Sigma stays at 255.
inline ChannelStats channel_means(std::span<const Tensor<float>> dataset) {
  if (dataset.empty()) throw std::invalid_argument("channel_means: empty dataset");
  std::array<double, 3> sums{};
  std::size_t pixels = 0;
  for (const auto& img : dataset) {
    detail::require_rgb(img, "channel_means");
    const std::size_t plane = img.dim(1) * img.dim(2);
    auto d = img.data();
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i) sums[c] += d[c * plane + i];
    pixels += plane;
  }
  const auto n = static_cast<double>(pixels);
  return {sums[0] / n, sums[1] / n, sums[2] / n, 255.0};
}

/// (channel - mean) / sigma per channel. With sigma == 1 this is plain mean subtraction.
inline Tensor<float> normalize(const Tensor<float>& image, const ChannelStats& stats) {
  stats.validate();
  detail::require_rgb(image, "normalize");
  const std::size_t plane = image.dim(1) * image.dim(2);
  std::vector<float> out(image.data().begin(), image.data().end());
  const auto sigma = static_cast<float>(stats.sigma);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto mu = static_cast<float>(stats.mean(c));
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = (out[c * plane + i] - mu) / sigma;
  }
  return Tensor<float>(image.shape(), std::move(out));
}

inline Tensor<float> denormalize(const Tensor<float>& image, const ChannelStats& stats) {
  stats.validate();
  detail::require_rgb(image, "denormalize");
  const std::size_t plane = image.dim(1) * image.dim(2);
  std::vector<float> out(image.data().begin(), image.data().end());
  const auto sigma = static_cast<float>(stats.sigma);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto mu = static_cast<float>(stats.mean(c));
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = out[c * plane + i] * sigma + mu;
  }
  return Tensor<float>(image.shape(), std::move(out));
}

/// Rescales [0,1] codec pixels to the 0..255 intensity range the statistics are defined on.
inline Tensor<float> to_intensity(const Tensor<float>& image) {
  std::vector<float> out(image.data().begin(), image.data().end());
  for (auto& v : out) v *= 255.0f;
  return Tensor<float>(image.shape(), std::move(out));
}

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

}  // namespace detail

/// Four decimal lines: mu_r, mu_g, mu_b, sigma.
inline void save_stats(const ChannelStats& stats, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << detail::format_real(stats.mu_r) << '\n'
     << detail::format_real(stats.mu_g) << '\n'
     << detail::format_real(stats.mu_b) << '\n'
     << detail::format_real(stats.sigma) << '\n';
}

inline ChannelStats load_stats(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read stats file " + path);
  std::array<double, 4> v{};
  std::string line;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::getline(is, line)) throw ConfigError("stats file " + path + ": expected 4 lines");
    v[i] = detail::parse_real(line, "stats file " + path);
  }
  ChannelStats s{v[0], v[1], v[2], v[3]};
  s.validate();
  return s;
}

}  // namespace vision

#endif  // VISION_PREPROCESS_HPP_
