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

// Independent reference implementations shared by the unit and acceptance tests.

#ifndef VISION_TESTS_SUPPORT_HPP_
#define VISION_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "vision/detector.hpp"
#include "vision/ops.hpp"
#include "vision/tensor.hpp"

namespace vision::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, std::mt19937& rng, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> v(shape_numel(shape));
  for (auto& e : v) e = static_cast<T>(dist(rng));
  return Tensor<T>(shape, std::move(v), requires_grad);
}

/**
 * Central finite differences of a scalar function against reverse mode.
 * Returns ||analytic - numeric|| / max(||analytic||, ||numeric||), over all
 * inputs together.
 */
template <typename T>
double gradcheck(const std::function<Tensor<T>(const std::vector<Tensor<T>>&)>& f, std::vector<Tensor<T>> inputs,
                 double h = 1e-6) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  backward(f(inputs));
  std::vector<double> analytic;
  for (const auto& t : inputs) analytic.insert(analytic.end(), t.grad().begin(), t.grad().end());

  std::vector<double> numeric;
  for (auto& t : inputs) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const T orig = t.data()[i];
      t.data()[i] = orig + static_cast<T>(h);
      const double up = static_cast<double>(f(inputs).item());
      t.data()[i] = orig - static_cast<T>(h);
      const double down = static_cast<double>(f(inputs).item());
      t.data()[i] = orig;
      numeric.push_back((up - down) / (2.0 * h));
    }
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
  return std::sqrt(diff) / denom;
}

/// Weighted sum with fixed random coefficients: turns any tensor into a scalar with a generic gradient.
template <typename T>
Tensor<T> probe(const Tensor<T>& x, std::uint32_t seed = 99) {
  std::mt19937 rng(seed);
  auto w = random_tensor<T>(x.shape(), rng);
  return sum(mul(x, w));
}

/// Direct convolution, one multiply per (co, ci, oy, ox, ky, kx).
template <typename T>
std::vector<double> naive_conv(const Tensor<T>& in, const Tensor<T>& wt, const Tensor<T>& bias, std::size_t stride,
                               std::size_t pad, std::size_t& oh, std::size_t& ow) {
  const std::size_t ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t co = wt.dim(0), kh = wt.dim(2), kw = wt.dim(3);
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(co * oh * ow);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias.data()[o];
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const auto iy = static_cast<std::int64_t>(y * stride + ky) - static_cast<std::int64_t>(pad);
              const auto ix = static_cast<std::int64_t>(x * stride + kx) - static_cast<std::int64_t>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<std::int64_t>(h) || ix >= static_cast<std::int64_t>(w))
                continue;
              acc += static_cast<double>(in.at(c, iy, ix)) * static_cast<double>(wt.at(o, c, ky, kx));
            }
        out[(o * oh + y) * ow + x] = acc;
      }
  return out;
}

/// Transposed convolution by scattering every input pixel through the kernel; weights (in, out, kh, kw).
template <typename T>
std::vector<double> naive_deconv(const Tensor<T>& in, const Tensor<T>& wt, const Tensor<T>& bias, std::size_t stride,
                                 std::size_t pad, std::size_t& oh, std::size_t& ow) {
  const std::size_t ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t co = wt.dim(1), kh = wt.dim(2), kw = wt.dim(3);
  oh = (h - 1) * stride + kh - 2 * pad;
  ow = (w - 1) * stride + kw - 2 * pad;
  std::vector<double> out(co * oh * ow);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < oh * ow; ++i) out[o * oh * ow + i] = bias.data()[o];
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t o = 0; o < co; ++o)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const auto oy = static_cast<std::int64_t>(y * stride + ky) - static_cast<std::int64_t>(pad);
              const auto ox = static_cast<std::int64_t>(x * stride + kx) - static_cast<std::int64_t>(pad);
              if (oy < 0 || ox < 0 || oy >= static_cast<std::int64_t>(oh) || ox >= static_cast<std::int64_t>(ow))
                continue;
              out[(o * oh + oy) * ow + ox] +=
                  static_cast<double>(in.at(c, y, x)) * static_cast<double>(wt.at(c, o, ky, kx));
            }
  return out;
}

/// Correlation by definition: mean over channels of left(c,y,x) * right(c,y,x-d), 0 when x < d.
template <typename T>
double brute_correlation(const Tensor<T>& l, const Tensor<T>& r, std::size_t d, std::size_t y, std::size_t x) {
  if (x < d) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < l.dim(0); ++c)
    acc += static_cast<double>(l.at(c, y, x)) * static_cast<double>(r.at(c, y, x - d));
  return acc / static_cast<double>(l.dim(0));
}

/**
 * Exhaustive NMS reference. Among all subsets K of the boxes above threshold,
 * finds those where (a) no member is overlapped above iou_thr by a better
 * ranked same-class member and (b) every non-member is. Exactly one subset
 * qualifies; it is returned in rank order.
 */
inline std::vector<Detection> exhaustive_nms(const std::vector<Detection>& dets, double iou_thr, double conf_thr,
                                             std::size_t* solutions = nullptr) {
  std::vector<Detection> cand;
  for (const auto& d : dets)
    if (d.score >= conf_thr) cand.push_back(d);
  auto better = [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return a.box.b_x < b.box.b_x;
  };
  auto overlaps = [&](const Detection& a, const Detection& b) {
    if (a.class_id != b.class_id) return false;
    const double iw = std::min(a.box.right(), b.box.right()) - std::max(a.box.left(), b.box.left());
    const double ih = std::min(a.box.bottom(), b.box.bottom()) - std::max(a.box.top(), b.box.top());
    if (iw <= 0.0 || ih <= 0.0) return false;
    const double inter = iw * ih;
    return inter / (a.box.b_w * a.box.b_h + b.box.b_w * b.box.b_h - inter) > iou_thr;
  };
  const std::size_t n = cand.size();
  std::vector<Detection> found;
  std::size_t count = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      bool dominated = false;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && (mask >> j & 1u) && better(cand[j], cand[i]) && overlaps(cand[j], cand[i])) dominated = true;
      const bool in = mask >> i & 1u;
      ok = in ? !dominated : dominated;
    }
    if (!ok) continue;
    ++count;
    found.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) found.push_back(cand[i]);
  }
  std::sort(found.begin(), found.end(), better);
  if (solutions) *solutions = count;
  return found;
}

/// Random detections in a 100x100 frame; few classes so suppression happens.
inline std::vector<Detection> random_detections(std::mt19937& rng, std::size_t max_boxes) {
  std::uniform_int_distribution<std::size_t> count(0, max_boxes);
  std::uniform_real_distribution<double> pos(10.0, 90.0), size(5.0, 40.0), score(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cls(0, 2);
  std::vector<Detection> out(count(rng));
  for (auto& d : out) {
    d.box = {pos(rng), pos(rng), size(rng), size(rng), score(rng)};
    d.class_id = cls(rng);
    d.class_name = "c" + std::to_string(d.class_id);
    d.score = score(rng);
  }
  return out;
}

inline bool same_kept_set(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].score != b[i].score || a[i].class_id != b[i].class_id || a[i].box.b_x != b[i].box.b_x ||
        a[i].box.b_y != b[i].box.b_y)
      return false;
  return true;
}

}  // namespace vision::testing

#endif  // VISION_TESTS_SUPPORT_HPP_
