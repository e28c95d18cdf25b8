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

#ifndef VISION_OPS_HPP_
#define VISION_OPS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vision/tensor.hpp"

namespace vision {

/**
 * Geometry of a convolution layer.
 *
 * Regular layers store weights as (out, in, kh, kw). Transposed layers store
 * them as (in, out, kh, kw), so a transposed layer built from a regular
 * layer's weights, with the channel counts swapped, is its exact adjoint.
 */
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool transposed = false;

  void validate() const {
    if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0)
      throw ShapeError("conv spec: channels, kernel and stride must be positive");
  }

  Shape weight_shape() const {
    if (transposed) return {in_channels, out_channels, kernel_h, kernel_w};
    return {out_channels, in_channels, kernel_h, kernel_w};
  }

  std::size_t fan_in() const { return in_channels * kernel_h * kernel_w; }

  /// Output (height, width) for an input of the given spatial size.
  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const {
    validate();
    auto extent = [&](std::size_t n, std::size_t k) -> std::size_t {
      auto n_i = static_cast<std::int64_t>(n);
      auto k_i = static_cast<std::int64_t>(k);
      auto s_i = static_cast<std::int64_t>(stride);
      auto p_i = static_cast<std::int64_t>(padding);
      std::int64_t out = transposed ? (n_i - 1) * s_i - 2 * p_i + k_i : (n_i + 2 * p_i - k_i) >= 0
                                                                           ? (n_i + 2 * p_i - k_i) / s_i + 1
                                                                           : 0;
      if (out < 1)
        throw ShapeError("conv spec: kernel " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
                         " stride " + std::to_string(stride) + " pad " + std::to_string(padding) +
                         " gives empty output for input " + std::to_string(h) + "x" + std::to_string(w));
      return static_cast<std::size_t>(out);
    };
    return {extent(h, kernel_h), extent(w, kernel_w)};
  }
};

namespace detail {

struct ConvGeom {
  std::size_t ci, h, w;     // input of the regular convolution
  std::size_t co, ho, wo;   // its output
  std::size_t kh, kw, stride, pad;
};

// Range of output columns whose tap kx lands inside [0, w).
inline std::pair<std::int64_t, std::int64_t> valid_range(std::int64_t n_in, std::int64_t n_out, std::int64_t k,
                                                         std::int64_t s, std::int64_t p) {
  std::int64_t lo_num = p - k;
  std::int64_t lo = lo_num <= 0 ? 0 : (lo_num + s - 1) / s;
  std::int64_t hi_num = n_in - 1 + p - k;
  std::int64_t hi = hi_num < 0 ? -1 : hi_num / s;
  return {lo, std::min(hi, n_out - 1)};
}

// out[co,oy,ox] += sum w[co,ci,ky,kx] * in[ci, oy*s-p+ky, ox*s-p+kx]
template <typename T>
void conv_forward(const T* in, const T* wt, T* out, const ConvGeom& g) {
  const auto s = static_cast<std::int64_t>(g.stride);
  const auto p = static_cast<std::int64_t>(g.pad);
  for (std::size_t co = 0; co < g.co; ++co) {
    T* out_c = out + co * g.ho * g.wo;
    for (std::size_t ci = 0; ci < g.ci; ++ci) {
      const T* in_c = in + ci * g.h * g.w;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        auto [y0, y1] = valid_range(g.h, g.ho, ky, s, p);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const T wv = wt[((co * g.ci + ci) * g.kh + ky) * g.kw + kx];
          auto [x0, x1] = valid_range(g.w, g.wo, kx, s, p);
          for (std::int64_t oy = y0; oy <= y1; ++oy) {
            const T* in_row = in_c + (oy * s - p + static_cast<std::int64_t>(ky)) * g.w;
            T* out_row = out_c + oy * g.wo;
            const std::int64_t off = static_cast<std::int64_t>(kx) - p;
            if (s == 1) {
              for (std::int64_t ox = x0; ox <= x1; ++ox) out_row[ox] += wv * in_row[ox + off];
            } else {
              for (std::int64_t ox = x0; ox <= x1; ++ox) out_row[ox] += wv * in_row[ox * s + off];
            }
          }
        }
      }
    }
  }
}

// gin[ci, oy*s-p+ky, ox*s-p+kx] += w[co,ci,ky,kx] * gout[co,oy,ox]
template <typename T>
void conv_backward_data(const T* gout, const T* wt, T* gin, const ConvGeom& g) {
  const auto s = static_cast<std::int64_t>(g.stride);
  const auto p = static_cast<std::int64_t>(g.pad);
  for (std::size_t co = 0; co < g.co; ++co) {
    const T* gout_c = gout + co * g.ho * g.wo;
    for (std::size_t ci = 0; ci < g.ci; ++ci) {
      T* gin_c = gin + ci * g.h * g.w;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        auto [y0, y1] = valid_range(g.h, g.ho, ky, s, p);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const T wv = wt[((co * g.ci + ci) * g.kh + ky) * g.kw + kx];
          auto [x0, x1] = valid_range(g.w, g.wo, kx, s, p);
          for (std::int64_t oy = y0; oy <= y1; ++oy) {
            T* gin_row = gin_c + (oy * s - p + static_cast<std::int64_t>(ky)) * g.w;
            const T* gout_row = gout_c + oy * g.wo;
            const std::int64_t off = static_cast<std::int64_t>(kx) - p;
            for (std::int64_t ox = x0; ox <= x1; ++ox) gin_row[ox * s + off] += wv * gout_row[ox];
          }
        }
      }
    }
  }
}

// gw[co,ci,ky,kx] += sum_{oy,ox} gout[co,oy,ox] * in[ci, oy*s-p+ky, ox*s-p+kx]
template <typename T>
void conv_backward_weight(const T* gout, const T* in, T* gw, const ConvGeom& g) {
  const auto s = static_cast<std::int64_t>(g.stride);
  const auto p = static_cast<std::int64_t>(g.pad);
  for (std::size_t co = 0; co < g.co; ++co) {
    const T* gout_c = gout + co * g.ho * g.wo;
    for (std::size_t ci = 0; ci < g.ci; ++ci) {
      const T* in_c = in + ci * g.h * g.w;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        auto [y0, y1] = valid_range(g.h, g.ho, ky, s, p);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          auto [x0, x1] = valid_range(g.w, g.wo, kx, s, p);
          const std::int64_t off = static_cast<std::int64_t>(kx) - p;
          double acc = 0.0;
          for (std::int64_t oy = y0; oy <= y1; ++oy) {
            const T* in_row = in_c + (oy * s - p + static_cast<std::int64_t>(ky)) * g.w;
            const T* gout_row = gout_c + oy * g.wo;
            T row_acc{0};
            for (std::int64_t ox = x0; ox <= x1; ++ox) row_acc += gout_row[ox] * in_row[ox * s + off];
            acc += static_cast<double>(row_acc);
          }
          gw[((co * g.ci + ci) * g.kh + ky) * g.kw + kx] += static_cast<T>(acc);
        }
      }
    }
  }
}

}  // namespace detail

/**
 * 2-D convolution (cross-correlation, no kernel flip) over a [C,H,W] input.
 * With spec.transposed set, computes the transposed convolution instead.
 * Differentiable with respect to input, weights and bias.
 */
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, const ConvSpec& spec) {
  spec.validate();
  if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_str(input.shape()));
  if (input.dim(0) != spec.in_channels)
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(0)) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  require_same_shape(weights.shape(), spec.weight_shape(), "conv2d weights");
  require_same_shape(bias.shape(), Shape{spec.out_channels}, "conv2d bias");
  require_finite(input, "conv2d");

  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  const auto [ho, wo] = spec.output_size(h, w);
  const std::size_t plane = ho * wo;
  std::vector<T> out(spec.out_channels * plane);
  for (std::size_t c = 0; c < spec.out_channels; ++c)
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(c * plane), plane, bias[c]);

  // A transposed layer is the data-gradient of the regular conv mapping out -> in.
  detail::ConvGeom g;
  if (!spec.transposed) {
    g = {spec.in_channels, h, w, spec.out_channels, ho, wo, spec.kernel_h, spec.kernel_w, spec.stride, spec.padding};
    detail::conv_forward(input.data().data(), weights.data().data(), out.data(), g);
  } else {
    g = {spec.out_channels, ho, wo, spec.in_channels, h, w, spec.kernel_h, spec.kernel_w, spec.stride, spec.padding};
    detail::conv_backward_data(input.data().data(), weights.data().data(), out.data(), g);
  }

  const bool transposed = spec.transposed;
  const std::size_t co = spec.out_channels;
  return Tensor<T>::from_op(
      {spec.out_channels, ho, wo}, std::move(out), {input, weights, bias},
      [g, transposed, co, plane](const typename Tensor<T>::NodeType& self) {
        auto& in_node = *self.parents[0];
        auto& w_node = *self.parents[1];
        auto& b_node = *self.parents[2];
        const T* gy = self.grad.data();
        if (!transposed) {
          if (in_node.requires_grad) detail::conv_backward_data(gy, w_node.value.data(), in_node.grad.data(), g);
          if (w_node.requires_grad) detail::conv_backward_weight(gy, in_node.value.data(), w_node.grad.data(), g);
        } else {
          if (in_node.requires_grad) detail::conv_forward(gy, w_node.value.data(), in_node.grad.data(), g);
          if (w_node.requires_grad) detail::conv_backward_weight(in_node.value.data(), gy, w_node.grad.data(), g);
        }
        if (b_node.requires_grad) {
          for (std::size_t c = 0; c < co; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += gy[c * plane + i];
            b_node.grad[c] += static_cast<T>(acc);
          }
        }
      });
}

/// Exponential linear unit: z for z > 0, alpha * (e^z - 1) otherwise.
template <typename T>
Tensor<T> elu(const Tensor<T>& x, T alpha = T{1}) {
  if (!(alpha > T{0})) throw std::invalid_argument("elu: alpha must be positive");
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : alpha * std::expm1(in[i]);
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [alpha](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      T d = px.value[i] > T{0} ? T{1} : self.value[i] + alpha;
      px.grad[i] += self.grad[i] * d;
    }
  });
}

namespace detail {

template <typename T>
T stable_sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  T e = std::exp(z);
  return e / (T{1} + e);
}

}  // namespace detail

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = detail::stable_sigmoid(in[i]);
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T s = self.value[i];
      px.grad[i] += self.grad[i] * s * (T{1} - s);
    }
  });
}

/**
 * 1-D horizontal correlation between two [C,H,W] feature maps.
 *
 * Channel d of the [max_disp+1, H, W] result holds the channel-mean of
 * left(c,y,x) * right(c,y,x-d); columns with x-d < 0 contribute 0.
 */
template <typename T>
Tensor<T> correlate1d(const Tensor<T>& left, const Tensor<T>& right, std::size_t max_disp) {
  if (left.rank() != 3) throw ShapeError("correlate1d: features must be [C,H,W], got " + shape_str(left.shape()));
  require_same_shape(left.shape(), right.shape(), "correlate1d");
  const std::size_t c = left.dim(0);
  const std::size_t h = left.dim(1);
  const std::size_t w = left.dim(2);
  if (max_disp >= w)
    throw ShapeError("correlate1d: max_disp " + std::to_string(max_disp) + " must be below width " +
                     std::to_string(w));
  require_finite(left, "correlate1d");
  require_finite(right, "correlate1d");

  const std::size_t nd = max_disp + 1;
  const std::size_t plane = h * w;
  const T inv_c = T{1} / static_cast<T>(c);
  std::vector<T> out(nd * plane, T{0});
  const T* l = left.data().data();
  const T* r = right.data().data();
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const T* lrow = l + ch * plane + y * w;
        const T* rrow = r + ch * plane + y * w;
        T* orow = out.data() + d * plane + y * w;
        for (std::size_t x = d; x < w; ++x) orow[x] += lrow[x] * rrow[x - d];
      }
    }
  }
  for (auto& v : out) v *= inv_c;

  return Tensor<T>::from_op(
      {nd, h, w}, std::move(out), {left, right}, [=](const typename Tensor<T>::NodeType& self) {
        auto& pl = *self.parents[0];
        auto& pr = *self.parents[1];
        for (std::size_t d = 0; d < nd; ++d) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < h; ++y) {
              const T* g = self.grad.data() + d * plane + y * w;
              const std::size_t row = ch * plane + y * w;
              if (pl.requires_grad)
                for (std::size_t x = d; x < w; ++x) pl.grad[row + x] += g[x] * pr.value[row + x - d] * inv_c;
              if (pr.requires_grad)
                for (std::size_t x = d; x < w; ++x) pr.grad[row + x - d] += g[x] * pl.value[row + x] * inv_c;
            }
          }
        }
      });
}

enum class LossKind { L1, L2 };

inline const char* to_string(LossKind kind) { return kind == LossKind::L1 ? "L1" : "L2"; }

/// Mean absolute (L1) or mean squared (L2) error, as a scalar tensor.
template <typename T>
Tensor<T> loss(const Tensor<T>& pred, const Tensor<T>& target, LossKind kind) {
  require_same_shape(pred.shape(), target.shape(), "loss");
  require_finite(pred, "loss");
  require_finite(target, "loss");
  auto p = pred.data();
  auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += kind == LossKind::L1 ? std::abs(d) : d * d;
  }
  const double n = static_cast<double>(p.size());
  return Tensor<T>::from_op(
      {1}, {static_cast<T>(acc / n)}, {pred, target}, [kind, n](const typename Tensor<T>::NodeType& self) {
        auto& pp = *self.parents[0];
        auto& pt = *self.parents[1];
        const T g = self.grad[0];
        for (std::size_t i = 0; i < pp.value.size(); ++i) {
          T d = pp.value[i] - pt.value[i];
          T dl = kind == LossKind::L1 ? static_cast<T>((d > T{0}) - (d < T{0})) : T{2} * d;
          dl = static_cast<T>(static_cast<double>(dl) / n) * g;
          if (pp.requires_grad) pp.grad[i] += dl;
          if (pt.requires_grad) pt.grad[i] -= dl;
        }
      });
}

/// Per-channel standardization of an [C,H,W] tensor: (x - mean) / sqrt(var + eps) over each plane.
template <typename T>
Tensor<T> standardize_channels(const Tensor<T>& x, double eps = 1e-10) {
  if (x.rank() != 3) throw ShapeError("standardize_channels: input must be [C,H,W], got " + shape_str(x.shape()));
  const std::size_t c = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  const auto n = static_cast<double>(plane);
  auto in = x.data();
  std::vector<T> out(in.size());
  std::vector<double> inv_sd(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* v = in.data() + ch * plane;
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += v[i];
    mean /= n;
    for (std::size_t i = 0; i < plane; ++i) var += (v[i] - mean) * (v[i] - mean);
    inv_sd[ch] = 1.0 / std::sqrt(var / n + eps);
    for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] = static_cast<T>((v[i] - mean) * inv_sd[ch]);
  }
  return Tensor<T>::from_op(
      x.shape(), std::move(out), {x}, [c, plane, n, inv_sd](const typename Tensor<T>::NodeType& self) {
        auto& px = *self.parents[0];
        for (std::size_t ch = 0; ch < c; ++ch) {
          const T* g = self.grad.data() + ch * plane;
          const T* y = self.value.data() + ch * plane;
          double mg = 0.0, mgy = 0.0;
          for (std::size_t i = 0; i < plane; ++i) {
            mg += g[i];
            mgy += static_cast<double>(g[i]) * y[i];
          }
          mg /= n;
          mgy /= n;
          for (std::size_t i = 0; i < plane; ++i)
            px.grad[ch * plane + i] += static_cast<T>((g[i] - mg - y[i] * mgy) * inv_sd[ch]);
        }
      });
}

/// Softmax across the leading axis of an [N,H,W] tensor, independently per pixel.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("softmax_channels: input must be [N,H,W], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < plane; ++i) {
    T mx = in[i];
    for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, in[k * plane + i]);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      out[k * plane + i] = std::exp(in[k * plane + i] - mx);
      sum += out[k * plane + i];
    }
    for (std::size_t k = 0; k < n; ++k) out[k * plane + i] = static_cast<T>(out[k * plane + i] / sum);
  }
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [n, plane](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < plane; ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += self.grad[k * plane + i] * self.value[k * plane + i];
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k * plane + i;
        px.grad[j] += self.value[j] * static_cast<T>(self.grad[j] - dot);
      }
    }
  });
}

/**
 * Per-pixel weighted sum of a stack of images.
 * weights: [N,H,W], stack: [N,C,H,W] -> [C,H,W].
 */
template <typename T>
Tensor<T> blend(const Tensor<T>& weights, const Tensor<T>& stack) {
  if (weights.rank() != 3 || stack.rank() != 4)
    throw ShapeError("blend: expects [N,H,W] weights and [N,C,H,W] stack, got " + shape_str(weights.shape()) +
                     " and " + shape_str(stack.shape()));
  if (weights.dim(0) != stack.dim(0) || weights.dim(1) != stack.dim(2) || weights.dim(2) != stack.dim(3))
    throw ShapeError("blend: weights " + shape_str(weights.shape()) + " do not match stack " +
                     shape_str(stack.shape()));
  const std::size_t n = stack.dim(0);
  const std::size_t c = stack.dim(1);
  const std::size_t plane = stack.dim(2) * stack.dim(3);
  auto wv = weights.data();
  auto sv = stack.data();
  std::vector<T> out(c * plane, T{0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* s = sv.data() + (k * c + ch) * plane;
      const T* w = wv.data() + k * plane;
      T* o = out.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) o[i] += w[i] * s[i];
    }
  return Tensor<T>::from_op(
      {c, stack.dim(2), stack.dim(3)}, std::move(out), {weights, stack},
      [n, c, plane](const typename Tensor<T>::NodeType& self) {
        auto& pw = *self.parents[0];
        auto& ps = *self.parents[1];
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t sbase = (k * c + ch) * plane;
            const T* g = self.grad.data() + ch * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              if (pw.requires_grad) pw.grad[k * plane + i] += g[i] * ps.value[sbase + i];
              if (ps.requires_grad) ps.grad[sbase + i] += g[i] * pw.value[k * plane + i];
            }
          }
      });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T v) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& e : out) e += v;
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& e : out) e *= factor;
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [factor](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b}, [](const typename Tensor<T>::NodeType& self) {
    for (auto& p : self.parents)
      if (p->requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b}, [](const typename Tensor<T>::NodeType& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

/// Sum of all elements as a scalar tensor (64-bit accumulation).
template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return Tensor<T>::from_op({1}, {static_cast<T>(acc)}, {x}, [](const typename Tensor<T>::NodeType& self) {
    auto& px = *self.parents[0];
    for (auto& g : px.grad) g += self.grad[0];
  });
}

/**
 * Crops or zero-pads the bottom/right edges of a [C,h,w] tensor to [C,H,W].
 * Used where stride-2 encoders and decoders do not round-trip odd sizes.
 */
template <typename T>
Tensor<T> fit2d(const Tensor<T>& x, std::size_t height, std::size_t width) {
  if (x.rank() != 3) throw ShapeError("fit2d: input must be [C,H,W], got " + shape_str(x.shape()));
  const std::size_t c = x.dim(0);
  const std::size_t h = x.dim(1);
  const std::size_t w = x.dim(2);
  if (h == height && w == width) return x;
  const std::size_t ch = std::min(h, height);
  const std::size_t cw = std::min(w, width);
  std::vector<T> out(c * height * width, T{0});
  auto in = x.data();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < ch; ++y)
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>((k * h + y) * w), cw,
                  out.begin() + static_cast<std::ptrdiff_t>((k * height + y) * width));
  return Tensor<T>::from_op(
      {c, height, width}, std::move(out), {x}, [=](const typename Tensor<T>::NodeType& self) {
        auto& px = *self.parents[0];
        for (std::size_t k = 0; k < c; ++k)
          for (std::size_t y = 0; y < ch; ++y)
            for (std::size_t xx = 0; xx < cw; ++xx)
              px.grad[(k * h + y) * w + xx] += self.grad[(k * height + y) * width + xx];
      });
}

}  // namespace vision

#endif  // VISION_OPS_HPP_
