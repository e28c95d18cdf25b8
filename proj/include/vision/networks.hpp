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

#ifndef VISION_NETWORKS_HPP_
#define VISION_NETWORKS_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vision/depth.hpp"
#include "vision/ops.hpp"
#include "vision/optim.hpp"

namespace vision {

enum class Activation { None, Elu };

/// One convolution (or transposed convolution) with its activation.
struct LayerSpec {
  std::string name;
  ConvSpec conv;
  Activation activation = Activation::Elu;
};

/// Parses "name conv|deconv in out kernel stride pad elu|none".
inline LayerSpec parse_layer(const std::string& text) {
  std::istringstream is(text);
  LayerSpec layer;
  std::string kind;
  std::string act;
  std::size_t k = 0;
  if (!(is >> layer.name >> kind >> layer.conv.in_channels >> layer.conv.out_channels >> k >> layer.conv.stride >>
        layer.conv.padding >> act))
    throw ConfigError("layer spec '" + text + "': expected 'name conv|deconv in out kernel stride pad elu|none'");
  if (kind != "conv" && kind != "deconv") throw ConfigError("layer spec '" + text + "': unknown kind " + kind);
  if (act != "elu" && act != "none") throw ConfigError("layer spec '" + text + "': unknown activation " + act);
  layer.conv.transposed = kind == "deconv";
  layer.conv.kernel_h = layer.conv.kernel_w = k;
  layer.activation = act == "elu" ? Activation::Elu : Activation::None;
  layer.conv.validate();
  return layer;
}

inline std::string format_layer(const LayerSpec& l) {
  std::ostringstream os;
  os << l.name << ' ' << (l.conv.transposed ? "deconv" : "conv") << ' ' << l.conv.in_channels << ' '
     << l.conv.out_channels << ' ' << l.conv.kernel_h << ' ' << l.conv.stride << ' ' << l.conv.padding << ' '
     << (l.activation == Activation::Elu ? "elu" : "none");
  return os.str();
}

namespace detail {

inline void check_chain(const std::vector<LayerSpec>& layers, std::size_t in, std::size_t out, const char* what) {
  if (layers.empty()) throw ConfigError(std::string(what) + ": no layers");
  std::size_t ch = in;
  for (const auto& l : layers) {
    l.conv.validate();
    if (l.conv.in_channels != ch)
      throw ConfigError(std::string(what) + ": layer " + l.name + " expects " + std::to_string(l.conv.in_channels) +
                        " channels but receives " + std::to_string(ch));
    ch = l.conv.out_channels;
  }
  if (out != 0 && ch != out)
    throw ConfigError(std::string(what) + ": ends with " + std::to_string(ch) + " channels, needs " +
                      std::to_string(out));
}

inline LayerSpec layer(std::string name, bool deconv, std::size_t in, std::size_t out, std::size_t k,
                       std::size_t stride, std::size_t pad, Activation act = Activation::Elu) {
  return {std::move(name), ConvSpec{in, out, k, k, stride, pad, deconv}, act};
}

}  // namespace detail

/**
 * Right-view synthesis network: an encoder-decoder predicts selection logits
 * for each shifted copy of the left image, the copies are blended, and a
 * short refinement stack produces the right image.
 */
struct SynthNetConfig {
  std::vector<LayerSpec> encoder_decoder;
  std::vector<LayerSpec> refine;
  std::size_t selection_channels = 33;
  std::size_t input_height = 300;
  std::size_t input_width = 300;

  void validate() const {
    if (selection_channels == 0 || selection_channels > input_width)
      throw ConfigError("synthesis config: selection channels must be in [1, input width]");
    detail::check_chain(encoder_decoder, 3, selection_channels, "synthesis encoder-decoder");
    detail::check_chain(refine, 3, 3, "synthesis refinement");
  }

  /// 4 stride-2 convs 3->16->32->64->128, 4 deconvs back to the selection volume, 2 refinement convs.
  static SynthNetConfig defaults(std::size_t height = 300, std::size_t width = 300, std::size_t shifts = 33) {
    using detail::layer;
    SynthNetConfig cfg;
    cfg.selection_channels = shifts;
    cfg.input_height = height;
    cfg.input_width = width;
    cfg.encoder_decoder = {
        layer("enc1", false, 3, 16, 3, 2, 1),     layer("enc2", false, 16, 32, 3, 2, 1),
        layer("enc3", false, 32, 64, 3, 2, 1),    layer("enc4", false, 64, 128, 3, 2, 1),
        layer("dec1", true, 128, 64, 4, 2, 1),    layer("dec2", true, 64, 32, 4, 2, 1),
        layer("dec3", true, 32, 16, 4, 2, 1),     layer("dec4", true, 16, shifts, 4, 2, 1, Activation::None),
    };
    cfg.refine = {layer("ref1", false, 3, 16, 3, 1, 1), layer("ref2", false, 16, 3, 3, 1, 1, Activation::None)};
    return cfg;
  }
};

/// Stereo matcher: shared conv towers, 1-D correlation, conv/deconv head, ELU + alpha output.
struct MatcherConfig {
  std::vector<LayerSpec> tower;
  std::vector<LayerSpec> head;
  std::size_t max_disp = 32;
  double output_alpha = 1.0;

  void validate() const {
    detail::check_chain(tower, 3, 0, "matcher tower");
    detail::check_chain(head, max_disp + 1, 1, "matcher head");
    if (!(output_alpha > 0.0)) throw ConfigError("matcher config: output alpha must be positive");
    for (const auto& l : tower)
      if (l.conv.stride != 1 || l.conv.transposed || l.conv.kernel_h != 2 * l.conv.padding + 1)
        throw ConfigError("matcher tower layer " + l.name + " must preserve resolution");
  }

  /// 2-conv towers 3->16->32, correlation over 0..32, 3 convs + 2 deconvs to one channel.
  static MatcherConfig defaults(std::size_t max_disp = 32) {
    using detail::layer;
    MatcherConfig cfg;
    cfg.max_disp = max_disp;
    cfg.tower = {layer("tower1", false, 3, 16, 3, 1, 1), layer("tower2", false, 16, 32, 3, 1, 1)};
    cfg.head = {
        layer("head1", false, max_disp + 1, 32, 3, 2, 1), layer("head2", false, 32, 32, 3, 2, 1),
        layer("head3", false, 32, 32, 3, 1, 1),           layer("head4", true, 32, 16, 4, 2, 1),
        layer("head5", true, 16, 1, 4, 2, 1, Activation::None),
    };
    return cfg;
  }
};

/// Named parameter tensors in a fixed order (weights, then bias, per layer).
template <typename T = float>
class ParamSet {
 public:
  void add(std::string name, Tensor<T> t) {
    for (const auto& [n, _] : entries_)
      if (n == name) throw ConfigError("duplicate parameter name " + name);
    entries_.emplace_back(std::move(name), std::move(t));
  }

  const Tensor<T>& get(const std::string& name) const {
    for (const auto& [n, t] : entries_)
      if (n == name) return t;
    throw ConfigError("unknown parameter " + name);
  }

  std::vector<Tensor<T>> tensors() const {
    std::vector<Tensor<T>> out;
    for (const auto& [_, t] : entries_) out.push_back(t);
    return out;
  }

  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Copies values from another set with identical names and shapes.
  void assign(const std::vector<std::pair<std::string, Tensor<T>>>& values) {
    for (const auto& [name, src] : values) {
      const Tensor<T>* dst = nullptr;
      for (const auto& [n, t] : entries_)
        if (n == name) dst = &t;
      if (!dst) throw ConfigError("unknown parameter name '" + name + "'");
      require_same_shape(src.shape(), dst->shape(), name.c_str());
      Tensor<T> d = *dst;
      std::copy(src.data().begin(), src.data().end(), d.data().begin());
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

namespace detail {

template <typename T>
void init_layers(ParamSet<T>& params, const std::vector<LayerSpec>& layers, std::mt19937& rng) {
  for (const auto& l : layers) {
    params.add(l.name + ".weight", init_uniform<T>(l.conv.weight_shape(), l.conv.fan_in(), rng));
    params.add(l.name + ".bias", Tensor<T>::zeros({l.conv.out_channels}, true));
  }
}

template <typename T>
Tensor<T> run_layers(const ParamSet<T>& params, const std::vector<LayerSpec>& layers, Tensor<T> x) {
  for (const auto& l : layers) {
    x = conv2d(x, params.get(l.name + ".weight"), params.get(l.name + ".bias"), l.conv);
    if (l.activation == Activation::Elu) x = elu(x, T{1});
  }
  return x;
}

}  // namespace detail

template <typename T = float>
class SynthesisNet {
 public:
  SynthesisNet(SynthNetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    detail::init_layers(params_, cfg_.encoder_decoder, rng);
    detail::init_layers(params_, cfg_.refine, rng);
  }

  const SynthNetConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  void check_input(const Tensor<T>& left) const {
    if (left.rank() != 3 || left.dim(0) != 3 || left.dim(1) != cfg_.input_height ||
        left.dim(2) != cfg_.input_width)
      throw ShapeError("synthesis network expects [3," + std::to_string(cfg_.input_height) + "," +
                       std::to_string(cfg_.input_width) + "], got " + shape_str(left.shape()));
  }

  /// Selection logits in front of the disparity-introducing layer, [selection_channels,H,W].
  Tensor<T> selection(const Tensor<T>& left) const {
    check_input(left);
    auto logits = detail::run_layers(params_, cfg_.encoder_decoder, standardize_channels(left));
    return fit2d(logits, cfg_.input_height, cfg_.input_width);
  }

  Tensor<T> forward(const Tensor<T>& left) const {
    auto blended = disparity_select(selection(left), shift_stack(left, cfg_.selection_channels));
    return detail::run_layers(params_, cfg_.refine, blended);
  }

 private:
  SynthNetConfig cfg_;
  ParamSet<T> params_;
};

template <typename T = float>
class MatcherNet {
 public:
  MatcherNet(MatcherConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    detail::init_layers(params_, cfg_.tower, rng);
    detail::init_layers(params_, cfg_.head, rng);
  }

  const MatcherConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// Non-negative disparity, [1,H,W].
  Tensor<T> forward(const Tensor<T>& left, const Tensor<T>& right) const {
    require_same_shape(left.shape(), right.shape(), "stereo matcher");
    if (left.rank() != 3 || left.dim(0) != 3) throw ShapeError("stereo matcher expects [3,H,W] images");
    const std::size_t h = left.dim(1);
    const std::size_t w = left.dim(2);
    if (w <= cfg_.max_disp)
      throw ShapeError("stereo matcher: width " + std::to_string(w) + " must exceed max disparity " +
                       std::to_string(cfg_.max_disp));
    auto fl = detail::run_layers(params_, cfg_.tower, standardize_channels(left));
    auto fr = detail::run_layers(params_, cfg_.tower, standardize_channels(right));
    auto cost = correlate1d(fl, fr, cfg_.max_disp);
    auto out = fit2d(detail::run_layers(params_, cfg_.head, cost), h, w);
    const T alpha = static_cast<T>(cfg_.output_alpha);
    return add_scalar(elu(out, alpha), alpha);
  }

 private:
  MatcherConfig cfg_;
  ParamSet<T> params_;
};

/// Synthesized right view, same shape as the left input.
template <typename T>
Tensor<T> synthesize_right(const Tensor<T>& left, const SynthesisNet<T>& net) {
  return net.forward(left);
}

inline DisparityMap match_stereo(const Tensor<float>& left, const Tensor<float>& right, const MatcherNet<float>& net) {
  return {net.forward(left, right).detach()};
}

}  // namespace vision

#endif  // VISION_NETWORKS_HPP_
