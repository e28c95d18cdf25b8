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

#ifndef VISION_OPTIM_HPP_
#define VISION_OPTIM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vision/ops.hpp"
#include "vision/tensor.hpp"

namespace vision {

enum class OptimizerKind { Sgd, Adam };

inline const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

struct OptimConfig {
  double learning_rate = 0.0003;
  double weight_decay = 1e-6;
  std::size_t batch_size = 16;
  OptimizerKind kind = OptimizerKind::Sgd;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
  }
};

namespace detail {

template <typename T>
void require_finite_grads(std::span<Tensor<T>> params) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (T g : params[i].grad())
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter #" + std::to_string(i));
}

}  // namespace detail

/**
 * Stateful parameter update. Sgd is p <- p - lr * (g + wd * p); Adam uses
 * bias-corrected moments with the same decoupled decay term. Gradients are
 * cleared after each step.
 */
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const OptimConfig& config() const { return cfg_; }

  void step(std::span<Tensor<T>> params) {
    detail::require_finite_grads(params);
    const double lr = cfg_.learning_rate;
    const double wd = cfg_.weight_decay;
    if (cfg_.kind == OptimizerKind::Sgd) {
      for (auto& p : params) {
        auto v = p.data();
        auto g = p.grad();
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] = static_cast<T>(v[i] - lr * (static_cast<double>(g[i]) + wd * v[i]));
        p.zero_grad();
      }
      return;
    }
    if (first_.size() != params.size()) {
      first_.assign(params.size(), {});
      second_.assign(params.size(), {});
      for (std::size_t k = 0; k < params.size(); ++k) {
        first_[k].assign(params[k].numel(), 0.0);
        second_[k].assign(params[k].numel(), 0.0);
      }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto v = params[k].data();
      auto g = params[k].grad();
      auto& m = first_[k];
      auto& s = second_[k];
      for (std::size_t i = 0; i < v.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        s[i] = kBeta2 * s[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double update = (m[i] / c1) / (std::sqrt(s[i] / c2) + kEps);
        v[i] = static_cast<T>(v[i] - lr * (update + wd * v[i]));
      }
      params[k].zero_grad();
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimConfig cfg_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

/**
 * Back-propagates a scalar loss and applies one plain gradient-descent step
 * with decoupled weight decay to every parameter reached by the graph.
 * Unreached parameters are left untouched and reported through warn().
 */
template <typename T>
void backward_and_step(const Tensor<T>& loss_node, std::span<Tensor<T>> params, const OptimConfig& cfg) {
  cfg.validate();
  const auto trace = backward(loss_node);
  std::vector<Tensor<T>> reached;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (trace.contains(params[i].node().get())) {
      reached.push_back(params[i]);
    } else {
      warn("backward_and_step: parameter #" + std::to_string(i) + " is not part of the loss graph; skipped");
    }
  }
  OptimConfig sgd = cfg;
  sgd.kind = OptimizerKind::Sgd;
  Optimizer<T>(sgd).step(std::span<Tensor<T>>(reached));
}

/// Seeded uniform initialisation in +-sqrt(1 / fan_in).
template <typename T>
Tensor<T> init_uniform(const Shape& shape, std::size_t fan_in, std::mt19937& rng) {
  const T bound = static_cast<T>(std::sqrt(1.0 / static_cast<double>(fan_in)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(shape_numel(shape));
  for (auto& e : v) e = static_cast<T>(dist(rng));
  return Tensor<T>(shape, std::move(v), true);
}

}  // namespace vision

#endif  // VISION_OPTIM_HPP_
