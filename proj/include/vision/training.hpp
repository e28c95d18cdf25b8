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

#ifndef VISION_TRAINING_HPP_
#define VISION_TRAINING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vision/networks.hpp"
#include "vision/optim.hpp"
#include "vision/stereo_data.hpp"

namespace vision {

struct TrainPlan {
  LossKind loss_kind = LossKind::L1;
  std::size_t epochs = 50;
  OptimConfig optim;

  /// L1 loss, 50 epochs.
  static TrainPlan synthesis_defaults() {
    TrainPlan p;
    p.loss_kind = LossKind::L1;
    p.epochs = 50;
    p.optim.kind = OptimizerKind::Adam;
    return p;
  }

  /// L2 loss, 300 epochs.
  static TrainPlan matcher_defaults() {
    TrainPlan p;
    p.loss_kind = LossKind::L2;
    p.epochs = 300;
    p.optim.kind = OptimizerKind::Adam;
    return p;
  }
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

namespace detail {

// Mini-batch loop: per-sample graphs, gradients accumulated at 1/batch, one
// optimizer step per batch. Returns the mean sample loss of each epoch.
inline std::vector<double> run_training(ParamSet<float>& params, std::size_t count, const TrainPlan& plan,
                                        std::uint64_t seed,
                                        const std::function<Tensor<float>(std::size_t)>& sample_loss,
                                        const EpochCallback& on_epoch) {
  plan.optim.validate();
  if (count == 0) throw std::invalid_argument("train_network: empty dataset");
  auto tensors = params.tensors();
  for (auto& t : tensors) t.zero_grad();
  Optimizer<float> opt(plan.optim);
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  history.reserve(plan.epochs);

  for (std::size_t epoch = 0; epoch < plan.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < count; start += plan.optim.batch_size) {
      const std::size_t stop = std::min(count, start + plan.optim.batch_size);
      const float inv = 1.0f / static_cast<float>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        auto l = sample_loss(order[k]);
        const double v = l.item();
        if (!std::isfinite(v))
          throw NumericError("train_network: non-finite loss at epoch " + std::to_string(epoch + 1) + ", sample " +
                             std::to_string(order[k]));
        total += v;
        backward(scale(l, inv));
      }
      opt.step(std::span<Tensor<float>>(tensors));
    }
    history.push_back(total / static_cast<double>(count));
    if (on_epoch) on_epoch(epoch, history.back());
  }
  return history;
}

}  // namespace detail

/// Trains the right-view synthesis network on (left, true right) pairs.
inline std::vector<double> train_network(SynthesisNet<float>& net, std::span<const StereoSample> data,
                                         const TrainPlan& plan, std::uint64_t seed,
                                         const EpochCallback& on_epoch = {}) {
  return detail::run_training(
      net.params(), data.size(), plan, seed,
      [&](std::size_t i) { return loss(net.forward(data[i].left), data[i].right, plan.loss_kind); }, on_epoch);
}

/// Trains the stereo matcher on (left, right, ground-truth disparity) triples.
inline std::vector<double> train_network(MatcherNet<float>& net, std::span<const StereoSample> data,
                                         const TrainPlan& plan, std::uint64_t seed,
                                         const EpochCallback& on_epoch = {}) {
  for (const auto& s : data)
    if (!s.disparity) throw std::invalid_argument("train_network: matcher samples need ground-truth disparity");
  return detail::run_training(
      net.params(), data.size(), plan, seed,
      [&](std::size_t i) {
        return loss(net.forward(data[i].left, data[i].right), *data[i].disparity, plan.loss_kind);
      },
      on_epoch);
}

}  // namespace vision

#endif  // VISION_TRAINING_HPP_
