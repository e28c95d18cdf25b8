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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "support.hpp"
#include "vision/depth.hpp"
#include "vision/networks.hpp"
#include "vision/stereo_data.hpp"
#include "vision/training.hpp"

namespace vision {
namespace {

using testing::random_tensor;

TEST(ShiftStack, SliceZeroIsBitIdentical) {
  std::mt19937 rng(1);
  auto img = random_tensor<float>({3, 5, 7}, rng);
  auto s = shift_stack(img, 4);
  ASSERT_EQ(s.shape(), (Shape{4, 3, 5, 7}));
  for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(s[i], img[i]);
}

TEST(ShiftStack, MatchesIndexOracle) {
  std::mt19937 rng(2);
  auto img = random_tensor<float>({2, 3, 6}, rng);
  auto s = shift_stack(img, 6);
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(s.at(k, c, y, x), img.at(c, y, std::min<std::size_t>(x + k, 5)));
}

TEST(ShiftStack, RejectsTooManyShifts) {
  EXPECT_THROW(shift_stack(Tensor<float>::zeros({3, 4, 4}), 5), ShapeError);
  EXPECT_THROW(shift_stack(Tensor<float>::zeros({3, 4, 4}), 0), ShapeError);
  EXPECT_EQ(shift_stack(Tensor<float>::zeros({3, 4, 33})).dim(0), 33u);
}

Tensor<float> one_hot(std::size_t n, std::size_t k, std::size_t h, std::size_t w, float logit = 50.0f) {
  auto t = Tensor<float>::zeros({n, h, w});
  for (std::size_t i = 0; i < h * w; ++i) t.data()[k * h * w + i] = logit;
  return t;
}

TEST(DisparitySelect, OneHotPicksTheSlice) {
  std::mt19937 rng(3);
  auto img = random_tensor<float>({3, 4, 9}, rng, 0.0, 1.0);
  auto stack = shift_stack(img, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    auto out = disparity_select(one_hot(5, k, 4, 9), stack);
    for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_NEAR(out[i], stack[k * img.numel() + i], 1e-4);
  }
}

TEST(DisparitySelect, UniformLogitsAverageTheSlices) {
  std::mt19937 rng(4);
  auto img = random_tensor<float>({3, 2, 6}, rng, 0.0, 1.0);
  auto stack = shift_stack(img, 6);
  auto out = disparity_select(Tensor<float>::full({6, 2, 6}, 0.3f), stack);
  for (std::size_t i = 0; i < img.numel(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < 6; ++k) mean += stack[k * img.numel() + i];
    EXPECT_NEAR(out[i], mean / 6.0, 1e-6);
  }
}

TEST(DisparitySelect, OutputIsAConvexCombination) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto img = random_tensor<float>({3, 3, 8}, rng, -2.0, 2.0);
    auto stack = shift_stack(img, 8);
    auto out = disparity_select(random_tensor<float>({8, 3, 8}, rng, -5.0, 5.0), stack);
    for (std::size_t i = 0; i < img.numel(); ++i) {
      float lo = stack[i], hi = stack[i];
      for (std::size_t k = 1; k < 8; ++k) {
        lo = std::min(lo, stack[k * img.numel() + i]);
        hi = std::max(hi, stack[k * img.numel() + i]);
      }
      EXPECT_GE(out[i], lo - 1e-5f);
      EXPECT_LE(out[i], hi + 1e-5f);
    }
  }
}

TEST(DisparitySelect, RejectsShapeMismatch) {
  auto stack = shift_stack(Tensor<float>::zeros({3, 4, 6}), 4);
  EXPECT_THROW(disparity_select(Tensor<float>::zeros({3, 4, 6}), stack), ShapeError);
  EXPECT_THROW(disparity_select(Tensor<float>::zeros({4, 4, 5}), stack), ShapeError);
}

DisparityMap disparity(std::vector<float> v) {
  const std::size_t n = v.size();
  return {Tensor<float>({1, 1, n}, std::move(v))};
}

TEST(DepthFromDisparity, KnownValues) {
  EXPECT_FLOAT_EQ(disparity_to_depth(disparity({1.0f}), {1.0, 1.0}).values[0], 1.0f);
  EXPECT_FLOAT_EQ(disparity_to_depth(disparity({35.0f}), {0.5, 700.0}).values[0], 10.0f);
  EXPECT_TRUE(std::isinf(disparity_to_depth(disparity({0.0f}), {0.5, 700.0}).values[0]));
}

TEST(DepthFromDisparity, Errors) {
  EXPECT_THROW(disparity_to_depth(disparity({-1.0f}), {}), std::invalid_argument);
  EXPECT_THROW(disparity_to_depth(disparity({std::nanf("")}), {}), std::invalid_argument);
  EXPECT_THROW(disparity_to_depth(disparity({1.0f}), {0.0, 700.0}), ConfigError);
  EXPECT_THROW(disparity_to_depth(disparity({1.0f}), {0.5, -1.0}), ConfigError);
}

TEST(DepthFromDisparity, DoublingDisparityHalvesDepth) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<float> d(0.01f, 100.0f);
  std::vector<float> a(200), b(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = d(rng);
    b[i] = 2.0f * a[i];
  }
  StereoRig rig{0.54, 721.0};
  auto za = disparity_to_depth(disparity(a), rig);
  auto zb = disparity_to_depth(disparity(b), rig);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_FLOAT_EQ(zb.values[i], za.values[i] / 2.0f);
    if (i > 0 && a[i] > a[i - 1]) EXPECT_LT(za.values[i], za.values[i - 1]);
  }
}

TEST(DepthFromDisparity, RoundTrip) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> d(0.05f, 200.0f);
  std::vector<float> a(500);
  for (auto& v : a) v = d(rng);
  a.push_back(0.0f);
  StereoRig rig{0.3, 650.0};
  auto back = depth_to_disparity(disparity_to_depth(disparity(a), rig), rig);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) EXPECT_NEAR(back.values[i], a[i], 1e-5 * a[i]);
  EXPECT_EQ(back.values[a.size() - 1], 0.0f);
}

// 3x8x8 miniatures of both networks.
SynthNetConfig mini_synth() {
  SynthNetConfig cfg;
  cfg.selection_channels = 4;
  cfg.input_height = 8;
  cfg.input_width = 8;
  cfg.encoder_decoder = {parse_layer("e1 conv 3 4 3 2 1 elu"), parse_layer("d1 deconv 4 4 4 2 1 none")};
  cfg.refine = {parse_layer("r1 conv 3 4 3 1 1 elu"), parse_layer("r2 conv 4 3 3 1 1 none")};
  return cfg;
}

MatcherConfig mini_matcher() {
  MatcherConfig cfg;
  cfg.max_disp = 4;
  cfg.tower = {parse_layer("t1 conv 3 4 3 1 1 elu")};
  cfg.head = {parse_layer("h1 conv 5 4 3 2 1 elu"), parse_layer("h2 deconv 4 1 4 2 1 none")};
  return cfg;
}

TEST(Networks, SynthesisGradients) {
  SynthesisNet<double> net(mini_synth(), 5);
  std::mt19937 rng(8);
  auto left = random_tensor<double>({3, 8, 8}, rng, 0.0, 1.0);
  auto right = random_tensor<double>({3, 8, 8}, rng, 0.0, 1.0);
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> f = [&](const auto&) {
    return loss(net.forward(left), right, LossKind::L2);
  };
  EXPECT_LT(testing::gradcheck(f, net.params().tensors()), 1e-3);
}

TEST(Networks, MatcherGradients) {
  MatcherNet<double> net(mini_matcher(), 6);
  std::mt19937 rng(9);
  auto left = random_tensor<double>({3, 8, 8}, rng, 0.0, 1.0);
  auto right = random_tensor<double>({3, 8, 8}, rng, 0.0, 1.0);
  auto target = random_tensor<double>({1, 8, 8}, rng, 0.0, 3.0);
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> f = [&](const auto&) {
    return loss(net.forward(left, right), target, LossKind::L2);
  };
  EXPECT_LT(testing::gradcheck(f, net.params().tensors()), 1e-3);
}

TEST(Networks, DefaultSynthesisShapeAndDeterminism) {
  auto cfg = SynthNetConfig::defaults(40, 44, 33);
  SynthesisNet<float> a(cfg, 3), b(cfg, 3);
  std::mt19937 rng(10);
  auto left = random_tensor<float>({3, 40, 44}, rng, 0.0, 1.0);
  auto sel = a.selection(left);
  EXPECT_EQ(sel.shape(), (Shape{33, 40, 44}));
  auto ya = a.forward(left);
  auto yb = b.forward(left);
  EXPECT_EQ(ya.shape(), left.shape());
  EXPECT_TRUE(ya.all_finite());
  for (std::size_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya[i], yb[i]);
  EXPECT_THROW(a.forward(Tensor<float>::zeros({3, 40, 40})), ShapeError);
}

TEST(Networks, DefaultSynthesisSelectionVolumeAt300) {
  auto cfg = SynthNetConfig::defaults();
  EXPECT_EQ(cfg.selection_channels, 33u);
  EXPECT_EQ(cfg.input_height, 300u);
  EXPECT_EQ(cfg.input_width, 300u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Networks, MatcherOutputIsNonNegative) {
  MatcherNet<float> net(MatcherConfig::defaults(), 4);
  std::mt19937 rng(11);
  auto l = random_tensor<float>({3, 20, 45}, rng, 0.0, 1.0);
  auto r = random_tensor<float>({3, 20, 45}, rng, 0.0, 1.0);
  auto d = match_stereo(l, r, net);
  EXPECT_EQ(d.values.shape(), (Shape{1, 20, 45}));
  for (float v : d.values.data()) EXPECT_GE(v, 0.0f);
  EXPECT_THROW(match_stereo(l, Tensor<float>::zeros({3, 20, 44}), net), ShapeError);
  EXPECT_THROW(match_stereo(Tensor<float>::zeros({3, 20, 32}), Tensor<float>::zeros({3, 20, 32}), net), ShapeError);
}

TEST(Networks, ConfigValidation) {
  auto cfg = mini_synth();
  cfg.encoder_decoder.back().conv.out_channels = 5;
  EXPECT_THROW(SynthesisNet<float>(cfg, 0), ConfigError);
  auto m = mini_matcher();
  m.tower[0].conv.stride = 2;
  EXPECT_THROW(MatcherNet<float>(m, 0), ConfigError);
  auto m2 = mini_matcher();
  m2.head[0].conv.in_channels = 4;
  EXPECT_THROW(MatcherNet<float>(m2, 0), ConfigError);
}

TEST(Layers, ParseAndFormatRoundTrip) {
  for (const char* text : {"enc1 conv 3 16 3 2 1 elu", "dec4 deconv 16 33 4 2 1 none"}) {
    auto l = parse_layer(text);
    EXPECT_EQ(format_layer(l), text);
  }
  EXPECT_EQ(parse_layer("x deconv 2 3 4 2 1 none").conv.weight_shape(), (Shape{2, 3, 4, 4}));
  EXPECT_ANY_THROW(parse_layer("x conv 3 16 3"));
  EXPECT_ANY_THROW(parse_layer("x pool 3 16 3 1 1 elu"));
}

TEST(Training, ZeroEpochsIsANoOp) {
  SynthesisNet<float> net(SynthNetConfig::defaults(16, 16, 8), 1);
  auto before = net.params().get("enc1.weight").clone();
  auto data = make_synthetic_pairs(2, {16, 16, 2, 1, 4}, 3);
  auto plan = TrainPlan::synthesis_defaults();
  plan.epochs = 0;
  EXPECT_TRUE(train_network(net, data, plan, 1).empty());
  auto after = net.params().get("enc1.weight");
  for (std::size_t i = 0; i < after.numel(); ++i) EXPECT_EQ(after[i], before[i]);
}

TEST(Training, HistoryIsDeterministic) {
  auto data = make_synthetic_pairs(3, {16, 16, 2, 1, 4}, 3);
  auto plan = TrainPlan::synthesis_defaults();
  plan.epochs = 3;
  plan.optim.batch_size = 2;
  SynthesisNet<float> a(SynthNetConfig::defaults(16, 16, 8), 1), b(SynthNetConfig::defaults(16, 16, 8), 1);
  auto ha = train_network(a, data, plan, 9);
  auto hb = train_network(b, data, plan, 9);
  ASSERT_EQ(ha.size(), 3u);
  EXPECT_EQ(ha, hb);
}

TEST(Training, Errors) {
  SynthesisNet<float> net(SynthNetConfig::defaults(16, 16, 8), 1);
  EXPECT_ANY_THROW(train_network(net, std::span<const StereoSample>(), TrainPlan::synthesis_defaults(), 1));
  MatcherNet<float> m(mini_matcher(), 1);
  auto img = Tensor<float>::zeros({3, 8, 8});
  std::vector<StereoSample> no_target{{img, img, std::nullopt}};
  EXPECT_THROW(train_network(m, no_target, TrainPlan::matcher_defaults(), 1), std::invalid_argument);
  std::vector<StereoSample> bad{{Tensor<float>::full({3, 16, 16}, std::numeric_limits<float>::infinity()),
                                 Tensor<float>::zeros({3, 16, 16}), std::nullopt}};
  auto plan = TrainPlan::synthesis_defaults();
  plan.epochs = 1;
  EXPECT_THROW(train_network(net, bad, plan, 1), NumericError);
}

TEST(Training, PlanDefaults) {
  auto s = TrainPlan::synthesis_defaults();
  EXPECT_EQ(s.loss_kind, LossKind::L1);
  EXPECT_EQ(s.epochs, 50u);
  EXPECT_DOUBLE_EQ(s.optim.learning_rate, 0.0003);
  EXPECT_DOUBLE_EQ(s.optim.weight_decay, 1e-6);
  EXPECT_EQ(s.optim.batch_size, 16u);
  auto m = TrainPlan::matcher_defaults();
  EXPECT_EQ(m.loss_kind, LossKind::L2);
  EXPECT_EQ(m.epochs, 300u);
}

TEST(SyntheticScenes, GroundTruthExplainsTheRightView) {
  SyntheticSceneConfig sc{32, 48, 3, 1, 6};
  auto pairs = make_synthetic_pairs(2, sc, 4);
  for (const auto& p : pairs) {
    // Wherever the surface at x + d is the same layer, right(x) == left(x + d).
    std::size_t checked = 0;
    for (std::size_t y = 0; y < sc.height; ++y)
      for (std::size_t x = 0; x < sc.width; ++x) {
        const auto d = static_cast<std::size_t>(p.disparity->at(0, y, x));
        EXPECT_GE(d, sc.background_disparity);
        EXPECT_LE(d, sc.max_disparity);
        if (x < d) continue;
        const std::size_t xl = x;
        const std::size_t xr = x - d;
        bool same = true;
        for (std::size_t c = 0; c < 3; ++c) same = same && p.right.at(c, y, xr) == p.left.at(c, y, xl);
        checked += same;
      }
    EXPECT_GT(checked, sc.height * sc.width / 2);
  }
}

TEST(SyntheticScenes, SeededAndInRange) {
  auto a = make_synthetic_pairs(2, {}, 5);
  auto b = make_synthetic_pairs(2, {}, 5);
  for (std::size_t i = 0; i < a[0].left.numel(); ++i) {
    EXPECT_EQ(a[0].left[i], b[0].left[i]);
    EXPECT_GE(a[0].left[i], 0.0f);
    EXPECT_LE(a[0].left[i], 1.0f);
  }
  EXPECT_THROW(make_synthetic_pairs(1, {8, 8, 1, 1, 8}, 0), ConfigError);
}

TEST(UniformShift, PairIsTheShiftStackSlice) {
  std::mt19937 rng(12);
  auto left = random_tensor<float>({3, 6, 20}, rng, 0.0, 1.0);
  auto s = uniform_shift_pair(left, 4);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 20; ++x) EXPECT_EQ(s.right.at(0, y, x), left.at(0, y, std::min<std::size_t>(x + 4, 19)));
  EXPECT_EQ(s.disparity->at(0, 3, 3), 4.0f);
}

}  // namespace
}  // namespace vision
