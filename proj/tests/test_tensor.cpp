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
#include <string>
#include <vector>

#include "support.hpp"
#include "vision/depth.hpp"
#include "vision/ops.hpp"
#include "vision/optim.hpp"

namespace vision {
namespace {

using testing::gradcheck;
using testing::probe;
using testing::random_tensor;
using Fn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

constexpr double kPrimitiveTol = 1e-4;

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor<float>({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor<float>({0, 2}, {}), ShapeError);
  EXPECT_THROW(Tensor<float>({}, {}), ShapeError);
  Tensor<float> t({2, 3}, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(t.at(1, 2), 5.0f);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_THROW(t.item(), ShapeError);
}

TEST(Tensor, CopiesAliasAndClonesDoNot) {
  auto a = Tensor<float>::zeros({3});
  auto b = a;
  auto c = a.clone();
  b.data()[0] = 7.0f;
  EXPECT_EQ(a[0], 7.0f);
  EXPECT_EQ(c[0], 0.0f);
}

TEST(Tensor, BackwardReleasesTheGraph) {
  auto x = Tensor<double>::full({2}, 1.5, true);
  auto y = sum(mul(x, x));
  auto trace = backward(y);
  EXPECT_TRUE(trace.contains(x.node().get()));
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
  EXPECT_TRUE(y.node()->parents.empty());
}

TEST(Tensor, BackwardNeedsScalar) {
  auto x = Tensor<double>::full({2}, 1.0, true);
  EXPECT_THROW(backward(x), ShapeError);
}

TEST(Conv2d, MatchesDirectLoops) {
  std::mt19937 rng(1);
  struct Case {
    std::size_t ci, co, k, stride, pad, h, w;
  };
  for (auto c : {Case{1, 1, 1, 1, 0, 4, 5}, Case{2, 3, 3, 1, 1, 5, 6}, Case{3, 2, 3, 2, 1, 7, 6},
                 Case{2, 2, 2, 2, 0, 6, 6}, Case{3, 4, 5, 1, 2, 5, 5}}) {
    ConvSpec spec{c.ci, c.co, c.k, c.k, c.stride, c.pad, false};
    auto x = random_tensor<float>({c.ci, c.h, c.w}, rng);
    auto w = random_tensor<float>(spec.weight_shape(), rng);
    auto b = random_tensor<float>({c.co}, rng);
    std::size_t oh = 0, ow = 0;
    auto want = testing::naive_conv(x, w, b, c.stride, c.pad, oh, ow);
    auto got = conv2d(x, w, b, spec);
    ASSERT_EQ(got.shape(), (Shape{c.co, oh, ow}));
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
  }
}

TEST(Conv2d, TransposedMatchesScatterLoops) {
  std::mt19937 rng(2);
  struct Case {
    std::size_t ci, co, k, stride, pad, h, w;
  };
  for (auto c : {Case{1, 1, 1, 1, 0, 3, 3}, Case{2, 3, 4, 2, 1, 4, 5}, Case{3, 2, 3, 2, 1, 3, 3},
                 Case{2, 2, 3, 1, 1, 4, 4}}) {
    ConvSpec spec{c.ci, c.co, c.k, c.k, c.stride, c.pad, true};
    auto x = random_tensor<float>({c.ci, c.h, c.w}, rng);
    auto w = random_tensor<float>(spec.weight_shape(), rng);
    auto b = random_tensor<float>({c.co}, rng);
    std::size_t oh = 0, ow = 0;
    auto want = testing::naive_deconv(x, w, b, c.stride, c.pad, oh, ow);
    auto got = conv2d(x, w, b, spec);
    ASSERT_EQ(got.shape(), (Shape{c.co, oh, ow}));
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
  }
}

// <conv(x), y> == <x, deconv(y)> when the deconv reuses the conv's weights.
TEST(Conv2d, TransposedIsTheAdjoint) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ci = 1 + trial % 3, co = 1 + trial % 4, k = 1 + trial % 4, s = 1 + trial % 2;
    const std::size_t p = k > 1 ? (trial % 2) : 0;
    ConvSpec fwd{ci, co, k, k, s, p, false};
    // Sizes the conv tiles exactly, so the transposed output covers the whole input.
    const std::size_t oh = 3 + trial % 3, ow = 4;
    const std::size_t h = (oh - 1) * s + k - 2 * p, w = (ow - 1) * s + k - 2 * p;
    ASSERT_EQ(fwd.output_size(h, w), std::make_pair(oh, ow));
    auto x = random_tensor<double>({ci, h, w}, rng);
    auto y = random_tensor<double>({co, oh, ow}, rng);
    auto wt = random_tensor<double>(fwd.weight_shape(), rng);
    auto lhs = sum(mul(conv2d(x, wt, Tensor<double>::zeros({co}), fwd), y)).item();
    ConvSpec adj{co, ci, k, k, s, p, true};
    auto back = conv2d(y, wt, Tensor<double>::zeros({ci}), adj);
    ASSERT_EQ(back.shape(), x.shape());
    const double rhs = sum(mul(x, back)).item();
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Conv2d, RejectsMismatches) {
  ConvSpec spec{2, 3, 3, 3, 1, 0, false};
  auto w = Tensor<float>::zeros(spec.weight_shape());
  auto b = Tensor<float>::zeros({3});
  EXPECT_THROW(conv2d(Tensor<float>::zeros({3, 5, 5}), w, b, spec), ShapeError);
  EXPECT_THROW(conv2d(Tensor<float>::zeros({2, 2, 2}), w, b, spec), ShapeError);
  EXPECT_THROW(conv2d(Tensor<float>::zeros({2, 5, 5}), Tensor<float>::zeros({3, 2, 2, 2}), b, spec), ShapeError);
  auto nan = Tensor<float>::full({2, 5, 5}, std::numeric_limits<float>::quiet_NaN());
  EXPECT_THROW(conv2d(nan, w, b, spec), NumericError);
}

TEST(Elu, KnownValues) {
  auto y = elu(Tensor<double>({3}, {-1.0, 0.0, 2.0}), 1.0);
  EXPECT_DOUBLE_EQ(y[0], std::exp(-1.0) - 1.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_DOUBLE_EQ(y[2], 2.0);
  auto z = elu(Tensor<double>({1}, {-1e6}), 0.5);
  EXPECT_DOUBLE_EQ(z[0], -0.5);
}

TEST(Sigmoid, StableAtExtremes) {
  auto y = sigmoid(Tensor<float>({3}, {-1000.0f, 0.0f, 1000.0f}));
  EXPECT_EQ(y[0], 0.0f);
  EXPECT_EQ(y[1], 0.5f);
  EXPECT_EQ(y[2], 1.0f);
}

TEST(Correlate1d, MatchesDefinition) {
  std::mt19937 rng(4);
  auto l = random_tensor<float>({3, 4, 9}, rng);
  auto r = random_tensor<float>({3, 4, 9}, rng);
  auto c = correlate1d(l, r, 5);
  ASSERT_EQ(c.shape(), (Shape{6, 4, 9}));
  for (std::size_t d = 0; d <= 5; ++d)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 9; ++x) EXPECT_NEAR(c.at(d, y, x), testing::brute_correlation(l, r, d, y, x), 1e-6);
}

TEST(Correlate1d, PeaksAtTheTrueShift) {
  std::mt19937 rng(5);
  auto left = random_tensor<float>({3, 16, 40}, rng, 0.0, 1.0);
  for (std::size_t k : {0u, 3u, 7u}) {
    auto right = shift_stack(left, k + 1);
    std::vector<float> slice(right.data().begin() + static_cast<std::ptrdiff_t>(k * left.numel()),
                             right.data().begin() + static_cast<std::ptrdiff_t>((k + 1) * left.numel()));
    auto c = correlate1d(left, Tensor<float>(left.shape(), slice), 10);
    std::vector<double> per_d(11, 0.0);
    for (std::size_t d = 0; d <= 10; ++d)
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 12; x < 28; ++x) per_d[d] += c.at(d, y, x);
    EXPECT_EQ(std::max_element(per_d.begin(), per_d.end()) - per_d.begin(), static_cast<std::ptrdiff_t>(k));
  }
}

TEST(Correlate1d, RejectsLargeDisparity) {
  EXPECT_THROW(correlate1d(Tensor<float>::zeros({1, 2, 4}), Tensor<float>::zeros({1, 2, 4}), 4), ShapeError);
}

TEST(Loss, KnownValues) {
  Tensor<double> p({4}, {1, 2, 3, 4});
  Tensor<double> t({4}, {1, 0, 4, 4});
  EXPECT_DOUBLE_EQ(loss(p, t, LossKind::L1).item(), 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(loss(p, t, LossKind::L2).item(), 5.0 / 4.0);
  EXPECT_THROW(loss(p, Tensor<double>::zeros({3}), LossKind::L1), ShapeError);
}

TEST(Softmax, SumsToOneAndSurvivesLargeLogits) {
  Tensor<double> x({3, 1, 2}, {1000.0, 0.0, 1000.0, 0.0, -1000.0, 0.0});
  auto s = softmax_channels(x);
  EXPECT_NEAR(s.at(0, 0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.at(2, 0, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.at(0, 0, 1) + s.at(1, 0, 1) + s.at(2, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(s.at(0, 0, 1), 1.0 / 3.0, 1e-12);
}

TEST(Standardize, ZeroMeanUnitVariancePerChannel) {
  std::mt19937 rng(12);
  auto x = random_tensor<double>({2, 5, 7}, rng, 3.0, 9.0);
  auto y = standardize_channels(x);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < 35; ++i) {
      mean += y[c * 35 + i];
      sq += y[c * 35 + i] * y[c * 35 + i];
    }
    EXPECT_NEAR(mean / 35.0, 0.0, 1e-12);
    EXPECT_NEAR(sq / 35.0, 1.0, 1e-8);
  }
  auto flat = standardize_channels(Tensor<double>::full({1, 2, 2}, 4.0));
  for (double v : flat.data()) EXPECT_EQ(v, 0.0);
}

TEST(Fit2d, CropsAndPads) {
  Tensor<float> x({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  auto crop = fit2d(x, 1, 2);
  EXPECT_EQ(crop.shape(), (Shape{1, 1, 2}));
  EXPECT_EQ(crop[1], 2.0f);
  auto pad = fit2d(x, 3, 4);
  EXPECT_EQ(pad.at(0, 1, 2), 6.0f);
  EXPECT_EQ(pad.at(0, 1, 3), 0.0f);
  EXPECT_EQ(pad.at(0, 2, 0), 0.0f);
}

// Gradient checks run in double so the finite differences are meaningful.
class Gradients : public ::testing::Test {
 protected:
  std::mt19937 rng{11};
  Tensor<double> r(const Shape& s, double lo = -1.0, double hi = 1.0) { return random_tensor<double>(s, rng, lo, hi); }
};

TEST_F(Gradients, Conv) {
  ConvSpec spec{2, 3, 3, 3, 2, 1, false};
  Fn f = [&](const auto& in) { return probe(conv2d(in[0], in[1], in[2], spec)); };
  EXPECT_LT(gradcheck(f, {r({2, 5, 6}), r(spec.weight_shape()), r({3})}), kPrimitiveTol);
}

TEST_F(Gradients, TransposedConv) {
  ConvSpec spec{3, 2, 4, 4, 2, 1, true};
  Fn f = [&](const auto& in) { return probe(conv2d(in[0], in[1], in[2], spec)); };
  EXPECT_LT(gradcheck(f, {r({3, 3, 4}), r(spec.weight_shape()), r({2})}), kPrimitiveTol);
}

TEST_F(Gradients, Elu) {
  Fn f = [](const auto& in) { return probe(elu(in[0], 0.7)); };
  EXPECT_LT(gradcheck(f, {r({2, 3, 4})}), kPrimitiveTol);
}

TEST_F(Gradients, Sigmoid) {
  Fn f = [](const auto& in) { return probe(sigmoid(in[0])); };
  EXPECT_LT(gradcheck(f, {r({2, 3, 4}, -4, 4)}), kPrimitiveTol);
}

TEST_F(Gradients, Correlate1d) {
  Fn f = [](const auto& in) { return probe(correlate1d(in[0], in[1], 3)); };
  EXPECT_LT(gradcheck(f, {r({2, 3, 6}), r({2, 3, 6})}), kPrimitiveTol);
}

TEST_F(Gradients, LossL1) {
  auto p = r({3, 4});
  auto t = p.clone();
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] += (i % 2 ? 0.3 : -0.3);
  Fn f = [](const auto& in) { return loss(in[0], in[1], LossKind::L1); };
  EXPECT_LT(gradcheck(f, {p, t}), kPrimitiveTol);
}

TEST_F(Gradients, LossL2) {
  Fn f = [](const auto& in) { return loss(in[0], in[1], LossKind::L2); };
  EXPECT_LT(gradcheck(f, {r({3, 4}), r({3, 4})}), kPrimitiveTol);
}

TEST_F(Gradients, Softmax) {
  Fn f = [](const auto& in) { return probe(softmax_channels(in[0])); };
  EXPECT_LT(gradcheck(f, {r({5, 2, 3}, -3, 3)}), kPrimitiveTol);
}

TEST_F(Gradients, Standardize) {
  Fn f = [](const auto& in) { return probe(standardize_channels(in[0])); };
  EXPECT_LT(gradcheck(f, {r({3, 3, 4})}), kPrimitiveTol);
}

TEST_F(Gradients, Blend) {
  Fn f = [](const auto& in) { return probe(blend(in[0], in[1])); };
  EXPECT_LT(gradcheck(f, {r({4, 2, 3}), r({4, 3, 2, 3})}), kPrimitiveTol);
}

TEST_F(Gradients, ShiftStack) {
  Fn f = [](const auto& in) { return probe(shift_stack(in[0], 4)); };
  EXPECT_LT(gradcheck(f, {r({2, 3, 5})}), kPrimitiveTol);
}

TEST_F(Gradients, Elementwise) {
  Fn f = [](const auto& in) {
    return sum(mul(add(add_scalar(in[0], 0.5), scale(in[1], -2.0)), in[1]));
  };
  EXPECT_LT(gradcheck(f, {r({3, 4}), r({3, 4})}), kPrimitiveTol);
}

TEST_F(Gradients, Fit2d) {
  Fn crop = [](const auto& in) { return probe(fit2d(in[0], 2, 3)); };
  Fn pad = [](const auto& in) { return probe(fit2d(in[0], 5, 6)); };
  EXPECT_LT(gradcheck(crop, {r({2, 4, 4})}), kPrimitiveTol);
  EXPECT_LT(gradcheck(pad, {r({2, 4, 4})}), kPrimitiveTol);
}

TEST(Optimizer, SgdStepIsExact) {
  auto p = Tensor<double>({2}, {1.0, -2.0}, true);
  p.grad()[0] = 0.5;
  p.grad()[1] = -1.0;
  OptimConfig cfg{0.1, 0.01, 1, OptimizerKind::Sgd};
  std::vector<Tensor<double>> params{p};
  Optimizer<double>(cfg).step(params);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * (0.5 + 0.01 * 1.0));
  EXPECT_DOUBLE_EQ(p[1], -2.0 - 0.1 * (-1.0 + 0.01 * -2.0));
  EXPECT_EQ(p.grad()[0], 0.0);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  auto p = Tensor<double>({2}, {1.0, 1.0}, true);
  p.grad()[0] = 3.0;
  p.grad()[1] = -0.001;
  std::vector<Tensor<double>> params{p};
  Optimizer<double>({0.01, 0.0, 1, OptimizerKind::Adam}).step(params);
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-8);
  EXPECT_NEAR(p[1], 1.0 + 0.01, 1e-7);
}

TEST(Optimizer, RejectsNonFiniteGradient) {
  auto p = Tensor<double>({1}, {1.0}, true);
  p.grad()[0] = std::numeric_limits<double>::infinity();
  std::vector<Tensor<double>> params{p};
  EXPECT_THROW(Optimizer<double>({}).step(params), NumericError);
}

TEST(Optimizer, ConfigValidation) {
  EXPECT_THROW(OptimConfig({0.0, 0.0, 1}).validate(), ConfigError);
  EXPECT_THROW(OptimConfig({0.1, -1.0, 1}).validate(), ConfigError);
  EXPECT_THROW(OptimConfig({0.1, 0.0, 0}).validate(), ConfigError);
}

TEST(BackwardAndStep, ZeroLossOnlyDecays) {
  auto p = Tensor<double>({2}, {2.0, -4.0}, true);
  auto l = scale(sum(mul(p, p)), 0.0);
  std::vector<Tensor<double>> params{p};
  backward_and_step(l, std::span<Tensor<double>>(params), {0.1, 0.5, 1});
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(p[1], -4.0 - 0.1 * 0.5 * -4.0);
}

TEST(BackwardAndStep, UnreachedParameterIsSkippedWithWarning) {
  std::vector<std::string> warnings;
  auto prev = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  auto used = Tensor<double>({1}, {1.0}, true);
  auto unused = Tensor<double>({1}, {5.0}, true);
  std::vector<Tensor<double>> params{used, unused};
  backward_and_step(sum(mul(used, used)), std::span<Tensor<double>>(params), {0.1, 0.0, 1});
  set_warning_handler(prev);
  EXPECT_DOUBLE_EQ(used[0], 1.0 - 0.1 * 2.0);
  EXPECT_DOUBLE_EQ(unused[0], 5.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("#1"), std::string::npos);
}

TEST(Init, UniformWithinFanInBound) {
  std::mt19937 rng(0);
  auto w = init_uniform<float>({8, 4, 3, 3}, 36, rng);
  const float bound = std::sqrt(1.0f / 36.0f);
  for (float v : w.data()) EXPECT_LE(std::abs(v), bound);
  EXPECT_TRUE(w.requires_grad());
}

}  // namespace
}  // namespace vision
