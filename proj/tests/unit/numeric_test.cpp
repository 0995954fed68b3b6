// Copyright 2026 The eesp Authors
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

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "eesp/error.hpp"
#include "eesp/numeric.hpp"
#include "oracles.hpp"

namespace eesp {
namespace {

DenseLayer layer_from(std::vector<double> w, std::size_t rows, std::size_t cols,
                      std::vector<double> b, Activation act) {
  DenseLayer l = DenseLayer::zeros(cols, rows, act);
  l.weights.data = std::move(w);
  l.bias = std::move(b);
  return l;
}

TEST(ForwardDense, IdentityLayerPassesInputThrough) {
  const auto l = layer_from({1, 0, 0, 1}, 2, 2, {0, 0}, Activation::identity);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_EQ(forward_dense(l, x), x);
}

TEST(ForwardDense, ReluClipsNegatives) {
  const auto l = layer_from({1, 0, 0, 1}, 2, 2, {-2.0, 1.0}, Activation::relu);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_EQ(forward_dense(l, x), (std::vector<double>{0.0, 3.0}));
}

TEST(ForwardDense, TanhAtOrigin) {
  const auto l = layer_from({1}, 1, 1, {0}, Activation::tanh);
  const std::vector<double> x{0.0};
  EXPECT_EQ(forward_dense(l, x)[0], 0.0);
}

TEST(ForwardDense, WidthMismatchThrows) {
  const auto l = DenseLayer::zeros(3, 2, Activation::identity);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(forward_dense(l, x), ShapeError);
}

TEST(Softmax, SymmetricLogits) {
  const std::vector<double> z{0.0, 0.0};
  const auto p = softmax(z);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, LogTwoGivesTwoThirds) {
  const std::vector<double> z{std::log(2.0), 0.0};
  const auto p = softmax(z);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const std::vector<double> z{1000.0, 0.0};
  const auto p = softmax(z);
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(Softmax, EmptyInputThrows) {
  EXPECT_THROW(softmax(std::span<const double>{}), std::invalid_argument);
}

TEST(Softmax, OutputIsOnTheSimplex) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> z(1 + rng() % 6);
    for (double& v : z) v = u(rng);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

TEST(Argmax, LowestIndexWinsTies) {
  const std::vector<double> v{0.25, 0.5, 0.5, 0.1};
  EXPECT_EQ(argmax(v), 1u);
}

TEST(Glorot, StaysWithinLimit) {
  std::mt19937_64 rng(3);
  const auto l = DenseLayer::glorot(10, 6, Activation::tanh, rng);
  const double s = std::sqrt(6.0 / 16.0);
  for (double w : l.weights.data) {
    EXPECT_LE(std::abs(w), s);
  }
  for (double b : l.bias) EXPECT_EQ(b, 0.0);
}

TEST(BackwardDense, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Activation act : {Activation::identity, Activation::tanh}) {
    DenseLayer l = DenseLayer::glorot(4, 3, act, rng);
    for (double& b : l.bias) b = u(rng);
    std::vector<double> x(4);
    std::vector<double> upstream(3);
    for (double& v : x) v = u(rng);
    for (double& v : upstream) v = u(rng);
    auto objective = [&](const DenseLayer& layer, std::span<const double> in) {
      const auto y = forward_dense(layer, in);
      double s = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) s += upstream[k] * y[k];
      return s;
    };

    DenseGrad g(l);
    const auto y = forward_dense(l, x);
    const auto dx = backward_dense(l, x, y, upstream, g);
    const double h = 1e-5;
    for (std::size_t k = 0; k < l.weights.data.size(); ++k) {
      DenseLayer p = l;
      DenseLayer m = l;
      p.weights.data[k] += h;
      m.weights.data[k] -= h;
      const double fd = (objective(p, x) - objective(m, x)) / (2 * h);
      EXPECT_LT(testing::relative_error(g.weights.data[k], fd), 1e-6);
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      auto xp = x;
      auto xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (objective(l, xp) - objective(l, xm)) / (2 * h);
      EXPECT_LT(testing::relative_error(dx[k], fd), 1e-6);
    }
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> values{1.0, -2.0};
  const std::vector<double> grads{0.0, 0.0};
  AdamOptimizer opt;
  const ParameterBlock blocks[] = {{values, grads, 0}};
  opt.step(blocks);
  EXPECT_EQ(values, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Adam, QuadraticStepMovesTowardMinimum) {
  std::vector<double> x{3.0};
  std::vector<double> g{0.0};
  AdamOptimizer opt(AdamConfig{.learning_rate = 0.1});
  const ParameterBlock blocks[] = {{x, g, 0}};
  double previous = x[0];
  for (int i = 0; i < 20; ++i) {
    g[0] = 2.0 * x[0];  // d/dx of x^2
    opt.step(blocks);
    EXPECT_LT(std::abs(x[0]), std::abs(previous));
    previous = x[0];
  }
}

TEST(Adam, NonFiniteGradientReportsLayerAndSkipsUpdate) {
  std::vector<double> a{1.0};
  std::vector<double> b{2.0};
  const std::vector<double> ga{0.5};
  const std::vector<double> gb{std::numeric_limits<double>::quiet_NaN()};
  AdamOptimizer opt;
  const ParameterBlock blocks[] = {{a, ga, 0}, {b, gb, 2}};
  try {
    opt.step(blocks);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    ASSERT_TRUE(e.layer().has_value());
    EXPECT_EQ(*e.layer(), 2u);
  }
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 2.0);
}

}  // namespace
}  // namespace eesp
