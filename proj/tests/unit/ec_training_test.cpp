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

#include "eesp/dataset.hpp"
#include "eesp/ec_training.hpp"
#include "eesp/error.hpp"
#include "oracles.hpp"

namespace eesp {
namespace {

LayerReadout readout_with(std::vector<double> probs) {
  LayerReadout r;
  r.class_probs = std::move(probs);
  r.confidence = std::max(r.class_probs[0], r.class_probs[1]);
  return r;
}

Dataset blobs(std::size_t m, std::uint64_t seed) {
  MixtureSpec spec;
  spec.dims = 2;
  spec.samples = m;
  spec.seed = seed;
  return gen_mixture(spec);
}

ModelShape toy_shape() {
  ModelShape s;
  s.input_width = 2;
  s.hidden_widths = {8, 8, 8, 8};
  return s;
}

TEST(EcLoss, SingleLayerEqualsItsCrossEntropy) {
  const std::vector<LayerReadout> r{readout_with({0.25, 0.75})};
  const auto loss = ec_loss(r, 1);
  EXPECT_DOUBLE_EQ(loss.aggregate, -std::log(0.75));
}

TEST(EcLoss, DepthWeightedTwoLayers) {
  // Per-layer losses 1.0 and 0.5 weigh in as (1*1.0 + 2*0.5) / 3.
  const std::vector<LayerReadout> r{readout_with({1.0 - std::exp(-1.0), std::exp(-1.0)}),
                                    readout_with({1.0 - std::exp(-0.5), std::exp(-0.5)})};
  const auto loss = ec_loss(r, 1);
  EXPECT_NEAR(loss.per_layer[0], 1.0, 1e-15);
  EXPECT_NEAR(loss.per_layer[1], 0.5, 1e-15);
  EXPECT_NEAR(loss.aggregate, 2.0 / 3.0, 1e-15);
}

TEST(EcLoss, PerfectPredictionsCostNothing) {
  const std::vector<LayerReadout> r(3, readout_with({0.0, 1.0}));
  EXPECT_EQ(ec_loss(r, 1).aggregate, 0.0);
}

TEST(EcLoss, ZeroProbabilityIsClampedAndCounted) {
  const std::vector<LayerReadout> r{readout_with({1.0, 0.0}), readout_with({0.5, 0.5})};
  const auto loss = ec_loss(r, 1);
  EXPECT_EQ(loss.clamped, 1u);
  EXPECT_NEAR(loss.per_layer[0], -std::log(kProbabilityFloor), 1e-9);
  EXPECT_TRUE(std::isfinite(loss.aggregate));
}

TEST(EcLoss, AggregateIsConvexCombination) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LayerReadout> r;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = u(rng);
      r.push_back(readout_with({1.0 - p, p}));
    }
    const auto loss = ec_loss(r, 1);
    const auto [lo, hi] = std::minmax_element(loss.per_layer.begin(), loss.per_layer.end());
    EXPECT_GE(loss.aggregate, *lo - 1e-12);
    EXPECT_LE(loss.aggregate, *hi + 1e-12);
  }
}

TEST(EcGradient, MatchesReferenceFiniteDifferences) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    auto model = testing::random_model(rng);
    std::vector<double> x(model.input_width());
    std::normal_distribution<double> g;
    for (double& v : x) v = g(rng);
    const int label = static_cast<int>(rng() % model.num_classes());
    ModelGradient grad(model);
    accumulate_ec_gradient(model, x, label, grad);
    const double h = 1e-5;
    for (const auto& p : testing::pair_parameters(model, grad)) {
      const double saved = *p.value;
      *p.value = saved + h;
      const double up = testing::ref_ec_loss(model, x, label);
      *p.value = saved - h;
      const double down = testing::ref_ec_loss(model, x, label);
      *p.value = saved;
      EXPECT_LT(testing::relative_error(*p.grad, (up - down) / (2 * h)), 1e-4);
    }
  }
}

TEST(HoldoutSplit, PartitionsIndices) {
  const auto [train, held] = holdout_split(10, 0.2, 5);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(held.size(), 2u);
  std::vector<int> seen(10, 0);
  for (auto i : train) ++seen[i];
  for (auto i : held) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(TrainEcs, SeparableBlobsReachHighAccuracy) {
  const Dataset data = blobs(600, 1);
  EXPECT_GE(testing::logistic_probe_accuracy(data), 0.99);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 3;
  const auto result = train_ecs(MultiExitModel::create(toy_shape(), 1), data, cfg);
  ASSERT_GT(result.best_epoch, 0u);
  EXPECT_GE(result.history[result.best_epoch - 1].val_accuracy.back(), 0.95);
}

TEST(TrainEcs, LossDoesNotClimbEarly) {
  const Dataset data = blobs(600, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.patience = 3;
  cfg.seed = 4;
  const auto result = train_ecs(MultiExitModel::create(toy_shape(), 2), data, cfg);
  ASSERT_EQ(result.history.size(), 3u);
  for (std::size_t e = 1; e < 3; ++e) {
    EXPECT_LE(result.history[e].train_weighted_loss,
              1.05 * result.history[e - 1].train_weighted_loss);
  }
}

TEST(TrainEcs, ZeroEpochsLeavesModelUnchanged) {
  const auto model = MultiExitModel::create(toy_shape(), 5);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto result = train_ecs(model, blobs(100, 3), cfg);
  EXPECT_EQ(result.model, model);
  EXPECT_TRUE(result.history.empty());
}

TEST(TrainEcs, DeterministicForFixedSeed) {
  const Dataset data = blobs(300, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 99;
  const auto a = train_ecs(MultiExitModel::create(toy_shape(), 6), data, cfg);
  const auto b = train_ecs(MultiExitModel::create(toy_shape(), 6), data, cfg);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].val_accuracy, b.history[e].val_accuracy);
  }
}

TEST(TrainEcs, NeverTouchesDeferralHeads) {
  auto model = MultiExitModel::create(toy_shape(), 7);
  model.deferral_head(1).bias[0] = 0.75;
  const auto before = parameter_checksum(model, ParameterGroup::deferral_heads);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto result = train_ecs(model, blobs(200, 5), cfg);
  EXPECT_EQ(parameter_checksum(result.model, ParameterGroup::deferral_heads), before);
}

TEST(TrainEcs, FrozenBackboneStaysPut) {
  const auto model = MultiExitModel::create(toy_shape(), 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.freeze_backbone = true;
  const auto result = train_ecs(model, blobs(200, 6), cfg);
  EXPECT_EQ(parameter_checksum(result.model, ParameterGroup::backbone),
            parameter_checksum(model, ParameterGroup::backbone));
  EXPECT_NE(parameter_checksum(result.model, ParameterGroup::exit_heads),
            parameter_checksum(model, ParameterGroup::exit_heads));
}

TEST(TrainEcs, EmptyDatasetRejected) {
  Dataset empty;
  empty.features = Matrix(0, 2);
  EXPECT_THROW(train_ecs(MultiExitModel::create(toy_shape(), 1), empty, TrainConfig{}),
               std::invalid_argument);
}

TEST(TrainEcs, DivergenceIsATrainingError) {
  auto model = MultiExitModel::create(toy_shape(), 1);
  model.exit_head(0).weights.data[0] = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_ecs(model, blobs(50, 7), cfg), TrainingError);
}

}  // namespace
}  // namespace eesp
