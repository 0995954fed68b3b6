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

#include <algorithm>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "eesp/dataset.hpp"
#include "eesp/dc_data.hpp"
#include "eesp/dc_training.hpp"
#include "eesp/gating.hpp"
#include "eesp/manifest.hpp"
#include "eesp/model.hpp"
#include "eesp/theory.hpp"
#include "pipeline.hpp"

namespace eesp {
namespace {

namespace fs = std::filesystem;

// Library-level checks on a trained toy model.
class TrainedToy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::fresh_dir("pipeline_toy");
    ASSERT_EQ(testing::run_pipeline(EESP_TOY_CONFIG, dir_, 1).code, 0);
    manifest_ = RunManifest::load(dir_ / "manifest.json");
  }
  static Dataset split(const char* rel) {
    return load_csv(dir_ / rel, manifest_.data.mixture.classes);
  }
  static inline fs::path dir_;
  static inline RunManifest manifest_;
};

TEST_F(TrainedToy, NoiseRaisesFullCoverageError) {
  const auto model = load_checkpoint(dir_ / "model/ec_model.json");
  const auto test = split("data/test.csv");
  double previous = baseline_sr(model, test, 0.0).risk;
  for (double magnitude : {0.5, 0.75, 1.0}) {
    const double risk = baseline_sr(model, shift(test, ShiftKind::noise, magnitude, 77), 0.0).risk;
    EXPECT_GE(risk, previous) << "noise " << magnitude;
    previous = risk;
  }
}

TEST_F(TrainedToy, LargeHardFractionCollapsesCoverage) {
  const auto ec_model = load_checkpoint(dir_ / "model/ec_model.json");
  const auto train = split("data/train.csv");
  const auto test = split("data/test.csv");
  const GoldLabelOracle oracle(test.labels);
  const auto profiles = profile(ec_model, train);
  TrainConfig cfg = manifest_.dc_training;
  cfg.seed = 5;
  auto coverage_at = [&](double k) {
    auto set = label_hard(profiles, k);
    attach_features(set, train);
    const auto trained = train_dcs(ec_model, set, cfg).model;
    return evaluate(trained, test, Thresholds{0.9, 0.65}, oracle).coverage;
  };
  EXPECT_LT(coverage_at(90.0), 0.5 * coverage_at(33.0));
}

TEST_F(TrainedToy, ShuffledHardLabelsViolateTheBound) {
  const auto ec_model = load_checkpoint(dir_ / "model/ec_model.json");
  const auto train = split("data/train.csv");
  auto set = label_hard(profile(ec_model, train), 50.0);
  std::mt19937_64 rng(13);
  std::shuffle(set.hard.begin(), set.hard.end(), rng);
  attach_features(set, train);
  TrainConfig cfg = manifest_.dc_training;
  cfg.seed = 6;
  const auto dc = train_dcs(ec_model, set, cfg);
  for (double q : dc.holdout_error) {
    EXPECT_GT(q, 0.35);
    EXPECT_LT(q, 0.65);
  }

  // A deliberately noisy evaluation set keeps the exit error rates high
  // enough for the bound to bite.
  const auto noisy = shift(split("data/test.csv"), ShiftKind::noise, 3.0, 8);
  const GoldLabelOracle oracle(noisy.labels);
  const auto metrics = evaluate(dc.model, noisy, Thresholds{0.75, 1.0}, oracle);
  ModelBoundInputs in;
  in.exit_error = metrics.layer_risk();
  in.deferral_error = dc.holdout_error;
  in.empirical_risk = metrics.risk;
  in.covered = metrics.covered;
  const auto report = verify_model_bound(in, 0.1);
  EXPECT_FALSE(report.bound_satisfied) << "q_max " << report.q_max << " bound " << report.bound;
}

}  // namespace
}  // namespace eesp
