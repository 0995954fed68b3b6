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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "eesp/dc_data.hpp"
#include "eesp/ec_training.hpp"
#include "eesp/model.hpp"

namespace eesp {

/// Weighted binary cross-entropy of per-layer hardness scores against the
/// hard (1) / easy (0) target, with the same depth weights as ec_loss.
/// Scores are clamped to [1e-12, 1 - 1e-12].
WeightedLoss dc_loss(std::span<const double> scores, int hard);

/// Adds d(dc_loss)/d(deferral parameters) for one sample. `hidden` holds
/// h_1..h_n (not the input). Returns the loss.
WeightedLoss accumulate_dc_gradient(const MultiExitModel& model,
                                    std::span<const std::vector<double>> hidden, int hard,
                                    ModelGradient& grad);

struct DcTrainingResult {
  MultiExitModel model;
  std::vector<double> holdout_error;  // q^d per layer, threshold 0.5
  std::vector<double> holdout_loss;   // mean BCE per layer on the held-out slice
  std::vector<double> epoch_loss;     // weighted training loss per epoch
  std::vector<std::size_t> holdout_rows;  // indices into the labelled set
};

/// Trains deferral heads only, on hidden states from the frozen backbone.
/// `config.validation_fraction` of the set is held out to measure q^d.
/// Throws TrainingError if every label is the same.
DcTrainingResult train_dcs(MultiExitModel model, const HardnessLabeledSet& set,
                           const TrainConfig& config);

/// Fraction of `rows` whose thresholded hardness (>= 0.5 means hard)
/// disagrees with the label, per layer.
std::vector<double> deferral_error(const MultiExitModel& model, const HardnessLabeledSet& set,
                                   std::span<const std::size_t> rows);

/// CSV: layer,q_d_holdout,loss.
void write_dc_report(std::ostream& out, const DcTrainingResult& result);

}  // namespace eesp
