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
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "eesp/dataset.hpp"
#include "eesp/model.hpp"

namespace eesp {

/// Probability floor applied before taking logs in both cross-entropies.
inline constexpr double kProbabilityFloor = 1e-12;

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  std::size_t patience = 2;
  double validation_fraction = 0.2;
  bool freeze_backbone = false;

  /// Throws std::invalid_argument when a count is zero (epochs may be 0)
  /// or the fraction leaves (0, 1).
  void validate() const;
};

/// Depth-weighted loss: sum_i i * L_i / sum_i i.
struct WeightedLoss {
  double aggregate = 0.0;
  std::vector<double> per_layer;
  std::size_t clamped = 0;  // terms that hit kProbabilityFloor
};

/// Weighted cross-entropy of each layer's class_probs at `label`.
WeightedLoss ec_loss(std::span<const LayerReadout> readouts, int label);

/// Adds d(ec_loss)/d(parameters) for one sample into `grad` (exit heads and,
/// unless `include_backbone` is false, the backbone). Returns the loss.
WeightedLoss accumulate_ec_gradient(const MultiExitModel& model, std::span<const double> x,
                                    int label, ModelGradient& grad, bool include_backbone = true);

struct EcEpoch {
  std::size_t epoch = 0;                 // 1-based
  std::vector<double> train_loss;        // mean per-layer cross-entropy
  std::vector<double> val_accuracy;      // per layer
  double train_weighted_loss = 0.0;
  double val_weighted_loss = 0.0;
};

struct EcTrainingResult {
  MultiExitModel model;       // parameters from the best validation epoch
  std::vector<EcEpoch> history;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  std::size_t clamp_warnings = 0;
};

/// Joint training of backbone and exit heads with Adam. Holds out
/// `validation_fraction` of `data` for early stopping on the weighted
/// validation loss. Deferral heads are never touched.
///
/// Throws std::invalid_argument for an empty dataset or out-of-range labels
/// and TrainingError when the loss diverges.
EcTrainingResult train_ecs(MultiExitModel model, const Dataset& data, const TrainConfig& config);

/// Per-layer accuracy of the exit heads on `data`.
std::vector<double> exit_accuracy(const MultiExitModel& model, const Dataset& data);

/// CSV: epoch,layer,train_loss,val_accuracy (layers 1-based).
void write_training_log(std::ostream& out, std::span<const EcEpoch> history);

/// Shuffled (train, held-out) index split; held-out gets round(fraction * m)
/// rows, at least one, and train keeps at least one.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t m,
                                                                           double fraction,
                                                                           std::uint64_t seed);

}  // namespace eesp
