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

#include "eesp/ec_training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"

namespace eesp {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
}

WeightedLoss ec_loss(std::span<const LayerReadout> readouts, int label) {
  if (readouts.empty()) throw std::invalid_argument("ec_loss needs at least one readout");
  WeightedLoss loss;
  const std::size_t n = readouts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& probs = readouts[i].class_probs;
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
      throw std::invalid_argument("label outside the exit head's classes");
    }
    double p = probs[static_cast<std::size_t>(label)];
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      ++loss.clamped;
    }
    loss.per_layer.push_back(-std::log(p));
    loss.aggregate += depth_weight(i, n) * loss.per_layer.back();
  }
  return loss;
}

WeightedLoss accumulate_ec_gradient(const MultiExitModel& model, std::span<const double> x,
                                    int label, ModelGradient& grad, bool include_backbone) {
  const auto pass = forward_all(model, x);
  WeightedLoss loss = ec_loss(pass.readouts, label);
  const std::size_t n = model.depth();

  std::vector<double> downstream;  // dL/dh_{i+1} flowing back from deeper layers
  for (std::size_t i = n; i-- > 0;) {
    const double w = depth_weight(i, n);
    std::vector<double> grad_logits = pass.readouts[i].class_probs;
    grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    for (double& g : grad_logits) g *= w;

    auto grad_hidden = backward_dense(model.exit_head(i), pass.hidden[i + 1],
                                      pass.exit_logits[i], grad_logits, grad.exit_heads[i]);
    if (!include_backbone) continue;
    if (!downstream.empty()) {
      for (std::size_t k = 0; k < grad_hidden.size(); ++k) grad_hidden[k] += downstream[k];
    }
    downstream = backward_dense(model.backbone(i), pass.hidden[i], pass.hidden[i + 1],
                                grad_hidden, grad.backbone[i]);
  }
  return loss;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t m,
                                                                           double fraction,
                                                                           std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("need at least 2 samples to hold some out");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto held = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
  held = std::clamp<std::size_t>(held, 1, m - 1);
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<long>(held));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(held), order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(holdout)};
}

std::vector<double> exit_accuracy(const MultiExitModel& model, const Dataset& data) {
  std::vector<double> correct(model.depth(), 0.0);
  if (data.size() == 0) return correct;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto pass = forward_all(model, data.row(s));
    for (std::size_t i = 0; i < model.depth(); ++i) {
      if (static_cast<int>(pass.readouts[i].predicted) == data.labels[s]) correct[i] += 1.0;
    }
  }
  for (double& c : correct) c /= static_cast<double>(data.size());
  return correct;
}

namespace {

void check_dataset(const MultiExitModel& model, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  data.validate();
  if (data.width() != model.input_width()) {
    throw ShapeError("dataset width " + std::to_string(data.width()) +
                         " does not match model input width " +
                         std::to_string(model.input_width()),
                     0);
  }
  for (int y : data.labels) {
    if (static_cast<std::size_t>(y) >= model.num_classes()) {
      throw std::invalid_argument("label " + std::to_string(y) + " exceeds the model's classes");
    }
  }
}

struct ValidationScore {
  double weighted_loss = 0.0;
  std::vector<double> accuracy;
};

ValidationScore score(const MultiExitModel& model, const Dataset& data,
                      std::span<const std::size_t> rows) {
  ValidationScore out;
  out.accuracy.assign(model.depth(), 0.0);
  for (std::size_t s : rows) {
    const auto pass = forward_all(model, data.row(s));
    out.weighted_loss += ec_loss(pass.readouts, data.labels[s]).aggregate;
    for (std::size_t i = 0; i < model.depth(); ++i) {
      if (static_cast<int>(pass.readouts[i].predicted) == data.labels[s]) out.accuracy[i] += 1.0;
    }
  }
  const double count = static_cast<double>(rows.size());
  out.weighted_loss /= count;
  for (double& a : out.accuracy) a /= count;
  return out;
}

}  // namespace

EcTrainingResult train_ecs(MultiExitModel model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  check_dataset(model, data);

  EcTrainingResult result{model, {}, 0, 0};
  if (config.epochs == 0) return result;

  const auto [train_rows, val_rows] =
      holdout_split(data.size(), config.validation_fraction, config.seed);

  const ParameterGroup groups = config.freeze_backbone
                                    ? ParameterGroup::exit_heads
                                    : ParameterGroup::backbone | ParameterGroup::exit_heads;
  ModelGradient grad(model);
  const auto blocks = parameter_blocks(model, grad, groups);
  AdamOptimizer optimizer(AdamConfig{.learning_rate = config.learning_rate});

  const std::size_t n = model.depth();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::vector<std::size_t> order = train_rows;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::seed_seq epoch_seed{static_cast<std::uint32_t>(config.seed),
                             static_cast<std::uint32_t>(config.seed >> 32),
                             static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EcEpoch record;
    record.epoch = epoch;
    record.train_loss.assign(n, 0.0);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      grad.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t s = order[k];
        const auto loss =
            accumulate_ec_gradient(model, data.row(s), data.labels[s], grad, !config.freeze_backbone);
        if (!std::isfinite(loss.aggregate)) throw TrainingError("exit loss diverged");
        result.clamp_warnings += loss.clamped;
        record.train_weighted_loss += loss.aggregate;
        for (std::size_t i = 0; i < n; ++i) record.train_loss[i] += loss.per_layer[i];
      }
      grad.scale(1.0 / static_cast<double>(stop - start));
      optimizer.step(blocks);
    }
    const double count = static_cast<double>(order.size());
    record.train_weighted_loss /= count;
    for (double& l : record.train_loss) l /= count;

    const auto val = score(model, data, val_rows);
    if (!std::isfinite(val.weighted_loss)) throw TrainingError("validation loss diverged");
    record.val_accuracy = val.accuracy;
    record.val_weighted_loss = val.weighted_loss;
    result.history.push_back(record);

    if (val.weighted_loss < best_loss) {
      best_loss = val.weighted_loss;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

void write_training_log(std::ostream& out, std::span<const EcEpoch> history) {
  out << "epoch,layer,train_loss,val_accuracy\n";
  for (const auto& e : history) {
    for (std::size_t i = 0; i < e.train_loss.size(); ++i) {
      out << e.epoch << ',' << (i + 1) << ',' << format_double(e.train_loss[i]) << ','
          << format_double(e.val_accuracy[i]) << '\n';
    }
  }
}

}  // namespace eesp
