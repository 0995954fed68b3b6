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

#include "eesp/dc_training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"

namespace eesp {

namespace {

double bce(double score, int hard, std::size_t& clamped) {
  double s = score;
  if (s < kProbabilityFloor) {
    s = kProbabilityFloor;
    ++clamped;
  } else if (s > 1.0 - kProbabilityFloor) {
    s = 1.0 - kProbabilityFloor;
    ++clamped;
  }
  return hard ? -std::log(s) : -std::log1p(-s);
}

std::vector<std::vector<double>> hidden_states(const MultiExitModel& model,
                                               std::span<const double> x) {
  std::vector<std::vector<double>> h;
  h.reserve(model.depth());
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t i = 0; i < model.depth(); ++i) {
    current = model.advance(i, current);
    h.push_back(current);
  }
  return h;
}

}  // namespace

WeightedLoss dc_loss(std::span<const double> scores, int hard) {
  if (scores.empty()) throw std::invalid_argument("dc_loss needs at least one score");
  if (hard != 0 && hard != 1) throw std::invalid_argument("hardness label must be 0 or 1");
  WeightedLoss loss;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    loss.per_layer.push_back(bce(scores[i], hard, loss.clamped));
    loss.aggregate += depth_weight(i, scores.size()) * loss.per_layer.back();
  }
  return loss;
}

WeightedLoss accumulate_dc_gradient(const MultiExitModel& model,
                                    std::span<const std::vector<double>> hidden, int hard,
                                    ModelGradient& grad) {
  const std::size_t n = model.depth();
  if (hidden.size() != n) throw ShapeError("expected one hidden state per layer");
  std::vector<double> scores(n);
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    logits[i] = forward_dense(model.deferral_head(i), hidden[i])[0];
    scores[i] = sigmoid(logits[i]);
  }
  WeightedLoss loss = dc_loss(scores, hard);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = depth_weight(i, n) * (scores[i] - static_cast<double>(hard));
    const double logit[1] = {logits[i]};
    const double grad_out[1] = {g};
    backward_dense(model.deferral_head(i), hidden[i], logit, grad_out,
                   grad.deferral_heads[model.shared_dc() ? 0 : i]);
  }
  return loss;
}

std::vector<double> deferral_error(const MultiExitModel& model, const HardnessLabeledSet& set,
                                   std::span<const std::size_t> rows) {
  std::vector<double> errors(model.depth(), 0.0);
  if (rows.empty()) return errors;
  for (std::size_t r : rows) {
    const auto h = hidden_states(model, set.features.row(r));
    for (std::size_t i = 0; i < model.depth(); ++i) {
      const bool says_hard = model.readout(i, h[i]).hardness >= 0.5;
      if (says_hard != (set.hard[r] == 1)) errors[i] += 1.0;
    }
  }
  for (double& e : errors) e /= static_cast<double>(rows.size());
  return errors;
}

DcTrainingResult train_dcs(MultiExitModel model, const HardnessLabeledSet& set,
                           const TrainConfig& config) {
  config.validate();
  if (set.size() == 0) throw std::invalid_argument("labelled set is empty");
  if (set.features.rows != set.size()) {
    throw std::invalid_argument("labelled set has no features attached");
  }
  if (set.features.cols != model.input_width()) {
    throw ShapeError("labelled feature width does not match the model", 0);
  }
  const std::size_t hard = set.hard_count();
  if (hard == 0 || hard == set.size()) {
    throw TrainingError("hard/easy labels are all one class; deferral training is degenerate");
  }

  auto [train_rows, holdout_rows] =
      holdout_split(set.size(), config.validation_fraction, config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::vector<std::vector<double>>> cache(set.size());
  for (std::size_t r : train_rows) cache[r] = hidden_states(model, set.features.row(r));

  ModelGradient grad(model);
  const auto blocks = parameter_blocks(model, grad, ParameterGroup::deferral_heads);
  AdamOptimizer optimizer(AdamConfig{.learning_rate = config.learning_rate});

  DcTrainingResult result{model, {}, {}, {}, {}};
  std::vector<std::size_t> order = train_rows;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::seed_seq epoch_seed{static_cast<std::uint32_t>(config.seed),
                             static_cast<std::uint32_t>(config.seed >> 32),
                             static_cast<std::uint32_t>(epoch), 0xdcu};
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      grad.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t r = order[k];
        const auto loss = accumulate_dc_gradient(model, cache[r], set.hard[r], grad);
        if (!std::isfinite(loss.aggregate)) throw TrainingError("deferral loss diverged");
        epoch_loss += loss.aggregate;
      }
      grad.scale(1.0 / static_cast<double>(stop - start));
      optimizer.step(blocks);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  result.holdout_error = deferral_error(model, set, holdout_rows);
  result.holdout_loss.assign(model.depth(), 0.0);
  for (std::size_t r : holdout_rows) {
    const auto h = hidden_states(model, set.features.row(r));
    std::vector<double> scores;
    for (std::size_t i = 0; i < model.depth(); ++i) scores.push_back(model.readout(i, h[i]).hardness);
    const auto loss = dc_loss(scores, set.hard[r]);
    for (std::size_t i = 0; i < model.depth(); ++i) result.holdout_loss[i] += loss.per_layer[i];
  }
  for (double& l : result.holdout_loss) l /= static_cast<double>(holdout_rows.size());
  result.holdout_rows = std::move(holdout_rows);
  result.model = std::move(model);
  return result;
}

void write_dc_report(std::ostream& out, const DcTrainingResult& result) {
  out << "layer,q_d_holdout,loss\n";
  for (std::size_t i = 0; i < result.holdout_error.size(); ++i) {
    out << (i + 1) << ',' << format_double(result.holdout_error[i]) << ','
        << format_double(result.holdout_loss[i]) << '\n';
  }
}

}  // namespace eesp
