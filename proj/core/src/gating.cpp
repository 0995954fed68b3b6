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

#include "eesp/gating.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"

namespace eesp {

void Thresholds::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
}

GateOutcome gate_step(const LayerReadout& readout, const Thresholds& thresholds,
                      bool is_final_layer) {
  if (is_final_layer) {
    if (readout.confidence >= thresholds.alpha) return {GateDecision::exit, readout.predicted};
    return {GateDecision::defer, 0};
  }
  if (readout.hardness >= thresholds.beta) return {GateDecision::defer, 0};
  if (readout.confidence >= thresholds.alpha) return {GateDecision::exit, readout.predicted};
  return {GateDecision::next, 0};
}

Trace run_gates(std::span<const LayerReadout> readouts, const Thresholds& thresholds) {
  if (readouts.empty()) throw std::invalid_argument("run_gates needs at least one readout");
  return walk_gates(readouts.size(), thresholds, [&](std::size_t i) { return readouts[i]; });
}

std::optional<int> GoldLabelOracle::label_for(std::size_t sample_id) const {
  if (sample_id >= labels_.size()) return std::nullopt;
  return labels_[sample_id];
}

NoisyExpertOracle::NoisyExpertOracle(std::span<const int> labels, std::size_t num_classes,
                                     double flip_rate, std::uint64_t seed)
    : labels_(labels), num_classes_(num_classes), flip_rate_(flip_rate), seed_(seed) {
  if (num_classes_ < 2) throw std::invalid_argument("noisy expert needs at least two classes");
  if (!(flip_rate_ >= 0.0 && flip_rate_ <= 1.0)) {
    throw std::invalid_argument("flip rate must lie in [0, 1]");
  }
}

std::optional<int> NoisyExpertOracle::label_for(std::size_t sample_id) const {
  if (sample_id >= labels_.size()) return std::nullopt;
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(sample_id),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(sample_id) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int gold = labels_[sample_id];
  if (coin(rng) >= flip_rate_) return gold;
  std::uniform_int_distribution<std::size_t> other(1, num_classes_ - 1);
  return static_cast<int>((static_cast<std::size_t>(gold) + other(rng)) % num_classes_);
}

InferenceResult infer(const MultiExitModel& model, std::span<const double> x,
                      std::size_t sample_id, const Thresholds& thresholds,
                      const ExpertOracle& oracle) {
  if (x.size() != model.input_width()) {
    throw ShapeError("input has width " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.input_width()),
                     0);
  }
  std::vector<double> hidden(x.begin(), x.end());
  InferenceResult result;
  result.trace = walk_gates(model.depth(), thresholds, [&](std::size_t i) {
    hidden = model.advance(i, hidden);
    return model.readout(i, hidden);
  });
  if (result.trace.covered) {
    result.label = static_cast<int>(result.trace.predicted);
  } else {
    const auto expert = oracle.label_for(sample_id);
    if (!expert) {
      throw std::runtime_error("expert has no label for deferred sample " +
                               std::to_string(sample_id));
    }
    result.label = *expert;
  }
  return result;
}

std::vector<std::optional<double>> SelectiveMetrics::layer_risk() const {
  std::vector<std::optional<double>> out(covered_per_layer.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (covered_per_layer[i] > 0) {
      out[i] = static_cast<double>(miscovered_per_layer[i]) /
               static_cast<double>(covered_per_layer[i]);
    }
  }
  return out;
}

double speedup_ratio(std::span<const std::size_t> exit_histogram) {
  const double n = static_cast<double>(exit_histogram.size());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < exit_histogram.size(); ++i) {
    total += static_cast<double>(exit_histogram[i]);
    weighted += static_cast<double>(i + 1) * static_cast<double>(exit_histogram[i]);
  }
  if (weighted == 0.0) return 1.0;
  return n * total / weighted;
}

SelectiveMetrics summarize(std::span<const Trace> traces, std::span<const int> truth,
                           std::size_t depth, const Thresholds& thresholds,
                           std::span<const int> final_labels) {
  if (traces.size() != truth.size()) throw std::invalid_argument("one label per trace required");
  if (!final_labels.empty() && final_labels.size() != traces.size()) {
    throw std::invalid_argument("one final label per trace required");
  }
  SelectiveMetrics m;
  m.thresholds = thresholds;
  m.depth = depth;
  m.total = traces.size();
  m.exit_histogram.assign(depth, 0);
  m.covered_per_layer.assign(depth, 0);
  m.miscovered_per_layer.assign(depth, 0);
  std::size_t system_correct = 0;
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const Trace& t = traces[s];
    if (t.depth < 1 || t.depth > depth) throw std::invalid_argument("trace depth out of range");
    const std::size_t layer = t.depth - 1;
    ++m.exit_histogram[layer];
    if (t.covered) {
      ++m.covered;
      ++m.covered_per_layer[layer];
      if (static_cast<int>(t.predicted) != truth[s]) {
        ++m.miscovered;
        ++m.miscovered_per_layer[layer];
      }
    } else {
      ++m.deferrals;
    }
    const int returned = !final_labels.empty() ? final_labels[s]
                         : t.covered           ? static_cast<int>(t.predicted)
                                               : truth[s];
    if (returned == truth[s]) ++system_correct;
  }
  if (m.total > 0) {
    m.coverage = static_cast<double>(m.covered) / static_cast<double>(m.total);
    m.system_accuracy = static_cast<double>(system_correct) / static_cast<double>(m.total);
  }
  m.risk_defined = m.covered > 0;
  m.risk = m.risk_defined ? static_cast<double>(m.miscovered) / static_cast<double>(m.covered)
                          : 0.0;
  m.speedup = speedup_ratio(m.exit_histogram);
  return m;
}

namespace {

void check_eval_inputs(const MultiExitModel& model, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("evaluation set is empty");
  if (data.width() != model.input_width()) {
    throw ShapeError("dataset width " + std::to_string(data.width()) +
                         " does not match model input width " +
                         std::to_string(model.input_width()),
                     0);
  }
}

}  // namespace

Evaluation evaluate_detailed(const MultiExitModel& model, const Dataset& data,
                             const Thresholds& thresholds, const ExpertOracle& oracle) {
  thresholds.validate();
  check_eval_inputs(model, data);
  Evaluation ev;
  ev.traces.reserve(data.size());
  ev.labels.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    auto r = infer(model, data.row(s), s, thresholds, oracle);
    ev.traces.push_back(std::move(r.trace));
    ev.labels.push_back(r.label);
  }
  ev.metrics = summarize(ev.traces, data.labels, model.depth(), thresholds, ev.labels);
  return ev;
}

SelectiveMetrics evaluate(const MultiExitModel& model, const Dataset& data,
                          const Thresholds& thresholds, const ExpertOracle& oracle) {
  return evaluate_detailed(model, data, thresholds, oracle).metrics;
}

SelectiveMetrics baseline_sr(const MultiExitModel& model, const Dataset& data, double alpha) {
  const Thresholds thresholds{alpha, 1.0};
  thresholds.validate();
  check_eval_inputs(model, data);
  const std::size_t n = model.depth();
  std::vector<Trace> traces;
  traces.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto pass = forward_all(model, data.row(s));
    Trace t;
    for (const auto& r : pass.readouts) t.visits.push_back({r.confidence, r.hardness});
    const auto& last = pass.readouts.back();
    t.depth = n;
    t.covered = last.confidence >= alpha;
    t.predicted = t.covered ? last.predicted : 0;
    traces.push_back(std::move(t));
  }
  return summarize(traces, data.labels, n, thresholds);
}

std::vector<std::vector<LayerReadout>> readout_table(const MultiExitModel& model,
                                                     const Dataset& data) {
  check_eval_inputs(model, data);
  std::vector<std::vector<LayerReadout>> table;
  table.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    table.push_back(forward_all(model, data.row(s)).readouts);
  }
  return table;
}

SelectiveMetrics evaluate_cached(std::span<const std::vector<LayerReadout>> table,
                                 std::span<const int> truth, const Thresholds& thresholds,
                                 const ExpertOracle* oracle) {
  thresholds.validate();
  if (table.empty()) throw std::invalid_argument("evaluation set is empty");
  std::vector<Trace> traces;
  std::vector<int> returned;
  traces.reserve(table.size());
  for (std::size_t s = 0; s < table.size(); ++s) {
    traces.push_back(run_gates(table[s], thresholds));
    if (!oracle) continue;
    if (traces.back().covered) {
      returned.push_back(static_cast<int>(traces.back().predicted));
    } else {
      const auto expert = oracle->label_for(s);
      if (!expert) {
        throw std::runtime_error("expert has no label for deferred sample " + std::to_string(s));
      }
      returned.push_back(*expert);
    }
  }
  return summarize(traces, truth, table.front().size(), thresholds, returned);
}

void write_metrics_csv(std::ostream& out, std::span<const SelectiveMetrics> rows) {
  const std::size_t n = rows.empty() ? 0 : rows.front().depth;
  out << "alpha,beta,risk,coverage,speedup,deferrals";
  for (std::size_t i = 0; i < n; ++i) out << ",exit_hist_" << (i + 1);
  out << '\n';
  for (const auto& m : rows) {
    out << format_double(m.thresholds.alpha) << ',' << format_double(m.thresholds.beta) << ','
        << format_double(m.risk) << ',' << format_double(m.coverage) << ','
        << format_double(m.speedup) << ',' << m.deferrals;
    for (std::size_t c : m.exit_histogram) out << ',' << c;
    out << '\n';
  }
}

}  // namespace eesp
