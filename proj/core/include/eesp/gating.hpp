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

// Three-way exit gate (defer / exit / continue) with expert deferral, and
// the selective metrics computed from per-sample traces.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "eesp/dataset.hpp"
#include "eesp/model.hpp"

namespace eesp {

/// alpha: exit when confidence >= alpha. beta: defer when hardness >= beta.
/// Both must lie in [0, 1]; the closed ends are the degenerate
/// always/never settings.
struct Thresholds {
  double alpha = 0.9;
  double beta = 0.65;

  void validate() const;
};

enum class GateDecision { exit, defer, next };

struct GateOutcome {
  GateDecision decision = GateDecision::next;
  std::size_t label = 0;  // meaningful for exit only
};

/// Non-final layer: defer if hardness >= beta, else exit if confidence >=
/// alpha, else go on. Final layer: exit if confidence >= alpha, otherwise
/// defer; hardness is not consulted.
GateOutcome gate_step(const LayerReadout& readout, const Thresholds& thresholds,
                      bool is_final_layer);

struct LayerVisit {
  double confidence = 0.0;
  double hardness = 0.0;
  bool operator==(const LayerVisit&) const = default;
};

/// Path of one sample. `depth` is the 1-based layer where it terminated.
struct Trace {
  std::size_t depth = 0;
  bool covered = false;          // exited with a model prediction
  std::size_t predicted = 0;     // exit prediction when covered
  std::vector<LayerVisit> visits;

  bool operator==(const Trace&) const = default;
};

/// Walks the gates over lazily produced readouts: `readout_at(i)` is called
/// for i = 0, 1, ... only until the sample terminates.
template <class ReadoutAt>
Trace walk_gates(std::size_t depth, const Thresholds& thresholds, ReadoutAt&& readout_at) {
  Trace trace;
  for (std::size_t i = 0; i < depth; ++i) {
    const LayerReadout r = readout_at(i);
    trace.visits.push_back({r.confidence, r.hardness});
    const GateOutcome out = gate_step(r, thresholds, i + 1 == depth);
    if (out.decision == GateDecision::next) continue;
    trace.depth = i + 1;
    trace.covered = out.decision == GateDecision::exit;
    trace.predicted = trace.covered ? out.label : 0;
    return trace;
  }
  return trace;  // unreachable for depth >= 1: the final gate never says next
}

/// Gates over precomputed readouts (one per layer).
Trace run_gates(std::span<const LayerReadout> readouts, const Thresholds& thresholds);

/// Resolves deferred samples.
class ExpertOracle {
 public:
  virtual ~ExpertOracle() = default;
  /// Label for `sample_id`, or nullopt when the expert cannot answer.
  virtual std::optional<int> label_for(std::size_t sample_id) const = 0;
};

/// Returns the gold label.
class GoldLabelOracle final : public ExpertOracle {
 public:
  explicit GoldLabelOracle(std::span<const int> labels) : labels_(labels) {}
  std::optional<int> label_for(std::size_t sample_id) const override;

 private:
  std::span<const int> labels_;
};

/// Gold label flipped to a different class with probability `flip_rate`,
/// decided deterministically per (seed, sample id).
class NoisyExpertOracle final : public ExpertOracle {
 public:
  NoisyExpertOracle(std::span<const int> labels, std::size_t num_classes, double flip_rate,
                    std::uint64_t seed);
  std::optional<int> label_for(std::size_t sample_id) const override;

 private:
  std::span<const int> labels_;
  std::size_t num_classes_;
  double flip_rate_;
  std::uint64_t seed_;
};

struct InferenceResult {
  int label = -1;  // model prediction when covered, expert label when deferred
  Trace trace;
};

/// Runs `x` through the model layer by layer, computing only the layers it
/// visits. Throws std::runtime_error if a deferred sample's expert has no
/// answer.
InferenceResult infer(const MultiExitModel& model, std::span<const double> x,
                      std::size_t sample_id, const Thresholds& thresholds,
                      const ExpertOracle& oracle);

struct SelectiveMetrics {
  Thresholds thresholds;
  std::size_t depth = 0;
  std::size_t total = 0;
  std::size_t covered = 0;
  std::size_t miscovered = 0;
  std::size_t deferrals = 0;
  double coverage = 0.0;
  double risk = 0.0;  // miscovered / covered; 0 when nothing is covered
  bool risk_defined = false;
  double speedup = 1.0;
  std::vector<std::size_t> exit_histogram;        // terminations (exit or defer) per layer
  std::vector<std::size_t> covered_per_layer;
  std::vector<std::size_t> miscovered_per_layer;
  double system_accuracy = 0.0;  // over all samples, using expert labels for deferrals

  /// Per-layer selective risk R_i; nullopt where nothing exited.
  std::vector<std::optional<double>> layer_risk() const;
};

/// Metrics from traces. `truth` holds gold labels; `final_labels`, when
/// given, holds the label actually returned per sample (for system accuracy).
SelectiveMetrics summarize(std::span<const Trace> traces, std::span<const int> truth,
                           std::size_t depth, const Thresholds& thresholds,
                           std::span<const int> final_labels = {});

/// (n * total) / sum_i i * x_i over the termination histogram.
double speedup_ratio(std::span<const std::size_t> exit_histogram);

struct Evaluation {
  SelectiveMetrics metrics;
  std::vector<Trace> traces;
  std::vector<int> labels;
};

/// Throws std::invalid_argument on an empty dataset and ShapeError on a
/// width mismatch.
Evaluation evaluate_detailed(const MultiExitModel& model, const Dataset& data,
                             const Thresholds& thresholds, const ExpertOracle& oracle);
SelectiveMetrics evaluate(const MultiExitModel& model, const Dataset& data,
                          const Thresholds& thresholds, const ExpertOracle& oracle);

/// Softmax-response baseline: every sample runs to the last layer and is
/// covered iff its final confidence >= alpha.
SelectiveMetrics baseline_sr(const MultiExitModel& model, const Dataset& data, double alpha);

/// Per-sample readouts for every layer, for repeated gating of one dataset.
std::vector<std::vector<LayerReadout>> readout_table(const MultiExitModel& model,
                                                     const Dataset& data);
/// Same result as evaluate(), gated over a readout_table. Without an
/// oracle, deferred samples are resolved with the gold label.
SelectiveMetrics evaluate_cached(std::span<const std::vector<LayerReadout>> table,
                                 std::span<const int> truth, const Thresholds& thresholds,
                                 const ExpertOracle* oracle = nullptr);

/// CSV: alpha,beta,risk,coverage,speedup,deferrals,exit_hist_1..exit_hist_n.
void write_metrics_csv(std::ostream& out, std::span<const SelectiveMetrics> rows);

}  // namespace eesp
