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

// Deferral-error bounds and a Monte Carlo check of them.
//
// For an exit with error rate q and a deferral head with error rate q_d,
// the covered-risk ratio is q q_d / (q q_d + (1 - q)(1 - q_d)). It stays
// below gamma exactly when
//
//     q_d < 1 / (1 + (1/gamma - 1) * q / (1 - q)).
//
// Taking q = max_t q_t gives the whole-network condition on max_t q_d.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eesp {

/// Largest admissible deferral error for exit error `q` and target risk
/// `gamma`. Throws std::invalid_argument unless both lie in (0, 1).
double lemma_bound(double q, double gamma);

/// Same formula at the worst exit error rate.
double theorem_bound(double q_max, double gamma);
double theorem_bound(std::span<const double> exit_error, double gamma);

/// Parameters of the binary exit pipeline simulated by simulate_pipeline.
/// All vectors have one entry per layer.
struct BoundSpec {
  double gamma = 0.1;
  std::vector<double> exit_error;      // q_t, in (0, 1)
  std::vector<double> deferral_error;  // q_t^d, in [0, 1)
  std::vector<double> reach;           // a_t, in (0, 1]
  std::vector<double> clear;           // b_t, in (0, 1]

  /// n layers with the same rates and a_t = b_t = 1.
  static BoundSpec uniform(std::size_t layers, double q, double q_d, double gamma);

  std::size_t layers() const { return exit_error.size(); }
  /// Throws std::invalid_argument on inconsistent lengths or out-of-range values.
  void validate() const;
};

struct SimulationResult {
  std::uint64_t trials = 0;
  std::uint64_t covered = 0;
  std::uint64_t miscovered = 0;
  std::uint64_t deferred = 0;
  std::vector<std::uint64_t> covered_per_layer;
  std::vector<std::uint64_t> miscovered_per_layer;
  double risk = 0.0;            // miscovered / covered (0 when nothing covered)
  double standard_error = 0.0;  // sqrt(risk (1 - risk) / covered)
  double half_width = 0.0;      // 3 standard errors

  std::vector<std::optional<double>> layer_risk() const;
};

/// Monte Carlo of the pipeline behind the bound. Per trial and per layer t
/// reached: the exit is wrong with probability q_t; the deferral head
/// errs with probability q_t^d (a wrong sample slips through only when it
/// errs, a right one only when it does not); with probability 1 - a_t the
/// sample is deferred regardless; otherwise it exits covered with
/// probability b_t, else moves on. Anything still running after layer n is
/// deferred.
///
/// Trials are split over a fixed number of partitions with seeds derived
/// from `seed`, so results do not depend on the thread count.
SimulationResult simulate_pipeline(const BoundSpec& spec, std::uint64_t trials,
                                   std::uint64_t seed);

/// Covered-risk ratio of one gated exit: q q_d / (q q_d + (1-q)(1-q_d)).
double covered_risk(double q, double q_d);

/// Measured rates from a trained model. `exit_error[i]` is the error among
/// covered samples terminating at layer i (nullopt when none did).
struct ModelBoundInputs {
  std::vector<std::optional<double>> exit_error;
  std::vector<double> deferral_error;
  double empirical_risk = 0.0;
  std::size_t covered = 0;
};

struct BoundReport {
  double gamma = 0.0;
  double q_max = 0.0;
  double q_d_max = 0.0;
  double bound = 0.0;
  bool bound_satisfied = false;
  double empirical_risk = 0.0;
  double half_width = 0.0;  // 3 binomial standard errors of empirical_risk
  bool risk_below_gamma = false;
  /// Bound holds but the measured risk does not (or the reverse).
  bool disagreement = false;
  std::vector<std::size_t> excluded_layers;  // 0-based; no covered samples
  std::vector<std::string> warnings;
};

/// Throws std::invalid_argument unless 0 < gamma < 1, or when no layer has
/// a measurable exit error.
BoundReport verify_model_bound(const ModelBoundInputs& inputs, double gamma);

/// key=value lines: gamma, q_max, q_d_max, bound, bound_satisfied,
/// empirical_risk, half_width (plus risk_below_gamma, disagreement, and any
/// warnings).
void write_bound_report(std::ostream& out, const BoundReport& report);

}  // namespace eesp
