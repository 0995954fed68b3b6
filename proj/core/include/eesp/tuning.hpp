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

#include <iosfwd>
#include <span>
#include <vector>

#include "eesp/gating.hpp"

namespace eesp {

/// {0.75, 0.8, 0.85, 0.9, 0.95}
std::span<const double> default_alpha_grid();
/// {0.55, 0.6, 0.65, 0.7, 0.75}
std::span<const double> default_beta_grid();

struct GridResult {
  Thresholds best;
  SelectiveMetrics best_metrics;
  std::vector<SelectiveMetrics> cells;  // alpha-major, |alphas| * |betas| rows
};

/// True when `a` should be preferred over `b`: lower risk, then higher
/// coverage, then higher speedup, then lower alpha (then lower beta).
bool better_cell(const SelectiveMetrics& a, const SelectiveMetrics& b);

/// Exhaustive search for the cell with minimal empirical selective risk.
/// Grid values must lie strictly in (0, 1) and be unique; throws
/// std::invalid_argument on empty grids or an empty dataset.
GridResult grid_search(const MultiExitModel& model, const Dataset& validation,
                       std::span<const double> alphas, std::span<const double> betas,
                       const ExpertOracle& oracle);

/// Selective metrics at fixed alpha for each beta in an ascending sweep.
/// Coverage along the result is non-decreasing.
std::vector<SelectiveMetrics> risk_coverage_curve(const MultiExitModel& model,
                                                  const Dataset& data, double alpha,
                                                  std::span<const double> betas,
                                                  const ExpertOracle& oracle);

/// Softmax-response baseline thresholded at the final-layer confidence that
/// covers round(target_coverage * m) samples (more when confidences tie).
SelectiveMetrics baseline_at_coverage(const MultiExitModel& model, const Dataset& data,
                                      double target_coverage);

/// Evenly spaced betas in [lo, hi], `count` >= 1 points.
std::vector<double> linear_sweep(double lo, double hi, std::size_t count);

/// CSV: beta,coverage,risk.
void write_curve_csv(std::ostream& out, std::span<const SelectiveMetrics> curve);

}  // namespace eesp
