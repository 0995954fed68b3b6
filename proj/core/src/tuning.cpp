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

#include "eesp/tuning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <set>
#include <stdexcept>

#include "eesp/text_io.hpp"

namespace eesp {

namespace {

constexpr std::array<double, 5> kAlphaGrid{0.75, 0.8, 0.85, 0.9, 0.95};
constexpr std::array<double, 5> kBetaGrid{0.55, 0.6, 0.65, 0.7, 0.75};

void check_grid(std::span<const double> grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
  std::set<double> seen;
  for (double v : grid) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::invalid_argument(std::string(name) + " grid values must lie in (0, 1)");
    }
    if (!seen.insert(v).second) {
      throw std::invalid_argument(std::string(name) + " grid has duplicate values");
    }
  }
}

}  // namespace

std::span<const double> default_alpha_grid() { return kAlphaGrid; }
std::span<const double> default_beta_grid() { return kBetaGrid; }

bool better_cell(const SelectiveMetrics& a, const SelectiveMetrics& b) {
  if (a.risk != b.risk) return a.risk < b.risk;
  if (a.coverage != b.coverage) return a.coverage > b.coverage;
  if (a.speedup != b.speedup) return a.speedup > b.speedup;
  if (a.thresholds.alpha != b.thresholds.alpha) return a.thresholds.alpha < b.thresholds.alpha;
  return a.thresholds.beta < b.thresholds.beta;
}

GridResult grid_search(const MultiExitModel& model, const Dataset& validation,
                       std::span<const double> alphas, std::span<const double> betas,
                       const ExpertOracle& oracle) {
  check_grid(alphas, "alpha");
  check_grid(betas, "beta");
  if (validation.size() == 0) throw std::invalid_argument("validation set is empty");

  const auto table = readout_table(model, validation);
  GridResult result;
  result.cells.reserve(alphas.size() * betas.size());
  for (double a : alphas) {
    for (double b : betas) {
      result.cells.push_back(evaluate_cached(table, validation.labels, Thresholds{a, b}, &oracle));
    }
  }
  const auto best = std::min_element(result.cells.begin(), result.cells.end(), better_cell);
  result.best_metrics = *best;
  result.best = best->thresholds;
  return result;
}

std::vector<SelectiveMetrics> risk_coverage_curve(const MultiExitModel& model,
                                                  const Dataset& data, double alpha,
                                                  std::span<const double> betas,
                                                  const ExpertOracle& oracle) {
  if (!std::is_sorted(betas.begin(), betas.end())) {
    throw std::invalid_argument("beta sweep must be sorted ascending");
  }
  std::vector<SelectiveMetrics> curve;
  if (betas.empty()) return curve;
  const auto table = readout_table(model, data);
  for (double b : betas) curve.push_back(evaluate_cached(table, data.labels, Thresholds{alpha, b}, &oracle));
  return curve;
}

SelectiveMetrics baseline_at_coverage(const MultiExitModel& model, const Dataset& data,
                                      double target_coverage) {
  if (!(target_coverage >= 0.0 && target_coverage <= 1.0)) {
    throw std::invalid_argument("target coverage must lie in [0, 1]");
  }
  if (data.size() == 0) throw std::invalid_argument("evaluation set is empty");
  std::vector<double> confidence;
  confidence.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    confidence.push_back(forward_all(model, data.row(s)).readouts.back().confidence);
  }
  std::sort(confidence.begin(), confidence.end(), std::greater<>());
  const auto want = static_cast<std::size_t>(
      std::floor(target_coverage * static_cast<double>(data.size()) + 0.5));
  // Nothing covered needs a threshold above every confidence; 1.0 is only
  // reached by a saturated softmax, which is the best [0, 1] allows.
  const double alpha = want == 0 ? 1.0 : confidence[want - 1];
  return baseline_sr(model, data, alpha);
}

std::vector<double> linear_sweep(double lo, double hi, std::size_t count) {
  if (count == 0) throw std::invalid_argument("sweep needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

void write_curve_csv(std::ostream& out, std::span<const SelectiveMetrics> curve) {
  out << "beta,coverage,risk\n";
  for (const auto& m : curve) {
    out << format_double(m.thresholds.beta) << ',' << format_double(m.coverage) << ','
        << format_double(m.risk) << '\n';
  }
}

}  // namespace eesp
