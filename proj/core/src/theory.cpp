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

#include "eesp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "eesp/text_io.hpp"

namespace eesp {

namespace {

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

// Fixed so that results are independent of the machine's thread count.
constexpr std::size_t kPartitions = 16;

struct PartitionCounts {
  std::uint64_t covered = 0;
  std::uint64_t miscovered = 0;
  std::uint64_t deferred = 0;
  std::vector<std::uint64_t> covered_per_layer;
  std::vector<std::uint64_t> miscovered_per_layer;
};

PartitionCounts run_partition(const BoundSpec& spec, std::uint64_t trials, std::uint64_t seed,
                              std::size_t partition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(partition)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const std::size_t n = spec.layers();
  PartitionCounts c;
  c.covered_per_layer.assign(n, 0);
  c.miscovered_per_layer.assign(n, 0);
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    bool done = false;
    for (std::size_t t = 0; t < n && !done; ++t) {
      // Draw every event for the layer up front to keep the stream layout fixed.
      const bool wrong = u(rng) < spec.exit_error[t];
      const bool dc_errs = u(rng) < spec.deferral_error[t];
      const bool reached = u(rng) < spec.reach[t];
      const bool clears = u(rng) < spec.clear[t];
      const bool dc_passes = wrong ? dc_errs : !dc_errs;
      if (!reached || !dc_passes) {
        ++c.deferred;
        done = true;
      } else if (clears) {
        ++c.covered;
        ++c.covered_per_layer[t];
        if (wrong) {
          ++c.miscovered;
          ++c.miscovered_per_layer[t];
        }
        done = true;
      }
    }
    if (!done) ++c.deferred;
  }
  return c;
}

}  // namespace

double lemma_bound(double q, double gamma) {
  if (!open_unit(q)) throw std::invalid_argument("exit error rate must lie in (0, 1)");
  if (!open_unit(gamma)) throw std::invalid_argument("gamma must lie in (0, 1)");
  return 1.0 / (1.0 + ((1.0 / gamma) - 1.0) * (q / (1.0 - q)));
}

double theorem_bound(double q_max, double gamma) { return lemma_bound(q_max, gamma); }

double theorem_bound(std::span<const double> exit_error, double gamma) {
  if (exit_error.empty()) throw std::invalid_argument("need at least one exit error rate");
  return theorem_bound(*std::max_element(exit_error.begin(), exit_error.end()), gamma);
}

double covered_risk(double q, double q_d) {
  const double wrong = q * q_d;
  const double right = (1.0 - q) * (1.0 - q_d);
  return wrong + right > 0.0 ? wrong / (wrong + right) : 0.0;
}

BoundSpec BoundSpec::uniform(std::size_t layers, double q, double q_d, double gamma) {
  BoundSpec s;
  s.gamma = gamma;
  s.exit_error.assign(layers, q);
  s.deferral_error.assign(layers, q_d);
  s.reach.assign(layers, 1.0);
  s.clear.assign(layers, 1.0);
  return s;
}

void BoundSpec::validate() const {
  const std::size_t n = exit_error.size();
  if (n == 0) throw std::invalid_argument("bound spec needs at least one layer");
  if (deferral_error.size() != n || reach.size() != n || clear.size() != n) {
    throw std::invalid_argument("bound spec vectors must all have one entry per layer");
  }
  if (!open_unit(gamma)) throw std::invalid_argument("gamma must lie in (0, 1)");
  for (std::size_t t = 0; t < n; ++t) {
    if (!open_unit(exit_error[t])) throw std::invalid_argument("q_t must lie in (0, 1)");
    if (!(deferral_error[t] >= 0.0 && deferral_error[t] < 1.0)) {
      throw std::invalid_argument("q_t^d must lie in [0, 1)");
    }
    if (!(reach[t] > 0.0 && reach[t] <= 1.0) || !(clear[t] > 0.0 && clear[t] <= 1.0)) {
      throw std::invalid_argument("a_t and b_t must lie in (0, 1]");
    }
  }
}

std::vector<std::optional<double>> SimulationResult::layer_risk() const {
  std::vector<std::optional<double>> out(covered_per_layer.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (covered_per_layer[i] > 0) {
      out[i] = static_cast<double>(miscovered_per_layer[i]) /
               static_cast<double>(covered_per_layer[i]);
    }
  }
  return out;
}

SimulationResult simulate_pipeline(const BoundSpec& spec, std::uint64_t trials,
                                   std::uint64_t seed) {
  spec.validate();
  if (trials == 0) throw std::invalid_argument("need at least one trial");

  std::vector<PartitionCounts> parts(kPartitions);
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, kPartitions);
  auto share = [&](std::size_t p) {
    return trials / kPartitions + (p < trials % kPartitions ? 1 : 0);
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t p = w; p < kPartitions; p += workers) {
          parts[p] = run_partition(spec, share(p), seed, p);
        }
      });
    }
  }

  SimulationResult r;
  r.trials = trials;
  r.covered_per_layer.assign(spec.layers(), 0);
  r.miscovered_per_layer.assign(spec.layers(), 0);
  for (const auto& p : parts) {
    r.covered += p.covered;
    r.miscovered += p.miscovered;
    r.deferred += p.deferred;
    for (std::size_t t = 0; t < spec.layers(); ++t) {
      r.covered_per_layer[t] += p.covered_per_layer[t];
      r.miscovered_per_layer[t] += p.miscovered_per_layer[t];
    }
  }
  if (r.covered > 0) {
    const double covered = static_cast<double>(r.covered);
    r.risk = static_cast<double>(r.miscovered) / covered;
    r.standard_error = std::sqrt(r.risk * (1.0 - r.risk) / covered);
    r.half_width = 3.0 * r.standard_error;
  }
  return r;
}

BoundReport verify_model_bound(const ModelBoundInputs& inputs, double gamma) {
  if (!open_unit(gamma)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (inputs.deferral_error.size() != inputs.exit_error.size()) {
    throw std::invalid_argument("need one deferral error per layer");
  }
  BoundReport report;
  report.gamma = gamma;

  std::optional<double> q_max;
  for (std::size_t i = 0; i < inputs.exit_error.size(); ++i) {
    const auto& q = inputs.exit_error[i];
    if (!q) {
      report.excluded_layers.push_back(i);
      report.warnings.push_back("layer " + std::to_string(i + 1) +
                                " has no covered samples; exit error unavailable");
      continue;
    }
    q_max = std::max(q_max.value_or(0.0), *q);
  }
  if (!q_max) throw std::invalid_argument("no layer has a measurable exit error rate");
  report.q_max = *q_max;
  report.q_d_max = inputs.deferral_error.empty()
                       ? 0.0
                       : *std::max_element(inputs.deferral_error.begin(),
                                           inputs.deferral_error.end());

  // The closed form needs q in (0, 1); clamp the degenerate measured ends.
  if (report.q_max <= 0.0) {
    report.bound = 1.0;
  } else if (report.q_max >= 1.0) {
    report.bound = 0.0;
  } else {
    report.bound = theorem_bound(report.q_max, gamma);
  }
  report.bound_satisfied = report.q_d_max < report.bound;

  report.empirical_risk = inputs.empirical_risk;
  if (inputs.covered > 0) {
    const double r = inputs.empirical_risk;
    report.half_width = 3.0 * std::sqrt(r * (1.0 - r) / static_cast<double>(inputs.covered));
  }
  report.risk_below_gamma = inputs.empirical_risk < gamma;
  report.disagreement = report.bound_satisfied != report.risk_below_gamma;
  if (report.bound_satisfied && !report.risk_below_gamma) {
    report.warnings.push_back("bound satisfied but measured risk exceeds gamma");
  } else if (!report.bound_satisfied && report.risk_below_gamma) {
    report.warnings.push_back("bound violated although measured risk is below gamma");
  }
  return report;
}

void write_bound_report(std::ostream& out, const BoundReport& report) {
  out << "gamma=" << format_double(report.gamma) << '\n'
      << "q_max=" << format_double(report.q_max) << '\n'
      << "q_d_max=" << format_double(report.q_d_max) << '\n'
      << "bound=" << format_double(report.bound) << '\n'
      << "bound_satisfied=" << (report.bound_satisfied ? "true" : "false") << '\n'
      << "empirical_risk=" << format_double(report.empirical_risk) << '\n'
      << "half_width=" << format_double(report.half_width) << '\n'
      << "risk_below_gamma=" << (report.risk_below_gamma ? "true" : "false") << '\n'
      << "disagreement=" << (report.disagreement ? "true" : "false") << '\n';
  for (std::size_t layer : report.excluded_layers) out << "excluded_layer=" << (layer + 1) << '\n';
  for (const auto& w : report.warnings) out << "warning=" << w << '\n';
}

}  // namespace eesp
