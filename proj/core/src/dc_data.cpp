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

#include "eesp/dc_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "eesp/text_io.hpp"

namespace eesp {

ConfidenceProfile make_profile(std::size_t sample_id, std::vector<double> true_class_probs) {
  if (true_class_probs.empty()) throw std::invalid_argument("profile needs at least one layer");
  ConfidenceProfile p;
  p.sample_id = sample_id;
  const double n = static_cast<double>(true_class_probs.size());
  p.mean = std::accumulate(true_class_probs.begin(), true_class_probs.end(), 0.0) / n;
  for (double v : true_class_probs) p.variance += (v - p.mean) * (v - p.mean);
  p.variance /= n;
  p.true_class_probs = std::move(true_class_probs);
  return p;
}

std::vector<ConfidenceProfile> profile(const MultiExitModel& model, const Dataset& data) {
  std::vector<ConfidenceProfile> out;
  out.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    out.push_back(make_profile(s, true_class_probs(model, data.row(s), data.labels[s])));
  }
  return out;
}

std::size_t HardnessLabeledSet::hard_count() const {
  return static_cast<std::size_t>(std::count(hard.begin(), hard.end(), 1));
}

std::size_t hard_quota(double k_percent, std::size_t m) {
  return static_cast<std::size_t>(std::floor(k_percent * static_cast<double>(m) / 100.0 + 0.5));
}

HardnessLabeledSet label_hard(std::span<const ConfidenceProfile> profiles, double k_percent) {
  if (!(k_percent > 0.0 && k_percent < 100.0)) {
    throw std::invalid_argument("K must lie strictly between 0 and 100");
  }
  const std::size_t m = profiles.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (profiles[a].mean != profiles[b].mean) return profiles[a].mean < profiles[b].mean;
    return profiles[a].sample_id < profiles[b].sample_id;
  });

  HardnessLabeledSet set;
  set.k_percent = k_percent;
  set.hard.assign(m, 0);
  set.sample_ids.reserve(m);
  for (const auto& p : profiles) set.sample_ids.push_back(p.sample_id);
  const std::size_t quota = std::min(m, hard_quota(k_percent, m));
  for (std::size_t k = 0; k < quota; ++k) set.hard[order[k]] = 1;
  return set;
}

void attach_features(HardnessLabeledSet& set, const Dataset& data) {
  set.features = Matrix(set.size(), data.width());
  for (std::size_t k = 0; k < set.size(); ++k) {
    const std::size_t id = set.sample_ids[k];
    if (id >= data.size()) throw std::out_of_range("sample id outside the dataset");
    const auto src = data.row(id);
    std::copy(src.begin(), src.end(), set.features.row(k).begin());
  }
}

void write_profiles_csv(std::ostream& out, std::span<const ConfidenceProfile> profiles,
                        const HardnessLabeledSet& labels) {
  const std::size_t n = profiles.empty() ? 0 : profiles.front().true_class_probs.size();
  out << "sample_id";
  for (std::size_t i = 0; i < n; ++i) out << ",p_layer_" << (i + 1);
  out << ",mu,sigma,label\n";
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto& p = profiles[k];
    out << p.sample_id;
    for (double v : p.true_class_probs) out << ',' << format_double(v);
    out << ',' << format_double(p.mean) << ',' << format_double(p.variance) << ','
        << labels.hard.at(k) << '\n';
  }
}

}  // namespace eesp
