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
#include <iosfwd>
#include <span>
#include <vector>

#include "eesp/dataset.hpp"
#include "eesp/model.hpp"

namespace eesp {

inline constexpr double kDefaultHardPercent = 33.0;

/// True-class probability across exits for one training sample.
struct ConfidenceProfile {
  std::size_t sample_id = 0;
  std::vector<double> true_class_probs;
  double mean = 0.0;      // arithmetic mean over layers
  double variance = 0.0;  // population variance over layers; reported only
};

ConfidenceProfile make_profile(std::size_t sample_id, std::vector<double> true_class_probs);

/// One profile per row of `data`, with sample_id = row index.
std::vector<ConfidenceProfile> profile(const MultiExitModel& model, const Dataset& data);

/// Hard/easy targets for the deferral heads. `hard` is indexed like the
/// profiles it was built from; `features` is filled by attach_features.
struct HardnessLabeledSet {
  std::vector<std::size_t> sample_ids;
  std::vector<int> hard;  // 1 = hard, 0 = easy
  Matrix features;
  double k_percent = kDefaultHardPercent;

  std::size_t size() const { return sample_ids.size(); }
  std::size_t hard_count() const;
};

/// round-half-up(k_percent * m / 100).
std::size_t hard_quota(double k_percent, std::size_t m);

/// Sorts by mean ascending (ties by sample id) and marks the first
/// hard_quota(k_percent, m) samples hard. Variance is ignored.
/// Throws std::invalid_argument unless 0 < k_percent < 100.
HardnessLabeledSet label_hard(std::span<const ConfidenceProfile> profiles,
                              double k_percent = kDefaultHardPercent);

/// Copies each labelled sample's feature row from `data` (by sample id).
void attach_features(HardnessLabeledSet& set, const Dataset& data);

/// CSV: sample_id,p_layer_1..p_layer_n,mu,sigma,label.
void write_profiles_csv(std::ostream& out, std::span<const ConfidenceProfile> profiles,
                        const HardnessLabeledSet& labels);

}  // namespace eesp
