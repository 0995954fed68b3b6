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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eesp/numeric.hpp"

namespace eesp {

enum class Split { train, validation, test };

std::string_view to_string(Split split);

/// Labelled feature matrix. Rows of `features` align with `labels`.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t num_classes = 2;
  Split split = Split::train;
  std::string provenance;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return features.cols; }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  /// Throws std::invalid_argument on mismatched row counts, out-of-range
  /// labels or non-finite features.
  void validate() const;
};

/// Rows `indices` of `source`, in that order.
Dataset subset(const Dataset& source, std::span<const std::size_t> indices);

/// Gaussian class clusters on a circle in the first two feature dimensions.
///
/// Each cluster has standard deviation 0.5 + overlap and neighbouring
/// centroids sit `separation` apart. A `fake_fraction` of the points keep
/// their label but are drawn from another class's cluster, and are
/// displaced by `fake_shift` along the last feature dimension (when
/// dims > 2), which gives them a shared, learnable signature.
struct MixtureSpec {
  std::size_t dims = 2;
  std::size_t classes = 2;
  std::size_t samples = 1000;
  double overlap = 0.0;
  double separation = 4.0;
  double fake_fraction = 0.0;
  double fake_shift = 0.0;
  std::uint64_t seed = 0;
};

Dataset gen_mixture(const MixtureSpec& spec);

/// Centroid of class `label` under `spec`.
std::vector<double> mixture_centroid(const MixtureSpec& spec, std::size_t label);

enum class ShiftKind { translate, noise, rotate };

std::string_view to_string(ShiftKind kind);
/// Throws std::invalid_argument on an unknown name.
ShiftKind parse_shift_kind(std::string_view name);

/// Covariate shift with labels preserved. translate adds magnitude along
/// the unit diagonal, noise adds N(0, magnitude^2) per feature, rotate turns
/// the first two dimensions by `magnitude` radians. Magnitude 0 is identity.
Dataset shift(const Dataset& data, ShiftKind kind, double magnitude, std::uint64_t seed = 0);

/// CSV with header f1..fd,label. Throws ParseError with a 1-based line number.
/// When `num_classes` is absent it is inferred as max label + 1 (at least 2).
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> num_classes = std::nullopt,
                 Split split = Split::train);
Dataset parse_csv(std::string_view text, std::optional<std::size_t> num_classes = std::nullopt,
                  Split split = Split::train);
std::string to_csv(const Dataset& data);
void save_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace eesp
