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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eesp/dataset.hpp"
#include "eesp/ec_training.hpp"
#include "eesp/gating.hpp"
#include "eesp/model.hpp"

namespace eesp {

inline constexpr const char* kManifestSchema = "eesp.run";
inline constexpr int kManifestVersion = 1;

struct DataConfig {
  MixtureSpec mixture;  // samples and seed are filled per split
  std::size_t train_size = 2000;
  std::size_t validation_size = 500;
  std::size_t test_size = 1000;
  ShiftKind shift_kind = ShiftKind::noise;
  double shift_magnitude = 0.75;
};

/// Everything needed to replay a run, plus what each phase produced. The
/// same document doubles as the input config (without `thresholds` and
/// `phases`).
struct RunManifest {
  std::uint64_t seed = 0;
  DataConfig data;
  std::vector<std::size_t> hidden_widths{16, 16, 16, 16};
  Activation activation = Activation::tanh;
  bool shared_dc = false;
  TrainConfig ec_training;
  TrainConfig dc_training;
  double k_percent = 33.0;
  std::vector<double> alpha_grid;
  std::vector<double> beta_grid;
  std::vector<double> curve_betas;
  double gamma = 0.1;
  std::optional<Thresholds> thresholds;
  /// phase name -> (artifact path relative to the run dir -> sha256)
  std::map<std::string, std::map<std::string, std::string>> phases;

  ModelShape model_shape() const;

  nlohmann::json to_json() const;
  /// Missing optional fields take defaults. Throws ParseError on a schema
  /// or version mismatch and on ill-typed fields.
  static RunManifest from_json(const nlohmann::json& doc);

  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Hashes the listed artifacts (relative to `run_dir`) under `phase`,
  /// replacing whatever that phase recorded before.
  void record_phase(const std::string& phase, const std::filesystem::path& run_dir,
                    const std::vector<std::string>& artifacts);
};

/// Independent 64-bit seed for `stream` derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace eesp
