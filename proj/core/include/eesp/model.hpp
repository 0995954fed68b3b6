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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eesp/numeric.hpp"

namespace eesp {

struct ModelShape {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden_widths;  // one entry per backbone layer
  std::size_t num_classes = 2;
  Activation activation = Activation::tanh;
  bool shared_dc = false;
};

enum class HeadInit { glorot, zeros };

/// What one exit reports for one input. `layer` is 0-based.
struct LayerReadout {
  std::size_t layer = 0;
  std::vector<double> class_probs;
  double confidence = 0.0;  // max of class_probs
  std::size_t predicted = 0;
  double hardness = 0.5;  // sigmoid of the deferral logit
};

/// Backbone of n dense layers with an exit head (class logits) and a
/// deferral head (one hardness logit) after every layer.
///
/// When `shared_dc` is set a single deferral head serves every layer, so
/// identical hidden states always produce identical hardness.
class MultiExitModel {
 public:
  /// Backbone and exit heads get Glorot init; deferral heads start at zero
  /// (hardness 0.5 everywhere) unless `heads` says otherwise for both.
  static MultiExitModel create(const ModelShape& shape, std::uint64_t seed,
                               HeadInit heads = HeadInit::glorot);

  /// Validates the wiring; throws ShapeError on inconsistent widths and
  /// std::invalid_argument for fewer than one layer.
  MultiExitModel(std::vector<DenseLayer> backbone, std::vector<DenseLayer> exit_heads,
                 std::vector<DenseLayer> deferral_heads, bool shared_dc);

  std::size_t depth() const { return backbone_.size(); }
  std::size_t input_width() const { return backbone_.front().input_width(); }
  std::size_t num_classes() const { return exit_heads_.front().output_width(); }
  bool shared_dc() const { return shared_dc_; }
  ModelShape shape() const;

  const DenseLayer& backbone(std::size_t layer) const { return backbone_.at(layer); }
  const DenseLayer& exit_head(std::size_t layer) const { return exit_heads_.at(layer); }
  const DenseLayer& deferral_head(std::size_t layer) const {
    return deferral_heads_.at(shared_dc_ ? 0 : layer);
  }
  DenseLayer& backbone(std::size_t layer) { return backbone_.at(layer); }
  DenseLayer& exit_head(std::size_t layer) { return exit_heads_.at(layer); }
  DenseLayer& deferral_head(std::size_t layer) {
    return deferral_heads_.at(shared_dc_ ? 0 : layer);
  }

  /// Distinct deferral parameter sets: 1 when shared, depth() otherwise.
  std::size_t deferral_head_count() const { return deferral_heads_.size(); }

  /// h_{layer+1} from h_layer (h_0 is the input).
  std::vector<double> advance(std::size_t layer, std::span<const double> previous) const;
  /// Exit and deferral readout for the hidden state produced by `layer`.
  LayerReadout readout(std::size_t layer, std::span<const double> hidden) const;

  bool operator==(const MultiExitModel&) const = default;

 private:
  std::vector<DenseLayer> backbone_;
  std::vector<DenseLayer> exit_heads_;
  std::vector<DenseLayer> deferral_heads_;
  bool shared_dc_ = false;
};

/// Full-depth pass with everything the backward passes need.
struct ForwardPass {
  std::vector<std::vector<double>> hidden;  // hidden[0] is the input, hidden[i] = h_i
  std::vector<std::vector<double>> exit_logits;
  std::vector<double> deferral_logits;
  std::vector<LayerReadout> readouts;
};

ForwardPass forward_all(const MultiExitModel& model, std::span<const double> x);

/// P_i(label | x) for every layer. Throws std::invalid_argument for a label
/// outside [0, num_classes).
std::vector<double> true_class_probs(const MultiExitModel& model, std::span<const double> x,
                                     int label);

/// Gradient buffers with the same layout as a model.
struct ModelGradient {
  std::vector<DenseGrad> backbone;
  std::vector<DenseGrad> exit_heads;
  std::vector<DenseGrad> deferral_heads;

  explicit ModelGradient(const MultiExitModel& model);
  void clear();
  void scale(double factor);
};

enum class ParameterGroup : unsigned { backbone = 1, exit_heads = 2, deferral_heads = 4 };

constexpr ParameterGroup operator|(ParameterGroup a, ParameterGroup b) {
  return static_cast<ParameterGroup>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has_group(ParameterGroup set, ParameterGroup g) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(g)) != 0;
}

/// Pairs model parameters with gradient buffers for the selected groups, in
/// a fixed order (weights then bias, layer by layer, group by group).
std::vector<ParameterBlock> parameter_blocks(MultiExitModel& model, const ModelGradient& grad,
                                             ParameterGroup groups);

/// Order-sensitive SHA-256 over the selected parameters' bytes.
std::string parameter_checksum(const MultiExitModel& model, ParameterGroup groups);

/// Depth weight i / (1 + ... + n) for 0-based `layer` in a depth-n model.
double depth_weight(std::size_t layer, std::size_t depth);

// Checkpoint document ("eesp.checkpoint", version 1). Doubles are written in
// shortest round-trip form, so load(save(m)) == m bit for bit.
nlohmann::json checkpoint_to_json(const MultiExitModel& model);
MultiExitModel checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const MultiExitModel& model, const std::filesystem::path& path);
MultiExitModel load_checkpoint(const std::filesystem::path& path);

}  // namespace eesp
