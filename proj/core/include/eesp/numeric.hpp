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

// Dense substrate for the multi-exit model: row-major matrices, fully
// connected layers with hand-written backward passes, and Adam.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace eesp {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows * cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

enum class Activation { identity, relu, tanh };

std::string_view to_string(Activation activation);
/// Throws std::invalid_argument on an unknown name.
Activation parse_activation(std::string_view name);

/// y = activation(W x + b). `weights` is output_width x input_width.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t input_width() const { return weights.cols; }
  std::size_t output_width() const { return weights.rows; }

  /// Uniform in [-s, s] with s = sqrt(6 / (fan_in + fan_out)); zero bias.
  static DenseLayer glorot(std::size_t input_width, std::size_t output_width,
                           Activation activation, std::mt19937_64& rng);
  static DenseLayer zeros(std::size_t input_width, std::size_t output_width,
                          Activation activation);

  bool operator==(const DenseLayer&) const = default;
};

/// Throws ShapeError if the input width does not match.
std::vector<double> forward_dense(const DenseLayer& layer, std::span<const double> input);

/// Max-subtracted softmax. Throws std::invalid_argument on empty input.
std::vector<double> softmax(std::span<const double> logits);

double sigmoid(double x);

/// Index of the largest element; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

/// Gradient storage mirroring one DenseLayer.
struct DenseGrad {
  Matrix weights;
  std::vector<double> bias;

  DenseGrad() = default;
  explicit DenseGrad(const DenseLayer& layer)
      : weights(layer.weights.rows, layer.weights.cols), bias(layer.bias.size(), 0.0) {}

  void clear();
  void scale(double factor);
  void add(const DenseGrad& other);
};

/// Backward pass through one dense layer. `output` is the post-activation
/// value produced by forward_dense for `input`; `grad_output` is dL/d(output).
/// Accumulates dL/dW and dL/db into `accum` and returns dL/d(input).
std::vector<double> backward_dense(const DenseLayer& layer, std::span<const double> input,
                                   std::span<const double> output,
                                   std::span<const double> grad_output, DenseGrad& accum);

/// One trainable tensor and its gradient. `layer` is carried for diagnostics.
struct ParameterBlock {
  std::span<double> values;
  std::span<const double> grads;
  std::size_t layer = 0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimiser. Moment buffers are bound to parameter blocks by
/// position on the first step; later steps must present the same shapes.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config = {});

  /// Applies one update. Throws TrainingError (carrying the block's layer)
  /// on a non-finite gradient, before any parameter is modified.
  void step(std::span<const ParameterBlock> blocks);

  std::uint64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

}  // namespace eesp
