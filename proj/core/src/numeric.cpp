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

#include "eesp/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"

namespace eesp {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

DenseLayer DenseLayer::glorot(std::size_t input_width, std::size_t output_width,
                              Activation activation, std::mt19937_64& rng) {
  DenseLayer layer = zeros(input_width, output_width, activation);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_width + output_width));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : layer.weights.data) w = dist(rng);
  return layer;
}

DenseLayer DenseLayer::zeros(std::size_t input_width, std::size_t output_width,
                             Activation activation) {
  if (input_width == 0 || output_width == 0) {
    throw std::invalid_argument("dense layer widths must be positive");
  }
  DenseLayer layer;
  layer.weights = Matrix(output_width, input_width);
  layer.bias.assign(output_width, 0.0);
  layer.activation = activation;
  return layer;
}

namespace {

double activate(Activation activation, double z) {
  switch (activation) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the activation's output.
double activation_slope(Activation activation, double out) {
  switch (activation) {
    case Activation::identity: return 1.0;
    case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
  }
  return 1.0;
}

}  // namespace

std::vector<double> forward_dense(const DenseLayer& layer, std::span<const double> input) {
  if (input.size() != layer.input_width()) {
    throw ShapeError("dense input has width " + std::to_string(input.size()) + ", expected " +
                     std::to_string(layer.input_width()));
  }
  std::vector<double> out(layer.output_width());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto w = layer.weights.row(r);
    double z = layer.bias[r];
    for (std::size_t c = 0; c < w.size(); ++c) z += w[c] * input[c];
    out[r] = activate(layer.activation, z);
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void DenseGrad::clear() {
  std::fill(weights.data.begin(), weights.data.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void DenseGrad::scale(double factor) {
  for (double& g : weights.data) g *= factor;
  for (double& g : bias) g *= factor;
}

void DenseGrad::add(const DenseGrad& other) {
  for (std::size_t i = 0; i < weights.data.size(); ++i) weights.data[i] += other.weights.data[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += other.bias[i];
}

std::vector<double> backward_dense(const DenseLayer& layer, std::span<const double> input,
                                   std::span<const double> output,
                                   std::span<const double> grad_output, DenseGrad& accum) {
  if (input.size() != layer.input_width() || output.size() != layer.output_width() ||
      grad_output.size() != layer.output_width()) {
    throw ShapeError("backward_dense shape mismatch");
  }
  std::vector<double> grad_input(layer.input_width(), 0.0);
  for (std::size_t r = 0; r < layer.output_width(); ++r) {
    const double delta = grad_output[r] * activation_slope(layer.activation, output[r]);
    if (delta == 0.0) continue;
    accum.bias[r] += delta;
    auto gw = accum.weights.row(r);
    const auto w = layer.weights.row(r);
    for (std::size_t c = 0; c < input.size(); ++c) {
      gw[c] += delta * input[c];
      grad_input[c] += delta * w[c];
    }
  }
  return grad_input;
}

AdamOptimizer::AdamOptimizer(AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

void AdamOptimizer::step(std::span<const ParameterBlock> blocks) {
  if (first_moment_.empty()) {
    for (const auto& block : blocks) {
      first_moment_.emplace_back(block.values.size(), 0.0);
      second_moment_.emplace_back(block.values.size(), 0.0);
    }
  }
  if (blocks.size() != first_moment_.size()) {
    throw std::invalid_argument("optimizer received a different number of parameter blocks");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (block.values.size() != first_moment_[b].size() || block.grads.size() != block.values.size()) {
      throw ShapeError("parameter block shape changed between optimizer steps", block.layer);
    }
    for (double g : block.grads) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient", block.layer);
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& m = first_moment_[b];
    auto& v = second_moment_[b];
    const auto& block = blocks[b];
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const double g = block.grads[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      block.values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace eesp
