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

#include "eesp/model.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"

namespace eesp {

MultiExitModel MultiExitModel::create(const ModelShape& shape, std::uint64_t seed,
                                      HeadInit heads) {
  if (shape.hidden_widths.empty()) throw std::invalid_argument("model needs at least one layer");
  if (shape.input_width == 0) throw std::invalid_argument("input width must be positive");
  if (shape.num_classes < 2) throw std::invalid_argument("model needs at least two classes");

  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> backbone;
  std::vector<DenseLayer> exits;
  std::vector<DenseLayer> deferrals;
  std::size_t width = shape.input_width;
  for (std::size_t hidden : shape.hidden_widths) {
    backbone.push_back(DenseLayer::glorot(width, hidden, shape.activation, rng));
    width = hidden;
  }
  for (std::size_t i = 0; i < shape.hidden_widths.size(); ++i) {
    const std::size_t w = shape.hidden_widths[i];
    exits.push_back(heads == HeadInit::glorot
                        ? DenseLayer::glorot(w, shape.num_classes, Activation::identity, rng)
                        : DenseLayer::zeros(w, shape.num_classes, Activation::identity));
  }
  if (shape.shared_dc) {
    const auto& widths = shape.hidden_widths;
    if (std::adjacent_find(widths.begin(), widths.end(), std::not_equal_to<>()) != widths.end()) {
      throw ShapeError("shared deferral head requires equal hidden widths");
    }
    deferrals.push_back(DenseLayer::zeros(widths.front(), 1, Activation::identity));
  } else {
    for (std::size_t w : shape.hidden_widths) {
      deferrals.push_back(DenseLayer::zeros(w, 1, Activation::identity));
    }
  }
  return MultiExitModel(std::move(backbone), std::move(exits), std::move(deferrals),
                        shape.shared_dc);
}

MultiExitModel::MultiExitModel(std::vector<DenseLayer> backbone,
                               std::vector<DenseLayer> exit_heads,
                               std::vector<DenseLayer> deferral_heads, bool shared_dc)
    : backbone_(std::move(backbone)),
      exit_heads_(std::move(exit_heads)),
      deferral_heads_(std::move(deferral_heads)),
      shared_dc_(shared_dc) {
  if (backbone_.empty()) throw std::invalid_argument("model needs at least one layer");
  if (exit_heads_.size() != backbone_.size()) {
    throw ShapeError("expected one exit head per backbone layer");
  }
  if (deferral_heads_.size() != (shared_dc_ ? 1 : backbone_.size())) {
    throw ShapeError(shared_dc_ ? "shared deferral head must be stored once"
                                : "expected one deferral head per backbone layer");
  }
  const std::size_t classes = exit_heads_.front().output_width();
  if (classes < 2) throw ShapeError("exit heads need at least two classes");
  for (std::size_t i = 0; i < backbone_.size(); ++i) {
    const auto& layer = backbone_[i];
    if (layer.bias.size() != layer.output_width()) throw ShapeError("bias width mismatch", i);
    if (i > 0 && layer.input_width() != backbone_[i - 1].output_width()) {
      throw ShapeError("backbone input width does not match previous layer", i);
    }
    const auto& exit = exit_heads_[i];
    if (exit.input_width() != layer.output_width() || exit.output_width() != classes ||
        exit.bias.size() != classes) {
      throw ShapeError("exit head shape mismatch", i);
    }
    const auto& dc = deferral_head(i);
    if (dc.input_width() != layer.output_width() || dc.output_width() != 1 || dc.bias.size() != 1) {
      throw ShapeError("deferral head shape mismatch", i);
    }
  }
}

ModelShape MultiExitModel::shape() const {
  ModelShape s;
  s.input_width = input_width();
  for (const auto& layer : backbone_) s.hidden_widths.push_back(layer.output_width());
  s.num_classes = num_classes();
  s.activation = backbone_.front().activation;
  s.shared_dc = shared_dc_;
  return s;
}

std::vector<double> MultiExitModel::advance(std::size_t layer,
                                            std::span<const double> previous) const {
  try {
    return forward_dense(backbone_.at(layer), previous);
  } catch (const ShapeError& e) {
    throw ShapeError(e.what(), layer);
  }
}

LayerReadout MultiExitModel::readout(std::size_t layer, std::span<const double> hidden) const {
  LayerReadout r;
  r.layer = layer;
  const auto logits = forward_dense(exit_heads_.at(layer), hidden);
  r.class_probs = softmax(logits);
  r.predicted = argmax(r.class_probs);
  r.confidence = r.class_probs[r.predicted];
  r.hardness = sigmoid(forward_dense(deferral_head(layer), hidden)[0]);
  return r;
}

ForwardPass forward_all(const MultiExitModel& model, std::span<const double> x) {
  if (x.size() != model.input_width()) {
    throw ShapeError("input has width " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.input_width()),
                     0);
  }
  const std::size_t n = model.depth();
  ForwardPass pass;
  pass.hidden.reserve(n + 1);
  pass.hidden.emplace_back(x.begin(), x.end());
  pass.exit_logits.reserve(n);
  pass.deferral_logits.reserve(n);
  pass.readouts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pass.hidden.push_back(model.advance(i, pass.hidden.back()));
    const auto& h = pass.hidden.back();
    pass.exit_logits.push_back(forward_dense(model.exit_head(i), h));
    pass.deferral_logits.push_back(forward_dense(model.deferral_head(i), h)[0]);

    LayerReadout r;
    r.layer = i;
    r.class_probs = softmax(pass.exit_logits.back());
    r.predicted = argmax(r.class_probs);
    r.confidence = r.class_probs[r.predicted];
    r.hardness = sigmoid(pass.deferral_logits.back());
    pass.readouts.push_back(std::move(r));
  }
  return pass;
}

std::vector<double> true_class_probs(const MultiExitModel& model, std::span<const double> x,
                                     int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= model.num_classes()) {
    throw std::invalid_argument("label " + std::to_string(label) + " outside the model's " +
                                std::to_string(model.num_classes()) + " classes");
  }
  const auto pass = forward_all(model, x);
  std::vector<double> probs;
  probs.reserve(model.depth());
  for (const auto& r : pass.readouts) probs.push_back(r.class_probs[static_cast<std::size_t>(label)]);
  return probs;
}

ModelGradient::ModelGradient(const MultiExitModel& model) {
  for (std::size_t i = 0; i < model.depth(); ++i) {
    backbone.emplace_back(model.backbone(i));
    exit_heads.emplace_back(model.exit_head(i));
  }
  for (std::size_t i = 0; i < model.deferral_head_count(); ++i) {
    deferral_heads.emplace_back(model.deferral_head(i));
  }
}

void ModelGradient::clear() {
  for (auto* group : {&backbone, &exit_heads, &deferral_heads}) {
    for (auto& g : *group) g.clear();
  }
}

void ModelGradient::scale(double factor) {
  for (auto* group : {&backbone, &exit_heads, &deferral_heads}) {
    for (auto& g : *group) g.scale(factor);
  }
}

namespace {

void push_layer(std::vector<ParameterBlock>& out, DenseLayer& layer, const DenseGrad& grad,
                std::size_t index) {
  out.push_back({layer.weights.data, grad.weights.data, index});
  out.push_back({layer.bias, grad.bias, index});
}

}  // namespace

std::vector<ParameterBlock> parameter_blocks(MultiExitModel& model, const ModelGradient& grad,
                                             ParameterGroup groups) {
  std::vector<ParameterBlock> blocks;
  if (has_group(groups, ParameterGroup::backbone)) {
    for (std::size_t i = 0; i < model.depth(); ++i) {
      push_layer(blocks, model.backbone(i), grad.backbone[i], i);
    }
  }
  if (has_group(groups, ParameterGroup::exit_heads)) {
    for (std::size_t i = 0; i < model.depth(); ++i) {
      push_layer(blocks, model.exit_head(i), grad.exit_heads[i], i);
    }
  }
  if (has_group(groups, ParameterGroup::deferral_heads)) {
    for (std::size_t i = 0; i < model.deferral_head_count(); ++i) {
      push_layer(blocks, model.deferral_head(i), grad.deferral_heads[i], i);
    }
  }
  return blocks;
}

std::string parameter_checksum(const MultiExitModel& model, ParameterGroup groups) {
  std::vector<unsigned char> bytes;
  auto append = [&bytes](std::span<const double> values) {
    const auto* p = reinterpret_cast<const unsigned char*>(values.data());
    bytes.insert(bytes.end(), p, p + values.size_bytes());
  };
  auto append_layer = [&append](const DenseLayer& layer) {
    append(layer.weights.data);
    append(layer.bias);
  };
  if (has_group(groups, ParameterGroup::backbone)) {
    for (std::size_t i = 0; i < model.depth(); ++i) append_layer(model.backbone(i));
  }
  if (has_group(groups, ParameterGroup::exit_heads)) {
    for (std::size_t i = 0; i < model.depth(); ++i) append_layer(model.exit_head(i));
  }
  if (has_group(groups, ParameterGroup::deferral_heads)) {
    for (std::size_t i = 0; i < model.deferral_head_count(); ++i) {
      append_layer(model.deferral_head(i));
    }
  }
  return sha256_hex(bytes);
}

double depth_weight(std::size_t layer, std::size_t depth) {
  const double total = static_cast<double>(depth) * static_cast<double>(depth + 1) / 2.0;
  return static_cast<double>(layer + 1) / total;
}

namespace {

constexpr const char* kCheckpointSchema = "eesp.checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json layer_to_json(const DenseLayer& layer) {
  return {{"rows", layer.weights.rows},
          {"cols", layer.weights.cols},
          {"activation", to_string(layer.activation)},
          {"weights", layer.weights.data},
          {"bias", layer.bias}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
  DenseLayer layer;
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  layer.weights = Matrix(rows, cols);
  layer.weights.data = j.at("weights").get<std::vector<double>>();
  layer.bias = j.at("bias").get<std::vector<double>>();
  layer.activation = parse_activation(j.at("activation").get<std::string>());
  if (layer.weights.data.size() != rows * cols) throw ShapeError("checkpoint weight count mismatch");
  return layer;
}

std::vector<DenseLayer> layers_from_json(const nlohmann::json& arr) {
  std::vector<DenseLayer> out;
  for (const auto& j : arr) out.push_back(layer_from_json(j));
  return out;
}

}  // namespace

nlohmann::json checkpoint_to_json(const MultiExitModel& model) {
  nlohmann::json doc;
  doc["schema"] = kCheckpointSchema;
  doc["version"] = kCheckpointVersion;
  const auto s = model.shape();
  doc["input_width"] = s.input_width;
  doc["hidden_widths"] = s.hidden_widths;
  doc["num_classes"] = s.num_classes;
  doc["shared_dc"] = s.shared_dc;
  auto& backbone = doc["backbone"] = nlohmann::json::array();
  auto& exits = doc["exit_heads"] = nlohmann::json::array();
  auto& deferrals = doc["deferral_heads"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.depth(); ++i) {
    backbone.push_back(layer_to_json(model.backbone(i)));
    exits.push_back(layer_to_json(model.exit_head(i)));
  }
  for (std::size_t i = 0; i < model.deferral_head_count(); ++i) {
    deferrals.push_back(layer_to_json(model.deferral_head(i)));
  }
  return doc;
}

MultiExitModel checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kCheckpointSchema) {
      throw ParseError("not a model checkpoint", 0);
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
    }
    MultiExitModel model(layers_from_json(doc.at("backbone")),
                         layers_from_json(doc.at("exit_heads")),
                         layers_from_json(doc.at("deferral_heads")),
                         doc.at("shared_dc").get<bool>());
    if (model.input_width() != doc.at("input_width").get<std::size_t>() ||
        model.num_classes() != doc.at("num_classes").get<std::size_t>() ||
        model.shape().hidden_widths != doc.at("hidden_widths").get<std::vector<std::size_t>>()) {
      throw ShapeError("checkpoint header disagrees with its parameters");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

void save_checkpoint(const MultiExitModel& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(model).dump(1) + "\n");
}

MultiExitModel load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
  }
  return checkpoint_from_json(doc);
}

}  // namespace eesp
