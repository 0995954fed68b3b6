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

#include "eesp/manifest.hpp"

#include <array>
#include <random>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"
#include "eesp/tuning.hpp"

namespace eesp {

namespace {

nlohmann::json train_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"patience", c.patience},
          {"validation_fraction", c.validation_fraction},
          {"freeze_backbone", c.freeze_backbone}};
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.patience = j.value("patience", c.patience);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.freeze_backbone = j.value("freeze_backbone", c.freeze_backbone);
  c.validate();
  return c;
}

TrainConfig default_dc_training() {
  TrainConfig c;
  c.epochs = 3;
  c.validation_fraction = 0.2;
  return c;
}

}  // namespace

ModelShape RunManifest::model_shape() const {
  ModelShape s;
  s.input_width = data.mixture.dims;
  s.hidden_widths = hidden_widths;
  s.num_classes = data.mixture.classes;
  s.activation = activation;
  s.shared_dc = shared_dc;
  return s;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json doc;
  doc["schema"] = kManifestSchema;
  doc["version"] = kManifestVersion;
  doc["seed"] = seed;
  const auto& m = data.mixture;
  doc["data"] = {{"dims", m.dims},
                 {"classes", m.classes},
                 {"overlap", m.overlap},
                 {"separation", m.separation},
                 {"fake_fraction", m.fake_fraction},
                 {"fake_shift", m.fake_shift},
                 {"train_size", data.train_size},
                 {"validation_size", data.validation_size},
                 {"test_size", data.test_size},
                 {"shift", {{"kind", to_string(data.shift_kind)},
                            {"magnitude", data.shift_magnitude}}}};
  doc["model"] = {{"hidden_widths", hidden_widths},
                  {"activation", to_string(activation)},
                  {"shared_dc", shared_dc}};
  doc["ec_training"] = train_to_json(ec_training);
  doc["dc_training"] = train_to_json(dc_training);
  doc["k_percent"] = k_percent;
  doc["grids"] = {{"alpha", alpha_grid}, {"beta", beta_grid}};
  doc["curve_betas"] = curve_betas;
  doc["gamma"] = gamma;
  if (thresholds) doc["thresholds"] = {{"alpha", thresholds->alpha}, {"beta", thresholds->beta}};
  if (!phases.empty()) doc["phases"] = phases;
  return doc;
}

RunManifest RunManifest::from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("schema", std::string{}) != kManifestSchema) {
      throw ParseError("document schema must be \"" + std::string(kManifestSchema) + "\"", 0);
    }
    const int version = doc.at("version").get<int>();
    if (version != kManifestVersion) {
      throw ParseError("unsupported manifest version " + std::to_string(version), 0);
    }
    RunManifest r;
    r.dc_training = default_dc_training();
    r.alpha_grid.assign(default_alpha_grid().begin(), default_alpha_grid().end());
    r.beta_grid.assign(default_beta_grid().begin(), default_beta_grid().end());
    r.curve_betas = linear_sweep(0.05, 0.95, 19);

    r.seed = doc.value("seed", r.seed);
    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      auto& m = r.data.mixture;
      m.dims = d.value("dims", m.dims);
      m.classes = d.value("classes", m.classes);
      m.overlap = d.value("overlap", m.overlap);
      m.separation = d.value("separation", m.separation);
      m.fake_fraction = d.value("fake_fraction", m.fake_fraction);
      m.fake_shift = d.value("fake_shift", m.fake_shift);
      r.data.train_size = d.value("train_size", r.data.train_size);
      r.data.validation_size = d.value("validation_size", r.data.validation_size);
      r.data.test_size = d.value("test_size", r.data.test_size);
      if (d.contains("shift")) {
        const auto& s = d.at("shift");
        r.data.shift_kind =
            parse_shift_kind(s.value("kind", std::string(to_string(r.data.shift_kind))));
        r.data.shift_magnitude = s.value("magnitude", r.data.shift_magnitude);
      }
    }
    if (doc.contains("model")) {
      const auto& mj = doc.at("model");
      r.hidden_widths = mj.value("hidden_widths", r.hidden_widths);
      r.activation = parse_activation(mj.value("activation", std::string(to_string(r.activation))));
      r.shared_dc = mj.value("shared_dc", r.shared_dc);
    }
    if (doc.contains("ec_training")) r.ec_training = train_from_json(doc.at("ec_training"), r.ec_training);
    if (doc.contains("dc_training")) r.dc_training = train_from_json(doc.at("dc_training"), r.dc_training);
    r.k_percent = doc.value("k_percent", r.k_percent);
    if (doc.contains("grids")) {
      r.alpha_grid = doc.at("grids").value("alpha", r.alpha_grid);
      r.beta_grid = doc.at("grids").value("beta", r.beta_grid);
    }
    r.curve_betas = doc.value("curve_betas", r.curve_betas);
    r.gamma = doc.value("gamma", r.gamma);
    if (doc.contains("thresholds")) {
      const auto& t = doc.at("thresholds");
      r.thresholds = Thresholds{t.at("alpha").get<double>(), t.at("beta").get<double>()};
      r.thresholds->validate();
    }
    if (doc.contains("phases")) {
      r.phases = doc.at("phases").get<std::map<std::string, std::map<std::string, std::string>>>();
    }
    if (r.hidden_widths.empty()) throw ParseError("model.hidden_widths must not be empty", 0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed run document: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid run document: ") + e.what(), 0);
  }
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + " is not valid JSON: " + e.what(), 0);
  }
  return from_json(doc);
}

void RunManifest::save(const std::filesystem::path& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

void RunManifest::record_phase(const std::string& phase, const std::filesystem::path& run_dir,
                               const std::vector<std::string>& artifacts) {
  auto& entry = phases[phase];
  entry.clear();
  for (const auto& rel : artifacts) entry[rel] = sha256_file(run_dir / rel);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace eesp
