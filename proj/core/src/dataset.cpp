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

#include "eesp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "eesp/error.hpp"
#include "eesp/text_io.hpp"

namespace eesp {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

void Dataset::validate() const {
  if (features.rows != labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.rows) +
                                " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (features.data.size() != features.rows * features.cols) {
    throw std::invalid_argument("dataset feature storage is inconsistent");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
  for (double v : features.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset contains a non-finite feature");
  }
}

Dataset subset(const Dataset& source, std::span<const std::size_t> indices) {
  Dataset out;
  out.features = Matrix(indices.size(), source.width());
  out.labels.reserve(indices.size());
  out.num_classes = source.num_classes;
  out.split = source.split;
  out.provenance = source.provenance;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = source.row(indices[k]);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
    out.labels.push_back(source.labels[indices[k]]);
  }
  return out;
}

std::vector<double> mixture_centroid(const MixtureSpec& spec, std::size_t label) {
  const double classes = static_cast<double>(spec.classes);
  const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / classes));
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) / classes;
  std::vector<double> c(spec.dims, 0.0);
  c[0] = radius * std::cos(angle);
  c[1] = radius * std::sin(angle);
  return c;
}

Dataset gen_mixture(const MixtureSpec& spec) {
  if (spec.dims < 2) throw std::invalid_argument("mixture needs at least 2 feature dimensions");
  if (spec.classes < 2) throw std::invalid_argument("mixture needs at least 2 classes");
  if (spec.samples < spec.classes) throw std::invalid_argument("fewer samples than classes");
  if (!(spec.overlap >= 0.0) || !std::isfinite(spec.overlap)) {
    throw std::invalid_argument("overlap must be a finite value >= 0");
  }
  if (!(spec.separation > 0.0)) throw std::invalid_argument("separation must be positive");
  if (!(spec.fake_fraction >= 0.0 && spec.fake_fraction < 1.0)) {
    throw std::invalid_argument("fake fraction must lie in [0, 1)");
  }

  std::mt19937_64 rng(spec.seed);
  const std::size_t m = spec.samples;
  std::vector<std::vector<double>> centroids;
  for (std::size_t c = 0; c < spec.classes; ++c) centroids.push_back(mixture_centroid(spec, c));

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto fake_count =
      static_cast<std::size_t>(std::floor(spec.fake_fraction * static_cast<double>(m) + 0.5));
  std::vector<char> is_fake(m, 0);
  for (std::size_t k = 0; k < fake_count; ++k) is_fake[order[k]] = 1;

  Dataset data;
  data.features = Matrix(m, spec.dims);
  data.labels.resize(m);
  data.num_classes = spec.classes;
  data.provenance = "gaussian-mixture seed=" + std::to_string(spec.seed);

  const double spread = 0.5 + spec.overlap;
  std::normal_distribution<double> noise(0.0, spread);
  std::uniform_int_distribution<std::size_t> other(1, spec.classes - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t label = i % spec.classes;
    std::size_t cluster = label;
    if (is_fake[i]) cluster = (label + other(rng)) % spec.classes;
    auto row = data.features.row(i);
    for (std::size_t d = 0; d < spec.dims; ++d) row[d] = centroids[cluster][d] + noise(rng);
    if (is_fake[i] && spec.dims > 2) row[spec.dims - 1] += spec.fake_shift;
    data.labels[i] = static_cast<int>(label);
  }
  return data;
}

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::translate: return "translate";
    case ShiftKind::noise: return "noise";
    case ShiftKind::rotate: return "rotate";
  }
  return "translate";
}

ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "translate") return ShiftKind::translate;
  if (name == "noise") return ShiftKind::noise;
  if (name == "rotate") return ShiftKind::rotate;
  throw std::invalid_argument("unknown shift kind '" + std::string(name) + "'");
}

Dataset shift(const Dataset& data, ShiftKind kind, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw std::invalid_argument("shift magnitude must be a finite value >= 0");
  }
  Dataset out = data;
  out.provenance += std::string(" shift=") + std::string(to_string(kind)) + ":" +
                    format_double(magnitude);
  if (magnitude == 0.0) return out;

  const std::size_t d = data.width();
  switch (kind) {
    case ShiftKind::translate: {
      const double step = magnitude / std::sqrt(static_cast<double>(d));
      for (double& v : out.features.data) v += step;
      break;
    }
    case ShiftKind::noise: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> noise(0.0, magnitude);
      for (double& v : out.features.data) v += noise(rng);
      break;
    }
    case ShiftKind::rotate: {
      if (d < 2) throw std::invalid_argument("rotate needs at least 2 feature dimensions");
      const double c = std::cos(magnitude);
      const double s = std::sin(magnitude);
      for (std::size_t i = 0; i < out.size(); ++i) {
        auto row = out.features.row(i);
        const double x = row[0];
        const double y = row[1];
        row[0] = c * x - s * y;
        row[1] = s * x + c * y;
      }
      break;
    }
  }
  return out;
}

Dataset parse_csv(std::string_view text, std::optional<std::size_t> num_classes, Split split) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError("empty CSV document", 0);
  const auto header = split_fields(line);
  if (header.empty() || header.back() != "label") {
    throw ParseError("header must end with a 'label' column", line_no);
  }
  const std::size_t width = header.size() - 1;
  if (width == 0) throw ParseError("no feature columns", line_no);
  for (std::size_t c = 0; c < width; ++c) {
    if (header[c] != "f" + std::to_string(c + 1)) {
      throw ParseError("expected column f" + std::to_string(c + 1) + ", found '" +
                           std::string(header[c]) + "'",
                       line_no);
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != width + 1) {
      throw ParseError("expected " + std::to_string(width + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v) || !std::isfinite(v)) {
        throw ParseError("non-numeric feature '" + std::string(fields[c]) + "' in column f" +
                             std::to_string(c + 1),
                         line_no);
      }
      values.push_back(v);
    }
    long long label = 0;
    if (!parse_int(fields[width], label) || label < 0) {
      throw ParseError("invalid label '" + std::string(fields[width]) + "'", line_no);
    }
    labels.push_back(static_cast<int>(label));
  }

  Dataset data;
  data.features = Matrix(labels.size(), width);
  data.features.data = std::move(values);
  data.labels = std::move(labels);
  data.split = split;
  const int max_label =
      data.labels.empty() ? 1 : *std::max_element(data.labels.begin(), data.labels.end());
  data.num_classes = num_classes.value_or(std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1));
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes,
                 Split split) {
  Dataset data = parse_csv(read_text_file(path), num_classes, split);
  data.provenance = path.filename().string();
  return data;
}

std::string to_csv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.width(); ++c) out += "f" + std::to_string(c + 1) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(data.labels[i]);
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  write_text_file(path, to_csv(data));
}

}  // namespace eesp
