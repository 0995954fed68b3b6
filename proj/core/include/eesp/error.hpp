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
#include <optional>
#include <stdexcept>
#include <string>

namespace eesp {

/// Dimension mismatch between a layer, model or dataset and its input.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what,
                      std::optional<std::size_t> layer = std::nullopt)
      : std::runtime_error(layer ? what + " (layer " + std::to_string(*layer + 1) + ")"
                                 : what),
        layer_(layer) {}

  std::optional<std::size_t> layer() const noexcept { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

/// Raised when optimisation cannot continue: non-finite loss or gradient,
/// or a degenerate training set.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what,
                         std::optional<std::size_t> layer = std::nullopt)
      : std::runtime_error(layer ? what + " (layer " + std::to_string(*layer + 1) + ")"
                                 : what),
        layer_(layer) {}

  std::optional<std::size_t> layer() const noexcept { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

/// Malformed input document. `line` is 1-based; 0 when not line oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace eesp
