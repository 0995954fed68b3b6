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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace eesp::cli {

/// Overrides shared by every subcommand; unset fields fall back to the run
/// manifest.
struct Options {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> data;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> k_percent;
};

/// Run-directory root used to resolve a relative --run-dir.
inline constexpr const char* kRunRootEnv = "EESP_RUN_ROOT";

/// Entry point. `args` excludes the program name. Returns 0 on success, 2
/// on a usage error, 1 on any other failure (diagnostic on `err`).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// Phases. Each reads <run_dir>/manifest.json (gen-data reads --config) and
// writes its artifacts under data/, model/, dc/ or reports/.
void gen_data(const Options& opts, std::ostream& out);
void train_ec(const Options& opts, std::ostream& out);
void build_dc_data(const Options& opts, std::ostream& out);
void train_dc(const Options& opts, std::ostream& out);
void tune(const Options& opts, std::ostream& out);
void infer(const Options& opts, std::ostream& out);
void curve(const Options& opts, std::ostream& out);
void verify_bound(const Options& opts, std::ostream& out);
void report(const Options& opts, std::ostream& out);

}  // namespace eesp::cli
