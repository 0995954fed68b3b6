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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <functional>
#include <ostream>
#include <vector>

namespace eesp::cli {

namespace {

struct Subcommand {
  const char* name;
  const char* help;
  void (*phase)(const Options&, std::ostream&);
};

constexpr Subcommand kSubcommands[] = {
    {"gen-data", "Generate train/validation/test splits and the run manifest", gen_data},
    {"train-ec", "Train the backbone and exit heads", train_ec},
    {"build-dc-data", "Profile training samples and label the hardest K% as hard", build_dc_data},
    {"train-dc", "Train the deferral heads on the frozen model", train_dc},
    {"tune", "Grid-search (alpha, beta) on the validation split", tune},
    {"infer", "Run gated inference and write selective metrics", infer},
    {"curve", "Sweep beta at fixed alpha and write risk-coverage curves", curve},
    {"verify-bound", "Check measured deferral error against the risk bound", verify_bound},
    {"report", "Summarise every artifact in the run directory", report},
};

std::filesystem::path resolve_run_dir(const std::filesystem::path& given) {
  if (given.is_absolute()) return given;
  if (const char* root = std::getenv(kRunRootEnv); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / given;
  }
  return given;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Selective prediction for early-exit networks", "eesp"};
  app.require_subcommand(1, 1);

  Options opts;
  std::string run_dir = "eesp-run";
  std::string config;
  std::string data;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double k_percent = 0.0;

  std::vector<std::pair<CLI::App*, const Subcommand*>> subs;
  for (const auto& sc : kSubcommands) {
    auto* sub = app.add_subcommand(sc.name, sc.help);
    sub->add_option("--run-dir", run_dir,
                    "Run directory (relative paths resolve under $EESP_RUN_ROOT when set)");
    sub->add_option("--config", config, "Run config or manifest document (JSON)");
    sub->add_option("--seed", seed, "Master seed override");
    sub->add_option("--alpha", alpha, "Exit confidence threshold")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--beta", beta, "Deferral hardness threshold")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--gamma", gamma, "Target risk for verify-bound")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--k-percent", k_percent, "Percent of training samples labelled hard")
        ->check(CLI::Range(0.0, 100.0));
    sub->add_option("--data", data, "Evaluate this CSV instead of the run's test splits");
    subs.emplace_back(sub, &sc);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  for (const auto& [sub, sc] : subs) {
    if (!sub->parsed()) continue;
    auto given = [sub](const char* flag) { return sub->count(flag) > 0; };
    opts.run_dir = resolve_run_dir(run_dir);
    if (given("--config")) opts.config = config;
    if (given("--data")) opts.data = data;
    if (given("--seed")) opts.seed = seed;
    if (given("--alpha")) opts.alpha = alpha;
    if (given("--beta")) opts.beta = beta;
    if (given("--gamma")) opts.gamma = gamma;
    if (given("--k-percent")) opts.k_percent = k_percent;
    try {
      sc->phase(opts, out);
      return 0;
    } catch (const std::exception& e) {
      err << "eesp " << sc->name << ": " << e.what() << '\n';
      return 1;
    }
  }
  err << app.help();
  return 2;
}

}  // namespace eesp::cli
