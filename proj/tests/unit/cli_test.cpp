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

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "eesp/dataset.hpp"
#include "eesp/manifest.hpp"
#include "eesp/text_io.hpp"
#include "pipeline.hpp"

namespace eesp {
namespace {

namespace fs = std::filesystem;
using testing::run_cli;

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto r = run_cli({"explode"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run_cli({"tune", "--frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(Cli, HelpSucceeds) { EXPECT_EQ(run_cli({"--help"}).code, 0); }

TEST(Cli, MissingManifestFailsWithDiagnostic) {
  const auto dir = testing::fresh_dir("cli_missing");
  const auto r = run_cli({"train-ec", "--run-dir", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("train-ec"), std::string::npos);
}

class ToyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::fresh_dir("cli_toy");
    result_ = testing::run_pipeline(EESP_TOY_CONFIG, dir_, 0);
  }
  static inline fs::path dir_;
  static inline testing::CliResult result_;
};

TEST_F(ToyRun, PipelineCompletesAndWritesMetrics) {
  ASSERT_EQ(result_.code, 0) << result_.err;
  const auto rows = testing::read_csv_rows(dir_ / "reports/metrics.csv");
  ASSERT_EQ(rows.size(), 1u);
  for (const char* col : {"alpha", "beta", "risk", "coverage", "speedup", "exit_hist_1"}) {
    EXPECT_TRUE(rows[0].contains(col)) << col;
  }
  EXPECT_TRUE(fs::exists(dir_ / "reports/summary.txt"));
}

TEST_F(ToyRun, BoundSatisfiedAtGammaTenPercent) {
  ASSERT_EQ(result_.code, 0) << result_.err;
  const auto text = read_text_file(dir_ / "reports/verify.txt");
  EXPECT_NE(text.find("gamma=0.1\n"), std::string::npos);
  EXPECT_NE(text.find("bound_satisfied=true"), std::string::npos) << text;
}

TEST_F(ToyRun, EveryArtifactChecksummed) {
  ASSERT_EQ(result_.code, 0) << result_.err;
  const auto m = RunManifest::load(dir_ / "manifest.json");
  std::size_t recorded = 0;
  for (const auto& [phase, files] : m.phases) {
    for (const auto& [rel, digest] : files) {
      EXPECT_EQ(sha256_file(dir_ / rel), digest) << phase << ' ' << rel;
      ++recorded;
    }
  }
  for (const auto& [rel, contents] : testing::csv_artifacts(dir_)) {
    bool found = false;
    for (const auto& [phase, files] : m.phases) found = found || files.contains(rel);
    EXPECT_TRUE(found) << rel;
  }
  EXPECT_GT(recorded, 10u);
}

TEST_F(ToyRun, WidthMismatchIsShapeError) {
  ASSERT_EQ(result_.code, 0) << result_.err;
  MixtureSpec spec;
  spec.dims = 5;
  spec.samples = 20;
  save_csv(gen_mixture(spec), dir_ / "wide.csv");
  const auto r = run_cli({"infer", "--run-dir", dir_.string(), "--data", (dir_ / "wide.csv").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("width"), std::string::npos) << r.err;
}

TEST_F(ToyRun, ThresholdFlagsOverrideManifest) {
  ASSERT_EQ(result_.code, 0) << result_.err;
  const auto r = run_cli({"infer", "--run-dir", dir_.string(), "--alpha", "0", "--beta", "1",
                          "--data", (dir_ / "data/test.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = testing::read_csv_rows(dir_ / "reports/metrics_test.csv");
  EXPECT_EQ(testing::field(rows[0], "coverage"), 1.0);
  EXPECT_EQ(testing::field(rows[0], "exit_hist_1"), 4000.0);
}

TEST(Cli, RunRootEnvironmentResolvesRelativeDirs) {
  const auto root = testing::fresh_dir("cli_root");
  fs::create_directories(root);
  ::setenv("EESP_RUN_ROOT", root.c_str(), 1);
  const auto r = run_cli({"gen-data", "--config", EESP_TOY_CONFIG, "--run-dir", "rel"});
  ::unsetenv("EESP_RUN_ROOT");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "rel" / "manifest.json"));
}

TEST(Cli, ReplayingManifestIsByteIdentical) {
  const auto a = testing::fresh_dir("cli_replay_a");
  const auto b = testing::fresh_dir("cli_replay_b");
  ASSERT_EQ(testing::run_pipeline(EESP_TOY_CONFIG, a, 3).code, 0);
  ASSERT_EQ(testing::run_pipeline(a / "manifest.json", b).code, 0);
  EXPECT_EQ(testing::csv_artifacts(a), testing::csv_artifacts(b));
}

}  // namespace
}  // namespace eesp
