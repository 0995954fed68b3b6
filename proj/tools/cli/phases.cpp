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

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cli.hpp"
#include "eesp/dataset.hpp"
#include "eesp/dc_data.hpp"
#include "eesp/dc_training.hpp"
#include "eesp/ec_training.hpp"
#include "eesp/error.hpp"
#include "eesp/gating.hpp"
#include "eesp/manifest.hpp"
#include "eesp/model.hpp"
#include "eesp/text_io.hpp"
#include "eesp/theory.hpp"
#include "eesp/tuning.hpp"

namespace eesp::cli {

namespace fs = std::filesystem;

namespace {

// Run directory layout.
constexpr const char* kManifest = "manifest.json";
constexpr const char* kTrain = "data/train.csv";
constexpr const char* kValidation = "data/validation.csv";
constexpr const char* kTest = "data/test.csv";
constexpr const char* kTestShift = "data/test_shift.csv";
constexpr const char* kEcModel = "model/ec_model.json";
constexpr const char* kTrainLog = "model/train_log.csv";
constexpr const char* kModel = "model/model.json";
constexpr const char* kProfiles = "dc/profiles.csv";
constexpr const char* kDcReport = "dc/dc_report.csv";
constexpr const char* kGrid = "reports/grid.csv";
constexpr const char* kMetrics = "reports/metrics.csv";
constexpr const char* kMetricsShift = "reports/metrics_shift.csv";
constexpr const char* kBaseline = "reports/baseline_sr.csv";
constexpr const char* kBaselineShift = "reports/baseline_sr_shift.csv";
constexpr const char* kPredictions = "reports/predictions.csv";
constexpr const char* kCurve = "reports/curve.csv";
constexpr const char* kCurveShift = "reports/curve_shift.csv";
constexpr const char* kVerify = "reports/verify.txt";
constexpr const char* kSummary = "reports/summary.txt";

// Seed streams derived from the master seed.
enum SeedStream : std::uint64_t {
  kModelInit = 1,
  kEcTraining = 2,
  kDcTraining = 3,
  kTrainSplit = 10,
  kValidationSplit = 11,
  kTestSplit = 12,
  kShiftNoise = 13,
};

RunManifest load_manifest(const Options& opts) {
  const fs::path path = opts.config ? *opts.config : opts.run_dir / kManifest;
  if (!fs::exists(path)) {
    throw std::runtime_error("no manifest at " + path.string() + "; run gen-data first");
  }
  RunManifest m = RunManifest::load(path);
  if (opts.seed) m.seed = *opts.seed;
  return m;
}

void save_manifest(const RunManifest& m, const Options& opts) { m.save(opts.run_dir / kManifest); }

Dataset load_split(const Options& opts, const RunManifest& m, const char* rel, Split split) {
  const fs::path path = opts.run_dir / rel;
  if (!fs::exists(path)) throw std::runtime_error("missing " + path.string());
  return load_csv(path, m.data.mixture.classes, split);
}

MultiExitModel load_model(const Options& opts, const char* rel) {
  const fs::path path = opts.run_dir / rel;
  if (!fs::exists(path)) throw std::runtime_error("missing " + path.string());
  return load_checkpoint(path);
}

template <class Writer>
void write_artifact(const Options& opts, const char* rel, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_text_file(opts.run_dir / rel, ss.str());
}

Thresholds resolve_thresholds(const Options& opts, const RunManifest& m) {
  if (!m.thresholds && !(opts.alpha && opts.beta)) {
    throw std::runtime_error("no tuned thresholds in the manifest; run tune or pass --alpha and --beta");
  }
  Thresholds t = m.thresholds.value_or(Thresholds{});
  if (opts.alpha) t.alpha = *opts.alpha;
  if (opts.beta) t.beta = *opts.beta;
  t.validate();
  return t;
}

std::string percent(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(2);
  ss << 100.0 * v;
  return ss.str();
}

std::string describe(const SelectiveMetrics& m) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(3);
  ss << "risk " << percent(m.risk) << "% coverage " << percent(m.coverage) << "% speedup "
     << m.speedup << "x deferrals " << m.deferrals;
  return ss.str();
}

HardnessLabeledSet read_profiles(const fs::path& path, double k_percent) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  HardnessLabeledSet set;
  set.k_percent = k_percent;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto fields = split_fields(line);
    long long id = 0;
    long long label = 0;
    if (fields.size() < 4 || !parse_int(fields.front(), id) || !parse_int(fields.back(), label) ||
        id < 0 || (label != 0 && label != 1)) {
      throw ParseError("malformed profile row", line_no);
    }
    set.sample_ids.push_back(static_cast<std::size_t>(id));
    set.hard.push_back(static_cast<int>(label));
  }
  return set;
}

std::vector<double> read_dc_errors(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> errors;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto fields = split_fields(line);
    double q = 0.0;
    if (fields.size() != 3 || !parse_double(fields[1], q)) {
      throw ParseError("malformed deferral report row", line_no);
    }
    errors.push_back(q);
  }
  return errors;
}

void write_predictions(std::ostream& out, const Evaluation& ev, const Dataset& data) {
  out << "sample_id,label,final_label,depth,covered,predicted\n";
  for (std::size_t s = 0; s < ev.traces.size(); ++s) {
    const auto& t = ev.traces[s];
    out << s << ',' << data.labels[s] << ',' << ev.labels[s] << ',' << t.depth << ','
        << (t.covered ? 1 : 0) << ',';
    if (t.covered) out << t.predicted;
    out << '\n';
  }
}

}  // namespace

void gen_data(const Options& opts, std::ostream& out) {
  RunManifest m;
  if (opts.config) {
    m = RunManifest::load(*opts.config);
  } else if (fs::exists(opts.run_dir / kManifest)) {
    m = RunManifest::load(opts.run_dir / kManifest);
  } else {
    throw std::runtime_error("gen-data needs --config (or an existing manifest in the run dir)");
  }
  if (opts.seed) m.seed = *opts.seed;
  m.thresholds.reset();
  m.phases.clear();

  auto make = [&](std::size_t size, std::uint64_t stream, Split split) {
    MixtureSpec spec = m.data.mixture;
    spec.samples = size;
    spec.seed = derive_seed(m.seed, stream);
    Dataset d = gen_mixture(spec);
    d.split = split;
    return d;
  };
  const Dataset train = make(m.data.train_size, kTrainSplit, Split::train);
  const Dataset validation = make(m.data.validation_size, kValidationSplit, Split::validation);
  const Dataset test = make(m.data.test_size, kTestSplit, Split::test);
  const Dataset shifted =
      shift(test, m.data.shift_kind, m.data.shift_magnitude, derive_seed(m.seed, kShiftNoise));

  save_csv(train, opts.run_dir / kTrain);
  save_csv(validation, opts.run_dir / kValidation);
  save_csv(test, opts.run_dir / kTest);
  save_csv(shifted, opts.run_dir / kTestShift);
  m.record_phase("gen-data", opts.run_dir, {kTrain, kValidation, kTest, kTestShift});
  save_manifest(m, opts);
  out << "gen-data: " << train.size() << " train, " << validation.size() << " validation, "
      << test.size() << " test rows (" << to_string(m.data.shift_kind) << " shift "
      << format_double(m.data.shift_magnitude) << ") in " << opts.run_dir.string() << '\n';
}

void train_ec(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const Dataset train = load_split(opts, m, kTrain, Split::train);
  const auto model = MultiExitModel::create(m.model_shape(), derive_seed(m.seed, kModelInit));
  if (train.width() != model.input_width()) {
    throw ShapeError("training data has width " + std::to_string(train.width()) +
                         " but the manifest declares " + std::to_string(model.input_width()));
  }
  TrainConfig cfg = m.ec_training;
  cfg.seed = derive_seed(m.seed, kEcTraining);
  const auto result = train_ecs(model, train, cfg);

  save_checkpoint(result.model, opts.run_dir / kEcModel);
  write_artifact(opts, kTrainLog, [&](std::ostream& os) { write_training_log(os, result.history); });
  m.record_phase("train-ec", opts.run_dir, {kEcModel, kTrainLog});
  save_manifest(m, opts);

  out << "train-ec: best epoch " << result.best_epoch << " of " << result.history.size();
  if (result.best_epoch > 0) {
    out << ", validation accuracy per layer:";
    for (double a : result.history[result.best_epoch - 1].val_accuracy) out << ' ' << format_double(a);
  }
  out << '\n';
  if (result.clamp_warnings > 0) {
    out << "warning: " << result.clamp_warnings << " true-class probabilities clamped at 1e-12\n";
  }
}

void build_dc_data(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  if (opts.k_percent) m.k_percent = *opts.k_percent;
  const Dataset train = load_split(opts, m, kTrain, Split::train);
  const auto model = load_model(opts, kEcModel);
  const auto profiles = profile(model, train);
  const auto labels = label_hard(profiles, m.k_percent);

  write_artifact(opts, kProfiles,
                 [&](std::ostream& os) { write_profiles_csv(os, profiles, labels); });
  m.record_phase("build-dc-data", opts.run_dir, {kProfiles});
  save_manifest(m, opts);
  out << "build-dc-data: " << labels.hard_count() << " of " << labels.size()
      << " samples labelled hard (K=" << format_double(m.k_percent) << "%)\n";
}

void train_dc(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const Dataset train = load_split(opts, m, kTrain, Split::train);
  auto set = read_profiles(opts.run_dir / kProfiles, m.k_percent);
  attach_features(set, train);
  const auto model = load_model(opts, kEcModel);

  TrainConfig cfg = m.dc_training;
  cfg.seed = derive_seed(m.seed, kDcTraining);
  const auto result = train_dcs(model, set, cfg);

  const auto frozen = ParameterGroup::backbone | ParameterGroup::exit_heads;
  if (parameter_checksum(model, frozen) != parameter_checksum(result.model, frozen)) {
    throw TrainingError("deferral training modified frozen parameters");
  }
  save_checkpoint(result.model, opts.run_dir / kModel);
  write_artifact(opts, kDcReport, [&](std::ostream& os) { write_dc_report(os, result); });
  m.record_phase("train-dc", opts.run_dir, {kModel, kDcReport});
  save_manifest(m, opts);

  out << "train-dc: held-out deferral error per layer:";
  for (double q : result.holdout_error) out << ' ' << format_double(q);
  out << '\n';
}

void tune(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const Dataset validation = load_split(opts, m, kValidation, Split::validation);
  const auto model = load_model(opts, kModel);
  const GoldLabelOracle oracle(validation.labels);
  const auto grid = grid_search(model, validation, m.alpha_grid, m.beta_grid, oracle);

  write_artifact(opts, kGrid, [&](std::ostream& os) { write_metrics_csv(os, grid.cells); });
  m.thresholds = grid.best;
  m.record_phase("tune", opts.run_dir, {kGrid});
  save_manifest(m, opts);
  out << "tune: alpha=" << format_double(grid.best.alpha) << " beta="
      << format_double(grid.best.beta) << " (" << describe(grid.best_metrics) << ")\n";
}

void infer(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const Thresholds thresholds = resolve_thresholds(opts, m);
  const auto model = load_model(opts, kModel);

  if (opts.data) {
    const Dataset data = load_csv(*opts.data, m.data.mixture.classes, Split::test);
    const GoldLabelOracle oracle(data.labels);
    const auto ev = evaluate_detailed(model, data, thresholds, oracle);
    const std::string stem = opts.data->stem().string();
    const std::string metrics_rel = "reports/metrics_" + stem + ".csv";
    const std::string predictions_rel = "reports/predictions_" + stem + ".csv";
    write_artifact(opts, metrics_rel.c_str(), [&](std::ostream& os) {
      write_metrics_csv(os, std::span(&ev.metrics, 1));
    });
    write_artifact(opts, predictions_rel.c_str(),
                   [&](std::ostream& os) { write_predictions(os, ev, data); });
    out << "infer " << stem << ": " << describe(ev.metrics) << '\n';
    return;
  }

  const Dataset test = load_split(opts, m, kTest, Split::test);
  const Dataset shifted = load_split(opts, m, kTestShift, Split::test);
  const GoldLabelOracle test_oracle(test.labels);
  const GoldLabelOracle shift_oracle(shifted.labels);
  const auto ev = evaluate_detailed(model, test, thresholds, test_oracle);
  const auto ev_shift = evaluate_detailed(model, shifted, thresholds, shift_oracle);

  // Baseline rows: full coverage, then coverage matched to the gated run.
  const std::vector<SelectiveMetrics> base{baseline_sr(model, test, 0.0),
                                           baseline_at_coverage(model, test, ev.metrics.coverage)};
  const std::vector<SelectiveMetrics> base_shift{
      baseline_sr(model, shifted, 0.0),
      baseline_at_coverage(model, shifted, ev_shift.metrics.coverage)};

  write_artifact(opts, kMetrics, [&](std::ostream& os) { write_metrics_csv(os, std::span(&ev.metrics, 1)); });
  write_artifact(opts, kMetricsShift,
                 [&](std::ostream& os) { write_metrics_csv(os, std::span(&ev_shift.metrics, 1)); });
  write_artifact(opts, kBaseline, [&](std::ostream& os) { write_metrics_csv(os, base); });
  write_artifact(opts, kBaselineShift, [&](std::ostream& os) { write_metrics_csv(os, base_shift); });
  write_artifact(opts, kPredictions, [&](std::ostream& os) { write_predictions(os, ev, test); });
  m.record_phase("infer", opts.run_dir,
                 {kMetrics, kMetricsShift, kBaseline, kBaselineShift, kPredictions});
  save_manifest(m, opts);

  out << "infer test:    " << describe(ev.metrics) << '\n'
      << "infer shifted: " << describe(ev_shift.metrics) << '\n'
      << "baseline (matched coverage) test: " << describe(base[1]) << '\n'
      << "baseline (matched coverage) shifted: " << describe(base_shift[1]) << '\n';
}

void curve(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const double alpha = opts.alpha ? *opts.alpha : resolve_thresholds(opts, m).alpha;
  const auto model = load_model(opts, kModel);
  const Dataset test = load_split(opts, m, kTest, Split::test);
  const Dataset shifted = load_split(opts, m, kTestShift, Split::test);
  const GoldLabelOracle test_oracle(test.labels);
  const GoldLabelOracle shift_oracle(shifted.labels);
  const auto c = risk_coverage_curve(model, test, alpha, m.curve_betas, test_oracle);
  const auto c_shift = risk_coverage_curve(model, shifted, alpha, m.curve_betas, shift_oracle);

  write_artifact(opts, kCurve, [&](std::ostream& os) { write_curve_csv(os, c); });
  write_artifact(opts, kCurveShift, [&](std::ostream& os) { write_curve_csv(os, c_shift); });
  m.record_phase("curve", opts.run_dir, {kCurve, kCurveShift});
  save_manifest(m, opts);
  out << "curve: " << c.size() << " points at alpha=" << format_double(alpha) << " -> " << kCurve
      << ", " << kCurveShift << '\n';
}

void verify_bound(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  const double gamma = opts.gamma ? *opts.gamma : m.gamma;
  const Thresholds thresholds = resolve_thresholds(opts, m);
  const auto model = load_model(opts, kModel);
  const Dataset test = load_split(opts, m, kTest, Split::test);
  const GoldLabelOracle oracle(test.labels);
  const auto metrics = evaluate(model, test, thresholds, oracle);

  ModelBoundInputs inputs;
  inputs.exit_error = metrics.layer_risk();
  inputs.deferral_error = read_dc_errors(opts.run_dir / kDcReport);
  inputs.empirical_risk = metrics.risk;
  inputs.covered = metrics.covered;
  if (inputs.deferral_error.size() != inputs.exit_error.size()) {
    throw ShapeError("deferral report and model disagree on depth");
  }
  const auto verdict = verify_model_bound(inputs, gamma);

  write_artifact(opts, kVerify, [&](std::ostream& os) { write_bound_report(os, verdict); });
  m.record_phase("verify-bound", opts.run_dir, {kVerify});
  save_manifest(m, opts);
  write_bound_report(out, verdict);
}

void report(const Options& opts, std::ostream& out) {
  RunManifest m = load_manifest(opts);
  std::ostringstream s;
  s << "run: " << opts.run_dir.filename().string() << "\nseed: " << m.seed << '\n';
  if (m.thresholds) {
    s << "thresholds: alpha=" << format_double(m.thresholds->alpha)
      << " beta=" << format_double(m.thresholds->beta) << '\n';
  }
  s << "k_percent: " << format_double(m.k_percent) << "\ngamma: " << format_double(m.gamma)
    << '\n';
  const std::vector<std::pair<const char*, const char*>> sections{
      {"training log", kTrainLog},
      {"deferral heads", kDcReport},
      {"gated metrics (test)", kMetrics},
      {"gated metrics (shifted test)", kMetricsShift},
      {"softmax-response baseline (test)", kBaseline},
      {"softmax-response baseline (shifted test)", kBaselineShift},
      {"bound verification", kVerify},
  };
  for (const auto& [title, rel] : sections) {
    s << "\n[" << title << "] " << rel << '\n';
    const fs::path path = opts.run_dir / rel;
    s << (fs::exists(path) ? read_text_file(path) : std::string("(missing)\n"));
  }
  s << "\n[artifacts]\n";
  for (const auto& [phase, files] : m.phases) {
    for (const auto& [rel, digest] : files) s << phase << ' ' << rel << ' ' << digest << '\n';
  }
  write_text_file(opts.run_dir / kSummary, s.str());
  out << s.str();
}

}  // namespace eesp::cli
