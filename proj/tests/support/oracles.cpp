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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eesp::testing {

BruteTrace brute_force_gate(std::span<const ScoreStep> steps, double alpha, double beta) {
  BruteTrace out;
  const std::size_t n = steps.size();
  for (std::size_t t = 1; t <= n; ++t) {
    const ScoreStep& s = steps[t - 1];
    out.visited = t;
    if (t == n) {
      out.depth = t;
      out.covered = s.confidence >= alpha;
      out.predicted = out.covered ? s.predicted : 0;
      return out;
    }
    if (s.hardness >= beta) {
      out.depth = t;
      return out;
    }
    if (s.confidence >= alpha) {
      out.depth = t;
      out.covered = true;
      out.predicted = s.predicted;
      return out;
    }
  }
  return out;
}

Recount recount(std::span<const Trace> traces, std::span<const int> truth, std::size_t depth) {
  Recount r;
  r.total = traces.size();
  double depth_sum = 0.0;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const Trace& t = traces[k];
    depth_sum += static_cast<double>(t.depth);
    if (t.covered) {
      ++r.covered;
      if (static_cast<int>(t.predicted) != truth[k]) ++r.miscovered;
    } else {
      ++r.deferrals;
    }
  }
  r.coverage = r.total ? static_cast<double>(r.covered) / static_cast<double>(r.total) : 0.0;
  r.risk = r.covered ? static_cast<double>(r.miscovered) / static_cast<double>(r.covered) : 0.0;
  // Each sample would otherwise have run all `depth` layers.
  r.speedup = depth_sum > 0.0 ? static_cast<double>(depth) * static_cast<double>(r.total) / depth_sum
                              : 1.0;
  return r;
}

namespace {

std::vector<double> affine(const DenseLayer& l, std::span<const double> in) {
  std::vector<double> out(l.weights.rows);
  for (std::size_t r = 0; r < l.weights.rows; ++r) {
    double z = l.bias[r];
    for (std::size_t c = 0; c < l.weights.cols; ++c) z += l.weights(r, c) * in[c];
    switch (l.activation) {
      case Activation::identity: break;
      case Activation::relu: z = z > 0.0 ? z : 0.0; break;
      case Activation::tanh: z = std::tanh(z); break;
    }
    out[r] = z;
  }
  return out;
}

std::vector<double> ref_softmax(std::vector<double> z) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : z) hi = std::max(hi, v);
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - hi));
  for (double& v : z) v /= sum;
  return z;
}

}  // namespace

RefPass ref_forward(const MultiExitModel& model, std::span<const double> x) {
  RefPass p;
  p.hidden.emplace_back(x.begin(), x.end());
  for (std::size_t i = 0; i < model.depth(); ++i) {
    p.hidden.push_back(affine(model.backbone(i), p.hidden.back()));
    p.probs.push_back(ref_softmax(affine(model.exit_head(i), p.hidden.back())));
    const double logit = affine(model.deferral_head(i), p.hidden.back())[0];
    p.hardness.push_back(1.0 / (1.0 + std::exp(-logit)));
  }
  return p;
}

double ref_ec_loss(const MultiExitModel& model, std::span<const double> x, int label) {
  const RefPass p = ref_forward(model, x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const double w = static_cast<double>(i + 1);
    num += w * -std::log(p.probs[i][static_cast<std::size_t>(label)]);
    den += w;
  }
  return num / den;
}

double ref_dc_loss(const MultiExitModel& model, std::span<const double> x, int hard) {
  const RefPass p = ref_forward(model, x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < p.hardness.size(); ++i) {
    const double w = static_cast<double>(i + 1);
    const double s = p.hardness[i];
    num += w * -(hard ? std::log(s) : std::log(1.0 - s));
    den += w;
  }
  return num / den;
}

std::vector<ParamRef> pair_parameters(MultiExitModel& model, const ModelGradient& grad) {
  std::vector<ParamRef> refs;
  auto add = [&](DenseLayer& layer, const DenseGrad& g) {
    for (std::size_t k = 0; k < layer.weights.data.size(); ++k) {
      refs.push_back({&layer.weights.data[k], &g.weights.data[k]});
    }
    for (std::size_t k = 0; k < layer.bias.size(); ++k) refs.push_back({&layer.bias[k], &g.bias[k]});
  };
  for (std::size_t i = 0; i < model.depth(); ++i) {
    add(model.backbone(i), grad.backbone[i]);
    add(model.exit_head(i), grad.exit_heads[i]);
  }
  for (std::size_t j = 0; j < model.deferral_head_count(); ++j) {
    add(model.deferral_head(j), grad.deferral_heads[j]);
  }
  return refs;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

MultiExitModel random_model(std::mt19937_64& rng, bool shared_dc) {
  std::uniform_int_distribution<std::size_t> depth(1, 4);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  std::uniform_int_distribution<std::size_t> classes(2, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  ModelShape shape;
  shape.input_width = width(rng);
  shape.num_classes = classes(rng);
  const std::size_t n = depth(rng);
  const std::size_t w = width(rng);
  for (std::size_t i = 0; i < n; ++i) shape.hidden_widths.push_back(shared_dc ? w : width(rng));
  shape.activation = (rng() & 1) ? Activation::tanh : Activation::identity;
  shape.shared_dc = shared_dc;

  MultiExitModel model = MultiExitModel::create(shape, rng());
  for (std::size_t j = 0; j < model.deferral_head_count(); ++j) {
    DenseLayer& head = model.deferral_head(j);
    for (double& v : head.weights.data) v = u(rng);
    for (double& v : head.bias) v = u(rng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : model.backbone(i).bias) v = 0.3 * u(rng);
    for (double& v : model.exit_head(i).bias) v = 0.3 * u(rng);
  }
  return model;
}

double logistic_probe_accuracy(const Dataset& data, std::size_t iterations) {
  const std::size_t m = data.size();
  const std::size_t d = data.width();
  const std::size_t c = data.num_classes;

  // Standardise columns so a fixed step size behaves.
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.features(k, j) / static_cast<double>(m);
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      const double z = data.features(k, j) - mean[j];
      scale[j] += z * z / static_cast<double>(m);
    }
  }
  for (double& s : scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
  auto feature = [&](std::size_t k, std::size_t j) {
    return (data.features(k, j) - mean[j]) / scale[j];
  };

  std::vector<double> w(c * (d + 1), 0.0);
  std::vector<double> g(w.size());
  std::vector<double> logits(c);
  auto score = [&](std::size_t k) {
    for (std::size_t y = 0; y < c; ++y) {
      double z = w[y * (d + 1) + d];
      for (std::size_t j = 0; j < d; ++j) z += w[y * (d + 1) + j] * feature(k, j);
      logits[y] = z;
    }
    return ref_softmax(logits);
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = score(k);
      for (std::size_t y = 0; y < c; ++y) {
        const double e = p[y] - (data.labels[k] == static_cast<int>(y) ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) g[y * (d + 1) + j] += e * feature(k, j);
        g[y * (d + 1) + d] += e;
      }
    }
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= 0.5 * g[q] / static_cast<double>(m);
  }
  std::size_t right = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto p = score(k);
    const auto best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (best == data.labels[k]) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(m);
}

double nearest_centroid_mismatch(const Dataset& data,
                                 std::span<const std::vector<double>> centroids) {
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    int owner = -1;
    for (std::size_t y = 0; y < centroids.size(); ++y) {
      const double dx = data.features(k, 0) - centroids[y][0];
      const double dy = data.features(k, 1) - centroids[y][1];
      const double dist = dx * dx + dy * dy;
      if (dist < best) {
        best = dist;
        owner = static_cast<int>(y);
      }
    }
    if (owner != data.labels[k]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace eesp::testing
