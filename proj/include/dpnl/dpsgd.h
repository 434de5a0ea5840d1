//
// Copyright 2026 The dp-noise-ledger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPNL_DPSGD_H_
#define DPNL_DPSGD_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpnl/data.h"
#include "dpnl/matrix.h"
#include "dpnl/models.h"
#include "dpnl/rng.h"

namespace dpnl {

// Per-sample l2 clipping bound, or unbounded (no clipping).
struct ClipConfig {
  std::optional<double> bound;

  static ClipConfig Unbounded() { return ClipConfig{}; }
  static ClipConfig Bounded(double c);
  bool IsBounded() const { return bound.has_value(); }
};

enum class BatchMode { kFull, kFixed, kPoisson };

// One training run. The four regimes of interest are spellings of this one
// config: GD = kFull + sigma 0 + unbounded clip, SGD = kFixed likewise,
// DP-SGD = kPoisson + clip + sigma, DP-GD = kFull + clip + sigma.
struct TrainConfig {
  Architecture arch;
  double learning_rate = 0.1;
  int epochs = 1;
  BatchMode mode = BatchMode::kFull;
  int64_t batch_size = 0;      // kFixed only
  double sampling_rate = 0.0;  // kPoisson only
  ClipConfig clip;
  double sigma = 0.0;
  double delta = 1e-5;
  uint64_t seed = 1;
  int64_t eval_every = 10;  // in steps; the final step is always logged
  int64_t max_steps = 0;    // 0 = run all epochs; otherwise stop early

  // Rejects contradictory configurations before any compute: sigma > 0
  // without a clipping bound, or sigma > 0 under fixed-size batching
  // (privacy accounting is only defined for Poisson and full-batch modes).
  void Validate(int64_t dataset_size) const;
};

struct MetricsRow {
  int64_t step = 0;
  double epoch = 0.0;
  double eps_spent = 0.0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  double inherent_noise = 0.0;
  double additive_noise = 0.0;
  double accounted_fraction = 0.0;
};

struct TrainMetrics {
  std::vector<MetricsRow> rows;
  MlpParams final_params;
  int64_t total_steps = 0;
};

// Row-wise l2 clipping: g -> g * min(1, C/|g|). Rows already inside the
// ball (and every row under an unbounded config) pass through bit-identical.
Matrix ClipPerSample(Matrix grads, const ClipConfig& clip);

// The Gaussian mechanism applied to a batch of pre-clipped per-sample
// gradients: returns (1/B) (sum_i g_i + z) with z ~ N(0, (C sigma)^2 I_d),
// i.e. per-coordinate added variance (C sigma)^2 / B^2 on the mean. sigma=0
// adds nothing and draws nothing. Throws if sigma > 0 with unbounded clip.
std::vector<double> PrivatizeBatch(const Matrix& clipped,
                                   const ClipConfig& clip, double sigma,
                                   Rng& rng);

// Poisson sampling: each of the n indices is included independently with
// probability q. The empty set is a legal outcome.
std::vector<int64_t> PoissonSample(int64_t n, double q, Rng& rng);

// Runs the configured regime on the train split, evaluating on the test
// split at the logging cadence. eps_spent at step t is the accountant's
// value for t composed steps at the effective sampling rate (q under
// Poisson, 1 under full batch); it is identically 0 when sigma == 0.
// Deterministic given (config, data, seed).
TrainMetrics Train(const TrainConfig& config, const Dataset& train,
                   const Dataset& test);

// A named regime for the generalization-gap experiment. The config's seed is
// overwritten by the per-run seed.
struct GapRegime {
  std::string name;
  TrainConfig config;
};

struct GapRow {
  std::string regime;
  uint64_t seed = 0;
  double accuracy = 0.0;  // best evaluated test accuracy of the run
};

struct GapSummary {
  std::string regime;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;  // sample standard deviation
};

struct GapResult {
  std::vector<GapRow> rows;
  std::vector<GapSummary> summary;
};

// Trains every regime once per seed on the identical train/test pair. A
// run's accuracy is the best test accuracy over its evaluation points (the
// plateau the regime's accuracy curve reaches); set the regimes'
// eval_every so each run gets a comparable number of evaluations.
// Requires >= 3 seeds.
GapResult GapExperiment(const Dataset& train, const Dataset& test,
                        const std::vector<uint64_t>& seeds,
                        const std::vector<GapRegime>& regimes);

}  // namespace dpnl

#endif  // DPNL_DPSGD_H_
