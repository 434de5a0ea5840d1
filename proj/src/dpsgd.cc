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

#include "dpnl/dpsgd.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dpnl/calibration.h"
#include "dpnl/noise_meter.h"

namespace dpnl {
namespace {

double RowNorm(std::span<const double> row) {
  double sum = 0.0;
  for (double v : row) sum += v * v;
  return std::sqrt(sum);
}

// g -> g * min(1, c/|g|), leaving rows inside the ball untouched.
void ClipRowInPlace(std::span<double> row, double c) {
  const double norm = RowNorm(row);
  if (norm > c) {
    const double scale = c / norm;
    for (double& v : row) v *= scale;
  }
}

// Accuracy on a dataset split.
double Accuracy(const MlpParams& params, const Dataset& data) {
  std::vector<int64_t> all(data.Size());
  std::iota(all.begin(), all.end(), 0);
  const ForwardResult fwd = ForwardLoss(params, data, all);
  int64_t correct = 0;
  for (int64_t i = 0; i < data.Size(); ++i) {
    if (fwd.predictions[i] == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.Size());
}

}  // namespace

ClipConfig ClipConfig::Bounded(double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("clipping bound must be > 0");
  }
  ClipConfig config;
  config.bound = c;
  return config;
}

void TrainConfig::Validate(int64_t dataset_size) const {
  arch.Validate();
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rate must be >= 0");
  }
  if (epochs < 1) {
    throw std::invalid_argument("epochs must be >= 1");
  }
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("sigma must be >= 0");
  }
  if (eval_every < 1) {
    throw std::invalid_argument("eval_every must be >= 1");
  }
  if (max_steps < 0) {
    throw std::invalid_argument("max_steps must be >= 0");
  }
  switch (mode) {
    case BatchMode::kFull:
      break;
    case BatchMode::kFixed:
      if (batch_size < 1 || batch_size > dataset_size) {
        throw std::invalid_argument("batch size must be in [1, N]");
      }
      if (sigma > 0.0) {
        throw std::invalid_argument(
            "privacy accounting is undefined for fixed-size batching; use "
            "Poisson sampling for DP-SGD");
      }
      break;
    case BatchMode::kPoisson:
      if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
        throw std::invalid_argument("sampling rate must be in (0, 1]");
      }
      break;
  }
  if (sigma > 0.0) {
    if (!clip.IsBounded()) {
      throw std::invalid_argument(
          "sigma > 0 requires a clipping bound (noise scale is C * sigma)");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw std::invalid_argument("delta must be in (0, 1) when sigma > 0");
    }
  }
}

Matrix ClipPerSample(Matrix grads, const ClipConfig& clip) {
  if (!clip.IsBounded()) return grads;
  for (int64_t i = 0; i < grads.rows; ++i) {
    ClipRowInPlace(grads.Row(i), *clip.bound);
  }
  return grads;
}

std::vector<double> PrivatizeBatch(const Matrix& clipped,
                                   const ClipConfig& clip, double sigma,
                                   Rng& rng) {
  if (clipped.rows < 1) {
    throw std::invalid_argument("PrivatizeBatch: batch must be non-empty");
  }
  if (sigma > 0.0 && !clip.IsBounded()) {
    throw std::invalid_argument(
        "PrivatizeBatch: sigma > 0 requires a clipping bound");
  }
  std::vector<double> sum(clipped.cols, 0.0);
  for (int64_t i = 0; i < clipped.rows; ++i) {
    const auto row = clipped.Row(i);
    for (int64_t j = 0; j < clipped.cols; ++j) sum[j] += row[j];
  }
  if (sigma > 0.0) {
    const double noise_std = *clip.bound * sigma;
    for (double& v : sum) v += noise_std * rng.Normal();
  }
  const double inv_b = 1.0 / static_cast<double>(clipped.rows);
  for (double& v : sum) v *= inv_b;
  return sum;
}

std::vector<int64_t> PoissonSample(int64_t n, double q, Rng& rng) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("PoissonSample: q must be in [0, 1]");
  }
  std::vector<int64_t> batch;
  for (int64_t i = 0; i < n; ++i) {
    if (rng.Bernoulli(q)) batch.push_back(i);
  }
  return batch;
}

TrainMetrics Train(const TrainConfig& config, const Dataset& train,
                   const Dataset& test) {
  train.Validate();
  test.Validate();
  config.Validate(train.Size());

  const int64_t n = train.Size();
  const int64_t d = config.arch.ParamCount();

  // Steps per epoch: 1 for full batch, floor(N/B) for fixed-size batching,
  // and the expected 1/q for Poisson (totals match the accountant's
  // epochs-to-steps rule).
  int64_t total_steps = 0;
  switch (config.mode) {
    case BatchMode::kFull:
      total_steps = config.epochs;
      break;
    case BatchMode::kFixed:
      total_steps = static_cast<int64_t>(config.epochs) *
                    std::max<int64_t>(1, n / config.batch_size);
      break;
    case BatchMode::kPoisson:
      total_steps = StepsFromEpochs(config.epochs, config.sampling_rate);
      break;
  }
  const double steps_per_epoch =
      static_cast<double>(total_steps) / config.epochs;
  if (config.max_steps > 0) {
    total_steps = std::min(total_steps, config.max_steps);
  }

  const double q_effective =
      config.mode == BatchMode::kPoisson ? config.sampling_rate : 1.0;
  const double batch_size_effective =
      config.mode == BatchMode::kFull
          ? static_cast<double>(n)
          : (config.mode == BatchMode::kFixed
                 ? static_cast<double>(config.batch_size)
                 : std::max(1.0, config.sampling_rate *
                                     static_cast<double>(n)));

  MlpParams params = InitParams(config.arch, config.seed);
  Rng rng(config.seed);

  std::vector<int64_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int64_t> order = all;  // reshuffled per epoch in kFixed mode
  const int64_t fixed_per_epoch =
      config.mode == BatchMode::kFixed
          ? std::max<int64_t>(1, n / config.batch_size)
          : 0;

  std::vector<double> scratch_grad(d);
  Matrix batch_grads;  // reused across steps

  // Streaming noise decomposition over the full train set at the current
  // parameters: two passes so the deviation sum is computed against the
  // actual mean rather than by moment subtraction.
  const auto clipped_sample_grad = [&](int64_t i) {
    SampleGradient(params, train, i, scratch_grad);
    if (config.clip.IsBounded()) {
      ClipRowInPlace(scratch_grad, *config.clip.bound);
    }
  };
  const auto noise_scales = [&](double* inherent, double* additive) {
    std::vector<double> mean(d, 0.0);
    for (int64_t i = 0; i < n; ++i) {
      clipped_sample_grad(i);
      for (int64_t j = 0; j < d; ++j) mean[j] += scratch_grad[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    double sum_sq_dev = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      clipped_sample_grad(i);
      for (int64_t j = 0; j < d; ++j) {
        const double dev = scratch_grad[j] - mean[j];
        sum_sq_dev += dev * dev;
      }
    }
    *inherent =
        sum_sq_dev / (batch_size_effective * static_cast<double>(n));
    *additive = config.sigma > 0.0
                    ? AdditiveNoiseScale(*config.clip.bound, config.sigma,
                                         batch_size_effective, d)
                    : 0.0;
  };

  TrainMetrics metrics;
  metrics.total_steps = total_steps;

  const auto log_row = [&](int64_t step) {
    MetricsRow row;
    row.step = step;
    row.epoch = static_cast<double>(step) / steps_per_epoch;
    row.eps_spent =
        config.sigma > 0.0
            ? EpsFor(q_effective, config.sigma, step, config.delta).eps
            : 0.0;
    row.train_loss = ForwardLoss(params, train, all).mean_loss;
    row.test_acc = Accuracy(params, test);
    noise_scales(&row.inherent_noise, &row.additive_noise);
    const double total = row.inherent_noise + row.additive_noise;
    row.accounted_fraction = total > 0.0 ? row.additive_noise / total : 0.0;
    metrics.rows.push_back(row);
  };

  for (int64_t step = 1; step <= total_steps; ++step) {
    std::vector<int64_t> batch;
    switch (config.mode) {
      case BatchMode::kFull:
        batch = all;
        break;
      case BatchMode::kFixed: {
        const int64_t pos = (step - 1) % fixed_per_epoch;
        if (pos == 0) rng.Shuffle(order);
        batch.assign(order.begin() + pos * config.batch_size,
                     order.begin() + (pos + 1) * config.batch_size);
        break;
      }
      case BatchMode::kPoisson:
        batch = PoissonSample(n, config.sampling_rate, rng);
        break;
    }

    // An empty Poisson batch skips the update but still counts as a step:
    // the mechanism ran, so the accountant charges for it.
    if (!batch.empty()) {
      batch_grads.rows = static_cast<int64_t>(batch.size());
      batch_grads.cols = d;
      batch_grads.data.resize(batch_grads.rows * d);
      for (size_t i = 0; i < batch.size(); ++i) {
        SampleGradient(params, train, batch[i],
                       batch_grads.Row(static_cast<int64_t>(i)));
        if (config.clip.IsBounded()) {
          ClipRowInPlace(batch_grads.Row(static_cast<int64_t>(i)),
                         *config.clip.bound);
        }
      }
      const std::vector<double> update =
          PrivatizeBatch(batch_grads, config.clip, config.sigma, rng);
      for (int64_t j = 0; j < d; ++j) {
        params.theta[j] -= config.learning_rate * update[j];
      }
    }

    if (step % config.eval_every == 0 || step == total_steps) {
      log_row(step);
    }
  }

  metrics.final_params = std::move(params);
  return metrics;
}

GapResult GapExperiment(const Dataset& train, const Dataset& test,
                        const std::vector<uint64_t>& seeds,
                        const std::vector<GapRegime>& regimes) {
  if (seeds.size() < 3) {
    throw std::invalid_argument("GapExperiment: need at least 3 seeds");
  }
  if (regimes.empty()) {
    throw std::invalid_argument("GapExperiment: need at least one regime");
  }
  GapResult result;
  for (const GapRegime& regime : regimes) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (uint64_t seed : seeds) {
      TrainConfig config = regime.config;
      config.seed = seed;
      const TrainMetrics metrics = Train(config, train, test);
      double acc = 0.0;
      for (const MetricsRow& row : metrics.rows) {
        acc = std::max(acc, row.test_acc);
      }
      result.rows.push_back(GapRow{regime.name, seed, acc});
      sum += acc;
      sum_sq += acc * acc;
    }
    const double k = static_cast<double>(seeds.size());
    const double mean = sum / k;
    const double var = std::max(0.0, (sum_sq - k * mean * mean) / (k - 1.0));
    result.summary.push_back(GapSummary{regime.name, mean, std::sqrt(var)});
  }
  return result;
}

}  // namespace dpnl
