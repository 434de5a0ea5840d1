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

#include "dpnl/models.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dpnl/rng.h"

namespace dpnl {
namespace {

// Softmax probabilities of one sample's logits, max-subtracted. Returns the
// sample loss -log p[label] and fills `probs`.
double SoftmaxLoss(std::span<const double> logits, int32_t label,
                   std::span<double> probs) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - zmax);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;
  return std::log(sum) - (logits[label] - zmax);
}

// Logits of one sample; fills `hidden_act` (tanh activations) when the
// architecture has a hidden layer.
void Logits(const MlpParams& params, std::span<const double> x,
            std::span<double> hidden_act, std::span<double> logits) {
  const Architecture& a = params.arch;
  const double* theta = params.theta.data();
  if (a.hidden == 0) {
    const double* W = theta;
    const double* b = theta + a.num_classes * a.input_dim;
    for (int64_t c = 0; c < a.num_classes; ++c) {
      double z = b[c];
      const double* row = W + c * a.input_dim;
      for (int64_t j = 0; j < a.input_dim; ++j) z += row[j] * x[j];
      logits[c] = z;
    }
    return;
  }
  const double* W1 = theta + params.W1Offset();
  const double* b1 = theta + params.B1Offset();
  const double* W2 = theta + params.W2Offset();
  const double* b2 = theta + params.B2Offset();
  for (int64_t h = 0; h < a.hidden; ++h) {
    double s = b1[h];
    const double* row = W1 + h * a.input_dim;
    for (int64_t j = 0; j < a.input_dim; ++j) s += row[j] * x[j];
    hidden_act[h] = std::tanh(s);
  }
  for (int64_t c = 0; c < a.num_classes; ++c) {
    double z = b2[c];
    const double* row = W2 + c * a.hidden;
    for (int64_t h = 0; h < a.hidden; ++h) z += row[h] * hidden_act[h];
    logits[c] = z;
  }
}

void CheckBatch(const MlpParams& params, const Dataset& data,
                std::span<const int64_t> batch) {
  params.arch.Validate();
  if (batch.empty()) {
    throw std::invalid_argument("batch is empty");
  }
  if (data.InputDim() != params.arch.input_dim ||
      data.num_classes != params.arch.num_classes) {
    throw std::invalid_argument("dataset shape does not match architecture");
  }
  if (static_cast<int64_t>(params.theta.size()) !=
      params.arch.ParamCount()) {
    throw std::invalid_argument("parameter vector has wrong length");
  }
  for (int64_t i : batch) {
    if (i < 0 || i >= data.Size()) {
      throw std::invalid_argument("batch index out of range");
    }
  }
}

}  // namespace

void Architecture::Validate() const {
  if (input_dim < 1 || num_classes < 2 || hidden < 0) {
    throw std::invalid_argument(
        "architecture requires input_dim >= 1, classes >= 2, hidden >= 0");
  }
}

int64_t Architecture::ParamCount() const {
  if (hidden == 0) {
    return num_classes * input_dim + num_classes;
  }
  return hidden * input_dim + hidden + num_classes * hidden + num_classes;
}

MlpParams InitParams(const Architecture& arch, uint64_t seed) {
  arch.Validate();
  MlpParams params;
  params.arch = arch;
  params.theta.assign(arch.ParamCount(), 0.0);
  Rng rng(seed);
  const auto fill = [&](int64_t offset, int64_t count, int64_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int64_t i = 0; i < count; ++i) {
      params.theta[offset + i] = rng.UniformIn(-bound, bound);
    }
  };
  if (arch.hidden == 0) {
    fill(0, arch.num_classes * arch.input_dim, arch.input_dim);
  } else {
    fill(params.W1Offset(), arch.hidden * arch.input_dim, arch.input_dim);
    fill(params.W2Offset(), arch.num_classes * arch.hidden, arch.hidden);
  }
  return params;
}

ForwardResult ForwardLoss(const MlpParams& params, const Dataset& data,
                          std::span<const int64_t> batch) {
  CheckBatch(params, data, batch);
  const Architecture& a = params.arch;
  std::vector<double> hidden_act(a.hidden);
  std::vector<double> logits(a.num_classes);
  std::vector<double> probs(a.num_classes);

  ForwardResult result;
  result.per_sample_loss.reserve(batch.size());
  result.predictions.reserve(batch.size());
  double total = 0.0;
  for (int64_t i : batch) {
    Logits(params, data.features.Row(i), hidden_act, logits);
    const double loss = SoftmaxLoss(logits, data.labels[i], probs);
    result.per_sample_loss.push_back(loss);
    result.predictions.push_back(static_cast<int32_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin()));
    total += loss;
  }
  result.mean_loss = total / static_cast<double>(batch.size());
  return result;
}

void SampleGradient(const MlpParams& params, const Dataset& data,
                    int64_t index, std::span<double> out) {
  const Architecture& a = params.arch;
  std::span<const double> x = data.features.Row(index);
  // Scratch reused across the very hot per-sample call path.
  thread_local std::vector<double> hidden_act;
  thread_local std::vector<double> logits;
  thread_local std::vector<double> probs;
  thread_local std::vector<double> err;
  hidden_act.resize(a.hidden);
  logits.resize(a.num_classes);
  probs.resize(a.num_classes);
  Logits(params, x, hidden_act, logits);
  SoftmaxLoss(logits, data.labels[index], probs);

  // err = p - onehot(y), the softmax cross-entropy error signal.
  err.assign(probs.begin(), probs.end());
  err[data.labels[index]] -= 1.0;

  // Every coordinate of `out` is assigned below; no pre-fill needed.
  if (a.hidden == 0) {
    double* dW = out.data();
    double* db = out.data() + a.num_classes * a.input_dim;
    for (int64_t c = 0; c < a.num_classes; ++c) {
      for (int64_t j = 0; j < a.input_dim; ++j) {
        dW[c * a.input_dim + j] = err[c] * x[j];
      }
      db[c] = err[c];
    }
    return;
  }

  const double* W2 = params.theta.data() + params.W2Offset();
  double* dW1 = out.data() + params.W1Offset();
  double* db1 = out.data() + params.B1Offset();
  double* dW2 = out.data() + params.W2Offset();
  double* db2 = out.data() + params.B2Offset();
  for (int64_t c = 0; c < a.num_classes; ++c) {
    for (int64_t h = 0; h < a.hidden; ++h) {
      dW2[c * a.hidden + h] = err[c] * hidden_act[h];
    }
    db2[c] = err[c];
  }
  for (int64_t h = 0; h < a.hidden; ++h) {
    double back = 0.0;
    for (int64_t c = 0; c < a.num_classes; ++c) {
      back += W2[c * a.hidden + h] * err[c];
    }
    const double ds = back * (1.0 - hidden_act[h] * hidden_act[h]);
    for (int64_t j = 0; j < a.input_dim; ++j) {
      dW1[h * a.input_dim + j] = ds * x[j];
    }
    db1[h] = ds;
  }
}

Matrix PerSampleGradients(const MlpParams& params, const Dataset& data,
                          std::span<const int64_t> batch) {
  CheckBatch(params, data, batch);
  Matrix grads(static_cast<int64_t>(batch.size()), params.arch.ParamCount());
  for (size_t i = 0; i < batch.size(); ++i) {
    SampleGradient(params, data, batch[i], grads.Row(i));
  }
  return grads;
}

double MaxRelErrorVsFiniteDiff(const MlpParams& params, const Dataset& data,
                               std::span<const int64_t> batch,
                               std::span<const double> analytic_grad,
                               int64_t probes, uint64_t seed) {
  CheckBatch(params, data, batch);
  const int64_t d = params.arch.ParamCount();
  if (probes < 1) {
    throw std::invalid_argument("probes must be >= 1");
  }
  if (static_cast<int64_t>(analytic_grad.size()) != d) {
    throw std::invalid_argument("analytic gradient has wrong length");
  }

  std::vector<int64_t> coords(d);
  std::iota(coords.begin(), coords.end(), 0);
  if (probes < d) {
    Rng rng(seed);
    rng.Shuffle(coords);
    coords.resize(probes);
  }

  MlpParams probe = params;
  double max_rel = 0.0;
  for (int64_t j : coords) {
    const double saved = probe.theta[j];
    const double h = 1e-5 * (1.0 + std::abs(saved));
    probe.theta[j] = saved + h;
    const double up = ForwardLoss(probe, data, batch).mean_loss;
    probe.theta[j] = saved - h;
    const double down = ForwardLoss(probe, data, batch).mean_loss;
    probe.theta[j] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic_grad[j]), std::abs(fd), 1e-3});
    max_rel = std::max(max_rel, std::abs(analytic_grad[j] - fd) / denom);
  }
  return max_rel;
}

double FiniteDiffCheck(const MlpParams& params, const Dataset& data,
                       std::span<const int64_t> batch, int64_t probes,
                       uint64_t seed) {
  const Matrix grads = PerSampleGradients(params, data, batch);
  std::vector<double> mean(params.arch.ParamCount(), 0.0);
  for (int64_t i = 0; i < grads.rows; ++i) {
    const auto row = grads.Row(i);
    for (int64_t j = 0; j < grads.cols; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(grads.rows);
  return MaxRelErrorVsFiniteDiff(params, data, batch, mean, probes, seed);
}

}  // namespace dpnl
