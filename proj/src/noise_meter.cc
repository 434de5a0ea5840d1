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

#include "dpnl/noise_meter.h"

#include <stdexcept>
#include <vector>

namespace dpnl {

double InherentNoiseScale(const Matrix& per_sample_grads, double batch_size) {
  const int64_t n = per_sample_grads.rows;
  const int64_t d = per_sample_grads.cols;
  if (n < 2) {
    throw std::invalid_argument(
        "InherentNoiseScale: need at least 2 gradient rows");
  }
  if (!(batch_size >= 1.0 && batch_size <= static_cast<double>(n))) {
    throw std::invalid_argument(
        "InherentNoiseScale: batch size must be in [1, N]");
  }
  std::vector<double> mean(d, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const auto row = per_sample_grads.Row(i);
    for (int64_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  double sum_sq_dev = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const auto row = per_sample_grads.Row(i);
    for (int64_t j = 0; j < d; ++j) {
      const double dev = row[j] - mean[j];
      sum_sq_dev += dev * dev;
    }
  }
  return sum_sq_dev / (batch_size * static_cast<double>(n));
}

double AdditiveNoiseScale(double clip, double sigma, double batch_size,
                          int64_t dim) {
  if (!(clip > 0.0)) {
    throw std::invalid_argument("AdditiveNoiseScale: clip must be > 0");
  }
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("AdditiveNoiseScale: sigma must be >= 0");
  }
  if (!(batch_size >= 1.0) || dim < 1) {
    throw std::invalid_argument(
        "AdditiveNoiseScale: need batch_size >= 1 and dim >= 1");
  }
  const double per_coord = (clip * sigma) / batch_size;
  return static_cast<double>(dim) * per_coord * per_coord;
}

NoiseReport MakeNoiseReport(const Matrix& per_sample_grads, double batch_size,
                            std::optional<double> clip, double sigma) {
  if (sigma > 0.0 && !clip.has_value()) {
    throw std::invalid_argument(
        "MakeNoiseReport: sigma > 0 requires a clipping bound");
  }
  NoiseReport report;
  report.inherent_scale = InherentNoiseScale(per_sample_grads, batch_size);
  report.additive_scale =
      sigma > 0.0 ? AdditiveNoiseScale(*clip, sigma, batch_size,
                                       per_sample_grads.cols)
                  : 0.0;
  const double total = report.additive_scale + report.inherent_scale;
  report.accounted_fraction = total > 0.0 ? report.additive_scale / total : 0.0;
  report.context.batch_size = batch_size;
  report.context.n = per_sample_grads.rows;
  report.context.dim = per_sample_grads.cols;
  report.context.clip = clip;
  report.context.sigma = sigma;
  return report;
}

}  // namespace dpnl
