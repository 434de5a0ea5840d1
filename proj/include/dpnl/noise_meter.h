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

#ifndef DPNL_NOISE_METER_H_
#define DPNL_NOISE_METER_H_

#include <cstdint>
#include <optional>

#include "dpnl/matrix.h"

namespace dpnl {

// Where a NoiseReport was taken.
struct NoiseContext {
  double batch_size = 0.0;  // B, or q*N under Poisson sampling
  double q = 0.0;           // 0 when not applicable
  int64_t n = 0;            // dataset size behind the gradient matrix
  int64_t dim = 0;          // parameter dimension
  std::optional<double> clip;  // nullopt = unbounded
  double sigma = 0.0;
  int64_t step = 0;
};

// Decomposition of the gradient noise at one parameter point into the
// minibatch-sampling component (not accounted in epsilon) and the additive
// DP component (fully accounted), plus the accounted fraction
// additive / (additive + inherent).
struct NoiseReport {
  double inherent_scale = 0.0;
  double additive_scale = 0.0;
  double accounted_fraction = 0.0;
  NoiseContext context;
};

// Expected squared l2 deviation of the minibatch mean gradient from the
// full-data mean gradient, under the with-replacement approximation:
// (1/B) * (1/N) * sum_i |g_i - gbar|^2. This keeps the 1/B law exact and
// matches the Poisson regime used for accounting; at B = N it returns
// (1/N) tr Cov rather than the 0 a without-replacement correction would
// give. Requires N >= 2 rows and 1 <= B <= N.
double InherentNoiseScale(const Matrix& per_sample_grads, double batch_size);

// Total added-noise variance of the privatized mean gradient, summed over
// the d coordinates: d * (C * sigma)^2 / B^2.
double AdditiveNoiseScale(double clip, double sigma, double batch_size,
                          int64_t dim);

// Assembles both scales and the accounted fraction. When clipping is active
// the caller passes the clipped per-sample gradients (that is the noise that
// actually enters the update). clip may be empty only when sigma == 0.
NoiseReport MakeNoiseReport(const Matrix& per_sample_grads, double batch_size,
                            std::optional<double> clip, double sigma);

}  // namespace dpnl

#endif  // DPNL_NOISE_METER_H_
