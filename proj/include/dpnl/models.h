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

#ifndef DPNL_MODELS_H_
#define DPNL_MODELS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dpnl/data.h"
#include "dpnl/matrix.h"

namespace dpnl {

// Model shape d_in -> hidden -> classes. hidden == 0 selects plain
// multinomial logistic regression; otherwise one tanh hidden layer.
struct Architecture {
  int64_t input_dim = 0;
  int64_t hidden = 0;
  int64_t num_classes = 0;

  void Validate() const;
  int64_t ParamCount() const;
};

// Model parameters stored as one flat vector; layer views index into it.
// Layout with a hidden layer: [W1 (h x d) | b1 (h) | W2 (k x h) | b2 (k)],
// all row-major. Without: [W (k x d) | b (k)]. The flat vector IS the
// canonical form, so flatten/unflatten is exact by construction.
struct MlpParams {
  Architecture arch;
  std::vector<double> theta;

  // Offsets of the layer blocks within theta.
  int64_t W1Offset() const { return 0; }
  int64_t B1Offset() const { return arch.hidden * arch.input_dim; }
  int64_t W2Offset() const { return B1Offset() + arch.hidden; }
  int64_t B2Offset() const {
    return W2Offset() + arch.num_classes *
                            (arch.hidden > 0 ? arch.hidden : arch.input_dim);
  }
};

// Seeded initialization: weights uniform in [-1/sqrt(fan_in),
// +1/sqrt(fan_in)], biases zero.
MlpParams InitParams(const Architecture& arch, uint64_t seed);

struct ForwardResult {
  double mean_loss = 0.0;
  std::vector<double> per_sample_loss;
  std::vector<int32_t> predictions;
};

// Softmax cross-entropy over the given batch rows, with max-subtraction for
// stability. Throws on empty batches or shape mismatches.
ForwardResult ForwardLoss(const MlpParams& params, const Dataset& data,
                          std::span<const int64_t> batch);

// Analytic gradient of sample `index`'s loss, written into `out` (length
// ParamCount) using the flat layout above.
void SampleGradient(const MlpParams& params, const Dataset& data,
                    int64_t index, std::span<double> out);

// Per-sample gradient matrix: row i is the gradient of the loss of
// batch[i]. The mean of the rows equals the gradient of the mean batch loss.
Matrix PerSampleGradients(const MlpParams& params, const Dataset& data,
                          std::span<const int64_t> batch);

// Max relative error between `analytic_grad` (a full mean-batch gradient)
// and central finite differences of the mean loss, over `probes` randomly
// chosen coordinates (all coordinates when probes >= ParamCount). Step size
// is 1e-5 * (1 + |theta_j|); coordinates are compared against a 1e-3
// magnitude floor so that near-zero entries do not dominate the ratio.
double MaxRelErrorVsFiniteDiff(const MlpParams& params, const Dataset& data,
                               std::span<const int64_t> batch,
                               std::span<const double> analytic_grad,
                               int64_t probes, uint64_t seed);

// The gradient oracle: analytic mean gradient vs central differences.
double FiniteDiffCheck(const MlpParams& params, const Dataset& data,
                       std::span<const int64_t> batch, int64_t probes,
                       uint64_t seed);

}  // namespace dpnl

#endif  // DPNL_MODELS_H_
