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

#ifndef DPNL_CALIBRATION_H_
#define DPNL_CALIBRATION_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dpnl/accountant.h"

namespace dpnl {

// Default sigma search bracket and bisection tolerance. The bracket covers
// the entire experimental range of interest with headroom.
inline constexpr double kDefaultSigmaLo = 0.3;
inline constexpr double kDefaultSigmaHi = 64.0;
inline constexpr double kDefaultSigmaTolerance = 1e-4;

// Thrown by CalibrateSigma when the target epsilon is not enclosed by the
// sigma search interval.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sigma-calibration request: find the smallest noise multiplier that
// drives epsilon down to target_eps at the given sampling rate, with the
// step count given either directly or as epochs (Poisson sampling performs
// an expected 1/q steps per epoch). Exactly one of steps/epochs is set.
struct CalibrationTarget {
  double target_eps = 0.0;
  double delta = 1e-5;
  double q = 0.0;
  int64_t steps = 0;
  int epochs = 0;
  double sigma_lo = kDefaultSigmaLo;
  double sigma_hi = kDefaultSigmaHi;
  double tolerance = kDefaultSigmaTolerance;

  void Validate() const;
  int64_t ResolveSteps() const;
};

// Expected number of Poisson-sampled steps in `epochs` epochs: round(epochs
// / q) under round-half-even, floored at 1.
int64_t StepsFromEpochs(int epochs, double q);

// End-to-end accounting: BuildCurve on the default order grid, then
// ToEpsDelta. Deterministic.
EpsDelta EpsFor(double q, double sigma, int64_t steps, double delta,
                Conversion conversion = Conversion::kImproved);

// Bisection on the strictly decreasing map sigma -> eps until the bracket
// width is <= target.tolerance. The returned sigma satisfies
// eps(sigma) <= target_eps. Throws BracketError unless
// eps(sigma_lo) > target_eps > eps(sigma_hi).
double CalibrateSigma(const CalibrationTarget& target);

struct SweepRow {
  double q = 0.0;
  double sigma = 0.0;
  int64_t steps = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double best_order = 0.0;
};

// One row per (q, sigma) cell, ordered by (q, sigma); steps derived from
// epochs per q. Within a fixed q, epsilon is strictly decreasing in sigma.
std::vector<SweepRow> SweepGrid(const std::vector<double>& q_list,
                                const std::vector<double>& sigma_list,
                                int epochs, double delta);

// Calibration status of a contour cell. Cells that cannot be bracketed are
// emitted with a sentinel status rather than dropped: kInfeasible means even
// sigma_hi leaves epsilon above target, kBelowBracket means sigma_lo already
// lands at or below target.
enum class ContourStatus { kOk, kInfeasible, kBelowBracket };

struct ContourRow {
  double target_eps = 0.0;
  double q = 0.0;
  double sigma = 0.0;  // NaN unless status == kOk
  ContourStatus status = ContourStatus::kOk;
};

// For each target epsilon and each q, the calibrated sigma at the given
// epoch budget. Rows ordered by (target_eps, q).
std::vector<ContourRow> Contour(const std::vector<double>& target_eps_list,
                                const std::vector<double>& q_list, int epochs,
                                double delta);

}  // namespace dpnl

#endif  // DPNL_CALIBRATION_H_
