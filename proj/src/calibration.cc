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

#include "dpnl/calibration.h"

#include <cmath>
#include <limits>
#include <string>

namespace dpnl {

void CalibrationTarget::Validate() const {
  if (!(target_eps > 0.0)) {
    throw std::invalid_argument("target_eps must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q must be in (0, 1]");
  }
  if ((steps > 0) == (epochs > 0)) {
    throw std::invalid_argument(
        "exactly one of steps/epochs must be positive");
  }
  if (!(sigma_lo < sigma_hi)) {
    throw std::invalid_argument("sigma bracket must satisfy lo < hi");
  }
  if (!(sigma_lo > 0.0)) {
    throw std::invalid_argument("sigma bracket must be positive");
  }
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("sigma tolerance must be > 0");
  }
}

int64_t CalibrationTarget::ResolveSteps() const {
  return steps > 0 ? steps : StepsFromEpochs(epochs, q);
}

int64_t StepsFromEpochs(int epochs, double q) {
  if (epochs < 1) {
    throw std::invalid_argument("epochs must be >= 1");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q must be in (0, 1]");
  }
  // nearbyint under the default rounding mode is round-half-even.
  const int64_t steps =
      static_cast<int64_t>(std::nearbyint(static_cast<double>(epochs) / q));
  return std::max<int64_t>(1, steps);
}

EpsDelta EpsFor(double q, double sigma, int64_t steps, double delta,
                Conversion conversion) {
  const PrivacyParams params{q, sigma, delta, steps};
  return ToEpsDelta(BuildCurve(params, DefaultRdpOrders()), delta, conversion);
}

double CalibrateSigma(const CalibrationTarget& target) {
  target.Validate();
  const int64_t steps = target.ResolveSteps();
  const auto eps_at = [&](double sigma) {
    return EpsFor(target.q, sigma, steps, target.delta).eps;
  };

  double lo = target.sigma_lo;
  double hi = target.sigma_hi;
  const double eps_lo = eps_at(lo);
  const double eps_hi = eps_at(hi);
  if (!(eps_lo > target.target_eps)) {
    throw BracketError("target eps " + std::to_string(target.target_eps) +
                       " already met at sigma_lo (eps=" +
                       std::to_string(eps_lo) + ")");
  }
  if (!(eps_hi < target.target_eps)) {
    throw BracketError("target eps " + std::to_string(target.target_eps) +
                       " unreachable at sigma_hi (eps=" +
                       std::to_string(eps_hi) + ")");
  }

  // Invariant: eps(lo) > target >= eps(hi).
  while (hi - lo > target.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) > target.target_eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

std::vector<SweepRow> SweepGrid(const std::vector<double>& q_list,
                                const std::vector<double>& sigma_list,
                                int epochs, double delta) {
  if (q_list.empty() || sigma_list.empty()) {
    throw std::invalid_argument("sweep grids must be non-empty");
  }
  for (size_t i = 1; i < q_list.size(); ++i) {
    if (!(q_list[i] > q_list[i - 1])) {
      throw std::invalid_argument("q grid must be strictly increasing");
    }
  }
  for (size_t i = 1; i < sigma_list.size(); ++i) {
    if (!(sigma_list[i] > sigma_list[i - 1])) {
      throw std::invalid_argument("sigma grid must be strictly increasing");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(q_list.size() * sigma_list.size());
  for (double q : q_list) {
    const int64_t steps = StepsFromEpochs(epochs, q);
    for (double sigma : sigma_list) {
      const EpsDelta ed = EpsFor(q, sigma, steps, delta);
      rows.push_back(SweepRow{q, sigma, steps, delta, ed.eps, ed.best_order});
    }
  }
  return rows;
}

std::vector<ContourRow> Contour(const std::vector<double>& target_eps_list,
                                const std::vector<double>& q_list, int epochs,
                                double delta) {
  if (target_eps_list.empty() || q_list.empty()) {
    throw std::invalid_argument("contour inputs must be non-empty");
  }
  std::vector<ContourRow> rows;
  rows.reserve(target_eps_list.size() * q_list.size());
  for (double target_eps : target_eps_list) {
    for (double q : q_list) {
      CalibrationTarget target;
      target.target_eps = target_eps;
      target.delta = delta;
      target.q = q;
      target.epochs = epochs;
      ContourRow row;
      row.target_eps = target_eps;
      row.q = q;
      try {
        row.sigma = CalibrateSigma(target);
        row.status = ContourStatus::kOk;
      } catch (const BracketError&) {
        row.sigma = std::numeric_limits<double>::quiet_NaN();
        const double eps_hi =
            EpsFor(q, target.sigma_hi, target.ResolveSteps(), delta).eps;
        row.status = eps_hi >= target_eps ? ContourStatus::kInfeasible
                                          : ContourStatus::kBelowBracket;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace dpnl
