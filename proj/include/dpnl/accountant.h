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

#ifndef DPNL_ACCOUNTANT_H_
#define DPNL_ACCOUNTANT_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dpnl {

// Parameters of a (subsampled) Gaussian mechanism run: Poisson sampling rate
// q, noise multiplier sigma, failure probability delta, and the number of
// noisy steps composed.
struct PrivacyParams {
  double q = 1.0;
  double sigma = 1.0;
  double delta = 1e-5;
  int64_t steps = 0;

  // Throws std::invalid_argument unless 0 <= q <= 1, sigma > 0,
  // 0 < delta < 1 and steps >= 0.
  void Validate() const;
};

// Renyi-DP curve: per-order RDP values in nats. Orders must be strictly
// increasing and > 1; values are nonnegative and non-decreasing in the order
// (Renyi divergence is monotone in its order).
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;

  bool Empty() const { return orders.empty(); }
  void Validate() const;
};

// An (eps, delta)-DP guarantee together with the Renyi order that achieved
// the minimum in the RDP-to-DP conversion.
struct EpsDelta {
  double eps = 0.0;
  double delta = 0.0;
  double best_order = 0.0;
};

// RDP -> (eps, delta) conversion rule. kClassic is the original
// rdp + log(1/delta)/(alpha-1) bound; kImproved is the tighter bound used by
// the mainstream DP-SGD libraries and is the default everywhere downstream.
enum class Conversion { kClassic, kImproved };

// Thrown when the adaptive quadrature cannot reach the requested tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-step RDP of the plain Gaussian mechanism with unit sensitivity:
// alpha / (2 sigma^2). Requires alpha > 1, sigma > 0.
double RdpGaussian(double alpha, double sigma);

// Per-step RDP of the Poisson-subsampled Gaussian mechanism at an integer
// order alpha >= 2:
//
//   (1/(alpha-1)) * log sum_{k=0..alpha} C(alpha,k) (1-q)^(alpha-k) q^k
//                                        * exp(k(k-1)/(2 sigma^2))
//
// The sum is evaluated entirely on log magnitudes (log-gamma binomials,
// log1p(-q), log-sum-exp), so no intermediate can overflow for any supported
// order. Reduces exactly to RdpGaussian at q=1 and to 0 at q=0.
// Requires 2 <= alpha <= 4096, 0 <= q <= 1, sigma > 0.
double RdpSubsampledGaussian(int alpha, double q, double sigma);

// Independent numerical route to the same quantity, valid at any real order
// alpha > 1:
//
//   (1/(alpha-1)) * log E_{z~N(0,sigma^2)} [((1-q) + q e^{(2z-1)/(2
//   sigma^2)})^alpha]
//
// evaluated by adaptive quadrature of the log-space integrand. Serves as the
// brute-force oracle for RdpSubsampledGaussian and as the only route to
// fractional orders. Throws ConvergenceError if the error estimate exceeds
// abs_tol. Requires alpha > 1, 0 < q <= 1, sigma > 0, abs_tol > 0.
double RdpSubsampledGaussianQuadrature(double alpha, double q, double sigma,
                                       double abs_tol = 1e-10);

// The default accounting grid: integer orders 2..256. The binomial formula
// is exact there, and a minimum over any order subset is still a valid
// (slightly conservative) epsilon.
std::vector<double> DefaultRdpOrders();

// Per-step RDP at each order, times params.steps (RDP composes additively
// over steps). Orders must be strictly increasing integers >= 2; fractional
// orders are only reachable through the quadrature routine above.
RdpCurve BuildCurve(const PrivacyParams& params,
                    const std::vector<double>& orders);

// Converts an RDP curve to an (eps, delta) guarantee by minimizing over
// orders:
//   classic:  eps = rdp(a) + log(1/delta)/(a-1)
//   improved: eps = rdp(a) + log((a-1)/a) - (log(delta) + log(a))/(a-1)
// The result is clamped below at 0. Throws on an empty curve.
EpsDelta ToEpsDelta(const RdpCurve& curve, double delta,
                    Conversion conversion);

}  // namespace dpnl

#endif  // DPNL_ACCOUNTANT_H_
