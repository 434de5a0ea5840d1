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

#include "dpnl/accountant.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace dpnl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxIntegerOrder = 4096;

// log(n!) table so that binomial coefficients never go through factorials
// and repeated std::lgamma calls (which touch a process-global sign flag)
// are avoided after initialization.
const std::vector<double>& LogFactorialTable() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kMaxIntegerOrder + 2);
    for (size_t n = 0; n < t.size(); ++n) {
      t[n] = std::lgamma(static_cast<double>(n) + 1.0);
    }
    return t;
  }();
  return table;
}

double LogBinomial(int n, int k) {
  const std::vector<double>& lf = LogFactorialTable();
  return lf[n] - lf[k] - lf[n - k];
}

// log(e^a + e^b), tolerating -inf on either side.
double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double LogSumExp(const std::vector<double>& log_terms) {
  const double m = *std::max_element(log_terms.begin(), log_terms.end());
  if (m == -kInf) return -kInf;
  double sum = 0.0;
  for (double t : log_terms) sum += std::exp(t - m);
  return m + std::log(sum);
}

// Adaptive Simpson with the usual Richardson acceptance test. `ok` is
// cleared if any subinterval bottoms out on depth before meeting its share
// of the tolerance.
double AdaptiveSimpson(const std::function<double(double)>& f, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth, bool* ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    *ok = false;
    return left + right;
  }
  return AdaptiveSimpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                         ok) +
         AdaptiveSimpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                         ok);
}

double Integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, bool* ok) {
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return AdaptiveSimpson(f, a, b, fa, fm, fb, whole, tol, 48, ok);
}

}  // namespace

void PrivacyParams::Validate() const {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("sampling rate q must be in [0, 1], got " +
                                std::to_string(q));
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("noise multiplier sigma must be > 0, got " +
                                std::to_string(sigma));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1), got " +
                                std::to_string(delta));
  }
  if (steps < 0) {
    throw std::invalid_argument("steps must be >= 0, got " +
                                std::to_string(steps));
  }
}

void RdpCurve::Validate() const {
  if (orders.size() != values.size()) {
    throw std::invalid_argument("RDP curve orders/values length mismatch");
  }
  for (size_t i = 0; i < orders.size(); ++i) {
    if (!(orders[i] > 1.0)) {
      throw std::invalid_argument("RDP orders must be > 1");
    }
    if (i > 0 && !(orders[i] > orders[i - 1])) {
      throw std::invalid_argument("RDP orders must be strictly increasing");
    }
    if (!(values[i] >= 0.0)) {
      throw std::invalid_argument("RDP values must be >= 0");
    }
  }
}

double RdpGaussian(double alpha, double sigma) {
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("RdpGaussian: order must be > 1, got " +
                                std::to_string(alpha));
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("RdpGaussian: sigma must be > 0, got " +
                                std::to_string(sigma));
  }
  return alpha / (2.0 * sigma * sigma);
}

double RdpSubsampledGaussian(int alpha, double q, double sigma) {
  if (alpha < 2 || alpha > kMaxIntegerOrder) {
    throw std::invalid_argument(
        "RdpSubsampledGaussian: integer order must be in [2, " +
        std::to_string(kMaxIntegerOrder) + "], got " + std::to_string(alpha));
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("RdpSubsampledGaussian: q must be in [0, 1]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("RdpSubsampledGaussian: sigma must be > 0");
  }

  const double log_q = std::log(q);           // -inf at q=0
  const double log_1mq = std::log1p(-q);      // -inf at q=1
  const double inv_2s2 = 0.5 / (sigma * sigma);

  // k-th log term; factors with a zero exponent are skipped so that q=0 and
  // q=1 stay exact instead of producing 0 * (-inf).
  std::vector<double> log_terms;
  log_terms.reserve(alpha + 1);
  for (int k = 0; k <= alpha; ++k) {
    double t = LogBinomial(alpha, k);
    if (k < alpha) t += (alpha - k) * log_1mq;
    if (k > 0) t += k * log_q;
    t += static_cast<double>(k) * (k - 1) * inv_2s2;
    log_terms.push_back(t);
  }
  const double lse = LogSumExp(log_terms);
  // The moment is >= 1 (the k(k-1) exponents are nonnegative), so the result
  // can only go negative through rounding.
  return std::max(0.0, lse / (alpha - 1));
}

double RdpSubsampledGaussianQuadrature(double alpha, double q, double sigma,
                                       double abs_tol) {
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("quadrature: order must be > 1");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("quadrature: q must be in (0, 1]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("quadrature: sigma must be > 0");
  }
  if (!(abs_tol > 0.0)) {
    throw std::invalid_argument("quadrature: tolerance must be > 0");
  }

  const double inv_s2 = 1.0 / (sigma * sigma);
  const double log_1mq = std::log1p(-q);  // -inf at q=1
  const double log_q = std::log(q);
  const double log_norm =
      -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);

  // Log of N(z; 0, sigma^2) * ((1-q) + q e^{(2z-1)/(2 sigma^2)})^alpha.
  const auto log_f = [&](double z) {
    const double u = (2.0 * z - 1.0) * 0.5 * inv_s2;
    return -0.5 * z * z * inv_s2 + log_norm +
           alpha * LogAddExp(log_1mq, log_q + u);
  };

  // The integrand is a blend of Gaussian bumps whose centers range from 0 up
  // to alpha, so the window has to reach past z = alpha, not just past the
  // shifted mean at z = 1.
  const double lo = -20.0 * sigma;
  const double hi = alpha + 20.0 * sigma + 1.0;

  // Peak of the log integrand, found by a scan fine enough (sigma/8) not to
  // skip a bump of width sigma. Used only as an overflow-preventing offset,
  // so a slight miss is harmless.
  const int64_t n_scan = std::clamp<int64_t>(
      static_cast<int64_t>(std::ceil((hi - lo) / (sigma / 8.0))), 512, 65536);
  double peak = -kInf;
  for (int64_t i = 0; i <= n_scan; ++i) {
    const double z = lo + (hi - lo) * static_cast<double>(i) / n_scan;
    peak = std::max(peak, log_f(z));
  }

  const auto f = [&](double z) { return std::exp(log_f(z) - peak); };

  // Seed the adaptive pass with splits at the structural points of the
  // integrand (unshifted center, shifted center, top bump).
  std::vector<double> cuts = {lo, 0.0, 1.0, std::min(alpha, hi), hi};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  bool ok = true;
  double integral = 0.0;
  const double seg_tol = abs_tol / static_cast<double>(cuts.size() - 1);
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    integral += Integrate(f, cuts[i], cuts[i + 1], seg_tol, &ok);
  }
  if (!ok) {
    throw ConvergenceError(
        "quadrature did not reach tolerance " + std::to_string(abs_tol) +
        " for alpha=" + std::to_string(alpha) + " q=" + std::to_string(q) +
        " sigma=" + std::to_string(sigma));
  }
  const double log_moment = peak + std::log(integral);
  return std::max(0.0, log_moment / (alpha - 1.0));
}

std::vector<double> DefaultRdpOrders() {
  std::vector<double> orders;
  orders.reserve(255);
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

RdpCurve BuildCurve(const PrivacyParams& params,
                    const std::vector<double>& orders) {
  params.Validate();
  if (orders.empty()) {
    throw std::invalid_argument("BuildCurve: order list is empty");
  }
  RdpCurve curve;
  curve.orders = orders;
  curve.values.reserve(orders.size());
  double prev = 0.0;
  for (double order : orders) {
    const int alpha = static_cast<int>(std::llround(order));
    if (std::abs(order - alpha) > 1e-9 || alpha < 2) {
      throw std::invalid_argument(
          "BuildCurve: orders must be integers >= 2 (use the quadrature "
          "routine for fractional orders), got " +
          std::to_string(order));
    }
    if (!curve.values.empty() && !(order > prev)) {
      throw std::invalid_argument(
          "BuildCurve: orders must be strictly increasing");
    }
    prev = order;
    curve.values.push_back(static_cast<double>(params.steps) *
                           RdpSubsampledGaussian(alpha, params.q,
                                                 params.sigma));
  }
  return curve;
}

EpsDelta ToEpsDelta(const RdpCurve& curve, double delta,
                    Conversion conversion) {
  if (curve.Empty()) {
    throw std::invalid_argument("ToEpsDelta: curve is empty");
  }
  curve.Validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ToEpsDelta: delta must be in (0, 1)");
  }

  // An all-zero curve describes a run that released nothing (steps=0 or
  // q=0); its epsilon is 0 exactly, which the finite order grid would miss
  // (the conversion penalty vanishes only as alpha -> infinity).
  if (std::all_of(curve.values.begin(), curve.values.end(),
                  [](double v) { return v == 0.0; })) {
    return EpsDelta{0.0, delta, curve.orders.back()};
  }

  double best_eps = kInf;
  double best_order = curve.orders.front();
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    const double a = curve.orders[i];
    const double rdp = curve.values[i];
    double eps;
    if (conversion == Conversion::kClassic) {
      eps = rdp + std::log(1.0 / delta) / (a - 1.0);
    } else {
      eps = rdp + std::log((a - 1.0) / a) -
            (std::log(delta) + std::log(a)) / (a - 1.0);
    }
    if (eps < best_eps) {
      best_eps = eps;
      best_order = a;
    }
  }
  return EpsDelta{std::max(0.0, best_eps), delta, best_order};
}

}  // namespace dpnl
