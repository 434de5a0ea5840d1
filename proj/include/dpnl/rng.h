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

#ifndef DPNL_RNG_H_
#define DPNL_RNG_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace dpnl {

// Deterministic random source. All transforms from raw 64-bit draws to
// doubles are written out here rather than delegated to the standard
// distributions, whose output is implementation-defined; a run is therefore
// reproducible from its seed on a given build.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1): top 53 bits of one raw draw.
  double Uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double UniformIn(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via the trigonometric Box-Muller transform. Consumes two
  // raw draws per value; the paired second value is discarded so the stream
  // position never depends on call history.
  double Normal() {
    const double u1 = 1.0 - Uniform();  // (0, 1], keeps the log finite
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Uniform integer in [0, bound). Plain modulo; the bias is ~bound/2^64.
  uint64_t UniformInt(uint64_t bound) { return gen_() % bound; }

  // Fisher-Yates.
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[UniformInt(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dpnl

#endif  // DPNL_RNG_H_
