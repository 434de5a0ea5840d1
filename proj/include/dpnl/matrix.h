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

#ifndef DPNL_MATRIX_H_
#define DPNL_MATRIX_H_

#include <cstdint>
#include <span>
#include <vector>

namespace dpnl {

// Dense row-major matrix of doubles. Everything in this project is desk
// scale, so plain contiguous storage beats anything fancier.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& At(int64_t i, int64_t j) { return data[i * cols + j]; }
  double At(int64_t i, int64_t j) const { return data[i * cols + j]; }

  std::span<double> Row(int64_t i) {
    return {data.data() + i * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> Row(int64_t i) const {
    return {data.data() + i * cols, static_cast<size_t>(cols)};
  }
};

}  // namespace dpnl

#endif  // DPNL_MATRIX_H_
