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

#ifndef DPNL_DATA_H_
#define DPNL_DATA_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpnl/matrix.h"

namespace dpnl {

// A labeled classification dataset. Features are row-per-sample; labels are
// class indices in [0, num_classes).
struct Dataset {
  Matrix features;
  std::vector<int32_t> labels;
  int64_t num_classes = 0;
  std::string split;  // "train", "test" or empty

  int64_t Size() const { return features.rows; }
  int64_t InputDim() const { return features.cols; }
  void Validate() const;
};

// IDX container errors. Messages name the offending file and byte offset.
class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public IdxError {
 public:
  using IdxError::IdxError;
};
class TruncatedFileError : public IdxError {
 public:
  using IdxError::IdxError;
};
class CountMismatchError : public IdxError {
 public:
  using IdxError::IdxError;
};

// Loads an image/label pair of IDX files (big-endian, unsigned-byte payload
// only): magic 0x00000803 with dims (count, rows, cols) for images, magic
// 0x00000801 with dim (count) for labels. Pixels are scaled to [0, 1] by
// division by 255 and flattened row-major.
Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path);

// Writes a dataset back out as an IDX pair (images as count x 1 x dim).
// Feature values are mapped to bytes by round(v * 255); exact for datasets
// that came from LoadIdx.
void WriteIdx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

// k Gaussian clusters with seeded centers drawn uniformly from [-1, 1]^d_in
// and isotropic per-class spread. Labels are assigned round-robin, so class
// counts are balanced within 1. Requires n >= k >= 2.
Dataset SyntheticBlobs(int64_t n, int64_t d_in, int64_t k, double spread,
                       uint64_t seed);

// Seeded shuffle, then the first n_train rows become the train split and the
// next n_test rows the test split. Requires n_train + n_test <= data.Size().
std::pair<Dataset, Dataset> SubsetSplit(const Dataset& data, int64_t n_train,
                                        int64_t n_test, uint64_t seed);

}  // namespace dpnl

#endif  // DPNL_DATA_H_
