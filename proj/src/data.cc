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

#include "dpnl/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dpnl/rng.h"

namespace dpnl {
namespace {

constexpr uint32_t kImageMagic = 0x00000803;  // ubyte, 3 dimensions
constexpr uint32_t kLabelMagic = 0x00000801;  // ubyte, 1 dimension

uint32_t ReadBigEndian32(std::ifstream& in, const std::string& path,
                         int64_t offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw TruncatedFileError(path + ": truncated at offset " +
                             std::to_string(offset) +
                             " while reading a 32-bit field");
  }
  return (static_cast<uint32_t>(b[0]) << 24) |
         (static_cast<uint32_t>(b[1]) << 16) |
         (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

void WriteBigEndian32(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream OpenOrThrow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TruncatedFileError(path + ": cannot open file");
  }
  return in;
}

std::vector<unsigned char> ReadPayload(std::ifstream& in,
                                       const std::string& path,
                                       int64_t offset, int64_t count) {
  std::vector<unsigned char> bytes(count);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), count)) {
    throw TruncatedFileError(
        path + ": truncated at offset " +
        std::to_string(offset + in.gcount()) + ", expected " +
        std::to_string(count) + " payload bytes");
  }
  return bytes;
}

}  // namespace

void Dataset::Validate() const {
  if (features.rows != static_cast<int64_t>(labels.size())) {
    throw std::invalid_argument("dataset feature/label count mismatch");
  }
  if (num_classes < 1) {
    throw std::invalid_argument("dataset must declare at least one class");
  }
  for (int32_t y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("label out of range [0, num_classes)");
    }
  }
}

Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path) {
  std::ifstream img = OpenOrThrow(images_path);
  const uint32_t img_magic = ReadBigEndian32(img, images_path, 0);
  if (img_magic != kImageMagic) {
    throw BadMagicError(images_path + ": bad magic at offset 0, expected " +
                        std::to_string(kImageMagic) + " got " +
                        std::to_string(img_magic));
  }
  const int64_t n = ReadBigEndian32(img, images_path, 4);
  const int64_t rows = ReadBigEndian32(img, images_path, 8);
  const int64_t cols = ReadBigEndian32(img, images_path, 12);
  const std::vector<unsigned char> pixels =
      ReadPayload(img, images_path, 16, n * rows * cols);

  std::ifstream lbl = OpenOrThrow(labels_path);
  const uint32_t lbl_magic = ReadBigEndian32(lbl, labels_path, 0);
  if (lbl_magic != kLabelMagic) {
    throw BadMagicError(labels_path + ": bad magic at offset 0, expected " +
                        std::to_string(kLabelMagic) + " got " +
                        std::to_string(lbl_magic));
  }
  const int64_t n_labels = ReadBigEndian32(lbl, labels_path, 4);
  if (n_labels != n) {
    throw CountMismatchError(labels_path + ": has " +
                             std::to_string(n_labels) + " labels but " +
                             images_path + " has " + std::to_string(n) +
                             " images");
  }
  const std::vector<unsigned char> raw_labels =
      ReadPayload(lbl, labels_path, 8, n);

  Dataset data;
  data.features = Matrix(n, rows * cols);
  for (size_t i = 0; i < pixels.size(); ++i) {
    data.features.data[i] = pixels[i] / 255.0;
  }
  data.labels.assign(raw_labels.begin(), raw_labels.end());
  int32_t max_label = 0;
  for (int32_t y : data.labels) max_label = std::max(max_label, y);
  data.num_classes = max_label + 1;
  data.Validate();
  return data;
}

void WriteIdx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
  data.Validate();
  std::ofstream img(images_path, std::ios::binary);
  if (!img) {
    throw TruncatedFileError(images_path + ": cannot open file for writing");
  }
  WriteBigEndian32(img, kImageMagic);
  WriteBigEndian32(img, static_cast<uint32_t>(data.Size()));
  WriteBigEndian32(img, 1);
  WriteBigEndian32(img, static_cast<uint32_t>(data.InputDim()));
  for (double v : data.features.data) {
    const long byte = std::lround(v * 255.0);
    img.put(static_cast<char>(std::clamp(byte, 0L, 255L)));
  }

  std::ofstream lbl(labels_path, std::ios::binary);
  if (!lbl) {
    throw TruncatedFileError(labels_path + ": cannot open file for writing");
  }
  WriteBigEndian32(lbl, kLabelMagic);
  WriteBigEndian32(lbl, static_cast<uint32_t>(data.Size()));
  for (int32_t y : data.labels) {
    lbl.put(static_cast<char>(y));
  }
}

Dataset SyntheticBlobs(int64_t n, int64_t d_in, int64_t k, double spread,
                       uint64_t seed) {
  if (k < 2 || n < k) {
    throw std::invalid_argument("SyntheticBlobs: need n >= k >= 2");
  }
  if (d_in < 1) {
    throw std::invalid_argument("SyntheticBlobs: d_in must be >= 1");
  }
  if (!(spread >= 0.0)) {
    throw std::invalid_argument("SyntheticBlobs: spread must be >= 0");
  }
  Rng rng(seed);
  Matrix centers(k, d_in);
  for (double& c : centers.data) c = rng.UniformIn(-1.0, 1.0);

  Dataset data;
  data.features = Matrix(n, d_in);
  data.labels.resize(n);
  data.num_classes = k;
  for (int64_t i = 0; i < n; ++i) {
    const int64_t c = i % k;
    data.labels[i] = static_cast<int32_t>(c);
    for (int64_t j = 0; j < d_in; ++j) {
      data.features.At(i, j) = centers.At(c, j) + spread * rng.Normal();
    }
  }
  return data;
}

std::pair<Dataset, Dataset> SubsetSplit(const Dataset& data, int64_t n_train,
                                        int64_t n_test, uint64_t seed) {
  data.Validate();
  if (n_train < 0 || n_test < 0 || n_train + n_test > data.Size()) {
    throw std::invalid_argument(
        "SubsetSplit: n_train + n_test exceeds dataset size");
  }
  std::vector<int64_t> index(data.Size());
  std::iota(index.begin(), index.end(), 0);
  Rng rng(seed);
  rng.Shuffle(index);

  const auto take = [&](int64_t offset, int64_t count,
                        const std::string& tag) {
    Dataset out;
    out.features = Matrix(count, data.InputDim());
    out.labels.resize(count);
    out.num_classes = data.num_classes;
    out.split = tag;
    for (int64_t i = 0; i < count; ++i) {
      const int64_t src = index[offset + i];
      std::copy(data.features.Row(src).begin(), data.features.Row(src).end(),
                out.features.Row(i).begin());
      out.labels[i] = data.labels[src];
    }
    return out;
  };
  return {take(0, n_train, "train"), take(n_train, n_test, "test")};
}

}  // namespace dpnl
