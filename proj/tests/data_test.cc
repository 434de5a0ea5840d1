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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpnl/data.h"

using namespace dpnl;

namespace {

std::string ScratchDir() {
  static const std::string dir = [] {
    const auto path =
        std::filesystem::temp_directory_path() / "dpnl_data_test";
    std::filesystem::create_directories(path);
    return path.string();
  }();
  return dir;
}

Dataset TinyDataset() {
  Dataset data;
  data.features = Matrix(10, 4);
  data.labels.resize(10);
  data.num_classes = 3;
  for (int64_t i = 0; i < 10; ++i) {
    data.labels[i] = static_cast<int32_t>(i % 3);
    for (int64_t j = 0; j < 4; ++j) {
      // Exact byte grid so the IDX round trip is lossless.
      data.features.At(i, j) = static_cast<double>((i * 4 + j) % 256) / 255.0;
    }
  }
  return data;
}

void PatchByte(const std::string& path, int64_t offset, unsigned char value) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(offset);
  f.put(static_cast<char>(value));
}

}  // namespace

TEST_CASE("idx write/load round trip is exact") {
  const std::string img = ScratchDir() + "/round-images-idx3-ubyte";
  const std::string lbl = ScratchDir() + "/round-labels-idx1-ubyte";
  const Dataset original = TinyDataset();
  WriteIdx(original, img, lbl);

  const Dataset loaded = LoadIdx(img, lbl);
  CHECK(loaded.Size() == 10);
  CHECK(loaded.InputDim() == 4);
  CHECK(loaded.num_classes == 3);
  CHECK(loaded.labels == original.labels);
  for (size_t i = 0; i < original.features.data.size(); ++i) {
    CHECK(loaded.features.data[i] == original.features.data[i]);
  }
}

TEST_CASE("pixel byte 255 maps to exactly 1.0") {
  const std::string img = ScratchDir() + "/ones-images-idx3-ubyte";
  const std::string lbl = ScratchDir() + "/ones-labels-idx1-ubyte";
  Dataset data = TinyDataset();
  data.features.At(0, 0) = 1.0;  // byte 255
  data.features.At(0, 1) = 0.0;  // byte 0
  WriteIdx(data, img, lbl);
  const Dataset loaded = LoadIdx(img, lbl);
  CHECK(loaded.features.At(0, 0) == 1.0);
  CHECK(loaded.features.At(0, 1) == 0.0);
}

TEST_CASE("bad magic is rejected and names the file") {
  const std::string img = ScratchDir() + "/bad-images-idx3-ubyte";
  const std::string lbl = ScratchDir() + "/bad-labels-idx1-ubyte";
  WriteIdx(TinyDataset(), img, lbl);
  // Overwrite the images magic with the labels magic (2049).
  PatchByte(img, 3, 0x01);
  try {
    LoadIdx(img, lbl);
    FAIL("expected BadMagicError");
  } catch (const BadMagicError& e) {
    CHECK(std::string(e.what()).find(img) != std::string::npos);
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }
  // Labels checked too.
  PatchByte(img, 3, 0x03);
  PatchByte(lbl, 3, 0x03);
  CHECK_THROWS_AS(LoadIdx(img, lbl), BadMagicError);
}

TEST_CASE("truncated payload is rejected with the failing offset") {
  const std::string img = ScratchDir() + "/trunc-images-idx3-ubyte";
  const std::string lbl = ScratchDir() + "/trunc-labels-idx1-ubyte";
  WriteIdx(TinyDataset(), img, lbl);
  std::filesystem::resize_file(img, 16 + 15);  // header + under half a row
  try {
    LoadIdx(img, lbl);
    FAIL("expected TruncatedFileError");
  } catch (const TruncatedFileError& e) {
    CHECK(std::string(e.what()).find(img) != std::string::npos);
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  CHECK_THROWS_AS(LoadIdx(ScratchDir() + "/missing", lbl),
                  TruncatedFileError);
}

TEST_CASE("image/label count mismatch is rejected") {
  const std::string img = ScratchDir() + "/mis-images-idx3-ubyte";
  const std::string lbl = ScratchDir() + "/mis-labels-idx1-ubyte";
  const std::string lbl2 = ScratchDir() + "/mis2-labels-idx1-ubyte";
  WriteIdx(TinyDataset(), img, lbl);
  Dataset bigger = TinyDataset();
  bigger.features = Matrix(12, 4);
  bigger.labels.assign(12, 0);
  bigger.num_classes = 3;
  WriteIdx(bigger, ScratchDir() + "/mis2-images-idx3-ubyte", lbl2);
  CHECK_THROWS_AS(LoadIdx(img, lbl2), CountMismatchError);
}

TEST_CASE("synthetic blobs are deterministic and balanced") {
  const Dataset a = SyntheticBlobs(103, 5, 4, 0.3, 42);
  const Dataset b = SyntheticBlobs(103, 5, 4, 0.3, 42);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);

  std::vector<int> counts(4, 0);
  for (int32_t y : a.labels) counts[y]++;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);

  const Dataset c = SyntheticBlobs(103, 5, 4, 0.3, 43);
  CHECK(a.features.data != c.features.data);
}

TEST_CASE("zero spread collapses clusters onto their centers") {
  const Dataset data = SyntheticBlobs(40, 3, 4, 0.0, 7);
  // All samples of a class coincide, so nearest-centroid is perfect.
  std::vector<std::vector<double>> centroid(4, std::vector<double>(3, 0.0));
  std::vector<int> counts(4, 0);
  for (int64_t i = 0; i < data.Size(); ++i) {
    const auto row = data.features.Row(i);
    for (int64_t j = 0; j < 3; ++j) centroid[data.labels[i]][j] += row[j];
    counts[data.labels[i]]++;
  }
  for (int c = 0; c < 4; ++c) {
    for (int64_t j = 0; j < 3; ++j) centroid[c][j] /= counts[c];
  }
  for (int64_t i = 0; i < data.Size(); ++i) {
    int best = -1;
    double best_d = 1e300;
    for (int c = 0; c < 4; ++c) {
      double dist = 0.0;
      for (int64_t j = 0; j < 3; ++j) {
        const double dv = data.features.At(i, j) - centroid[c][j];
        dist += dv * dv;
      }
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    CHECK(best == data.labels[i]);
  }
}

TEST_CASE("blob input validation") {
  CHECK_THROWS_AS(SyntheticBlobs(1, 2, 2, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticBlobs(10, 2, 1, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticBlobs(10, 0, 2, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticBlobs(10, 2, 2, -0.1, 0), std::invalid_argument);
}

TEST_CASE("subset split partitions without loss or overlap") {
  const Dataset data = SyntheticBlobs(50, 3, 2, 0.2, 9);
  const auto [train, test] = SubsetSplit(data, 30, 20, 5);
  CHECK(train.Size() == 30);
  CHECK(test.Size() == 20);
  CHECK(train.split == "train");
  CHECK(test.split == "test");
  CHECK(train.num_classes == data.num_classes);

  // Every source row appears exactly once across the two splits.
  const auto key = [&](const Dataset& d, int64_t i) {
    std::string k = std::to_string(d.labels[i]);
    for (double v : d.features.Row(i)) k += "," + std::to_string(v);
    return k;
  };
  std::multiset<std::string> seen;
  for (int64_t i = 0; i < train.Size(); ++i) seen.insert(key(train, i));
  for (int64_t i = 0; i < test.Size(); ++i) seen.insert(key(test, i));
  std::multiset<std::string> expected;
  for (int64_t i = 0; i < data.Size(); ++i) expected.insert(key(data, i));
  CHECK(seen == expected);
}

TEST_CASE("subset split is deterministic in its seed") {
  const Dataset data = SyntheticBlobs(60, 4, 3, 0.2, 11);
  const auto [a_train, a_test] = SubsetSplit(data, 40, 20, 123);
  const auto [b_train, b_test] = SubsetSplit(data, 40, 20, 123);
  CHECK(a_train.features.data == b_train.features.data);
  CHECK(a_test.labels == b_test.labels);
  const auto [c_train, c_test] = SubsetSplit(data, 40, 20, 124);
  CHECK(a_train.features.data != c_train.features.data);
}

TEST_CASE("subset split rejects oversized requests") {
  const Dataset data = SyntheticBlobs(50, 3, 2, 0.2, 9);
  CHECK_THROWS_AS(SubsetSplit(data, 40, 20, 5), std::invalid_argument);
  CHECK_THROWS_AS(SubsetSplit(data, -1, 10, 5), std::invalid_argument);
}
