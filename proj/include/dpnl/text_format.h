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

#ifndef DPNL_TEXT_FORMAT_H_
#define DPNL_TEXT_FORMAT_H_

#include <charconv>
#include <cstdint>
#include <string>

namespace dpnl {

// Version line written at the top of every CSV the toolkit emits.
inline constexpr const char* kCsvVersionLine = "# dp-noise-ledger v1";

// Shortest decimal representation that round-trips the exact double, so
// emitted files are byte-stable across reruns and values survive a parse.
inline std::string FormatDouble(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string FormatInt(int64_t v) { return std::to_string(v); }

}  // namespace dpnl

#endif  // DPNL_TEXT_FORMAT_H_
