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

#ifndef DPNL_RUN_CONFIG_H_
#define DPNL_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace dpnl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A flat `key = value` document: one assignment per line, `#` starts a
// comment, no nesting, duplicate keys rejected. This is the on-disk format
// for training runs; every run echoes its fully resolved document back into
// the output directory.
class RunConfig {
 public:
  static RunConfig ParseFile(const std::string& path);
  static RunConfig ParseString(const std::string& text);

  bool Has(const std::string& key) const;
  std::string GetString(const std::string& key) const;
  std::string GetStringOr(const std::string& key,
                          const std::string& fallback);
  double GetDouble(const std::string& key) const;
  double GetDoubleOr(const std::string& key, double fallback);
  int64_t GetInt(const std::string& key) const;
  int64_t GetIntOr(const std::string& key, int64_t fallback);

  // Throws ConfigError listing any key that was never requested through the
  // getters above. Call after all reads.
  void RejectUnknownKeys() const;

  // Records a resolved (possibly defaulted) value for the echo document.
  void SetResolved(const std::string& key, const std::string& value);

  // The fully resolved document: every consumed key with its final value,
  // sorted, one `key = value` line each.
  std::string ResolvedText() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace dpnl

#endif  // DPNL_RUN_CONFIG_H_
