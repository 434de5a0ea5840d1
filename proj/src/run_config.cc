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

#include "dpnl/run_config.h"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dpnl {
namespace {

std::string Trim(const std::string& s) {
  const size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

RunConfig RunConfig::ParseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseString(buffer.str());
}

RunConfig RunConfig::ParseString(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected `key = value`, got: " + line);
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    if (config.values_.count(key)) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": duplicate key `" + key + "`");
    }
    config.values_[key] = value;
  }
  return config;
}

bool RunConfig::Has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string RunConfig::GetString(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("missing required config key `" + key + "`");
  }
  consumed_.insert(key);
  return it->second;
}

std::string RunConfig::GetStringOr(const std::string& key,
                                   const std::string& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  const std::string value = it == values_.end() ? fallback : it->second;
  return value;
}

double RunConfig::GetDouble(const std::string& key) const {
  const std::string raw = GetString(key);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(raw.c_str(), &end);
  if (errno != 0 || end == raw.c_str() || *end != '\0') {
    throw ConfigError("config key `" + key + "`: not a number: " + raw);
  }
  return value;
}

double RunConfig::GetDoubleOr(const std::string& key, double fallback) {
  consumed_.insert(key);
  return Has(key) ? GetDouble(key) : fallback;
}

int64_t RunConfig::GetInt(const std::string& key) const {
  const std::string raw = GetString(key);
  char* end = nullptr;
  errno = 0;
  const long long value = std::strtoll(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0') {
    throw ConfigError("config key `" + key + "`: not an integer: " + raw);
  }
  return value;
}

int64_t RunConfig::GetIntOr(const std::string& key, int64_t fallback) {
  consumed_.insert(key);
  return Has(key) ? GetInt(key) : fallback;
}

void RunConfig::RejectUnknownKeys() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw ConfigError("unknown config keys: " + unknown);
  }
}

void RunConfig::SetResolved(const std::string& key, const std::string& value) {
  resolved_[key] = value;
}

std::string RunConfig::ResolvedText() const {
  std::string text;
  for (const auto& [key, value] : resolved_) {
    text += key + " = " + value + "\n";
  }
  return text;
}

}  // namespace dpnl
