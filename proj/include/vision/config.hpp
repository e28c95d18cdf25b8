// Copyright 2026 The Vision Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VISION_CONFIG_HPP_
#define VISION_CONFIG_HPP_

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vision/errors.hpp"

namespace vision {

inline std::string trim(const std::string& s) {
  auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return b < e ? std::string(b, e) : std::string();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/**
 * `key = value` text. Blank lines and lines starting with '#' are ignored;
 * keys may repeat and keep their file order.
 */
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line;
  };

  static KeyValueFile parse(std::istream& is, const std::string& source = "<config>") {
    KeyValueFile kv;
    kv.source_ = source;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      auto t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto eq = t.find('=');
      if (eq == std::string::npos || trim(t.substr(0, eq)).empty())
        throw ConfigError(source + ":" + std::to_string(n) + ": expected 'key = value'");
      kv.entries_.push_back({trim(t.substr(0, eq)), trim(t.substr(eq + 1)), n});
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    return parse(is, path);
  }

  std::optional<std::string> get(const std::string& key) const {
    std::optional<std::string> out;
    for (const auto& e : entries_)
      if (e.key == key) out = e.value;
    return out;
  }

  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (e.key == key) out.push_back(e.value);
    return out;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<Entry> entries_;
};

}  // namespace vision

#endif  // VISION_CONFIG_HPP_
