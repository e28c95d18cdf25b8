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

#ifndef VISION_ASSIST_HPP_
#define VISION_ASSIST_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vision/depth.hpp"
#include "vision/detector.hpp"

namespace vision {

struct Obstacle {
  std::string label;
  double depth_m = std::numeric_limits<double>::infinity();
  Position position = Position::Front;
  double score = 0.0;
};

/// Rendered sentence, its audio tokens in playback order, and the resolved files.
struct Announcement {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> audio_paths;
};

struct AssistConfig {
  double near_threshold_m = 3.0;
  std::size_t max_announced = 3;

  void validate() const {
    if (!(near_threshold_m > 0.0)) throw ConfigError("near threshold must be positive");
  }
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/**
 * Attaches to each detection the median of the finite depths inside its box.
 * Boxes must already be in depth-map pixel coordinates. A box with no finite
 * depth gets +infinity; a box entirely outside the map is skipped.
 */
inline std::vector<Obstacle> fuse_depth(std::span<const Detection> dets, const DepthMap& depth) {
  const auto h = static_cast<double>(depth.height());
  const auto w = static_cast<double>(depth.width());
  auto z = depth.values.data();
  std::vector<Obstacle> out;
  for (const auto& d : dets) {
    const double x0 = std::max(0.0, std::floor(d.box.left()));
    const double x1 = std::min(w, std::ceil(d.box.right()));
    const double y0 = std::max(0.0, std::floor(d.box.top()));
    const double y1 = std::min(h, std::ceil(d.box.bottom()));
    if (!(x0 < x1) || !(y0 < y1)) {
      warn("fuse_depth: box of '" + d.class_name + "' lies outside the depth map; skipped");
      continue;
    }
    std::vector<double> inside;
    for (auto y = static_cast<std::size_t>(y0); y < static_cast<std::size_t>(y1); ++y)
      for (auto x = static_cast<std::size_t>(x0); x < static_cast<std::size_t>(x1); ++x) {
        const float v = z[y * depth.width() + x];
        if (std::isfinite(v)) inside.push_back(v);
      }
    const double m = inside.empty() ? std::numeric_limits<double>::infinity() : detail::median(std::move(inside));
    out.push_back({d.class_name, m, d.position, d.score});
  }
  return out;
}

/// Nearby obstacles only, nearest first, at most max_announced.
inline std::vector<Obstacle> proximity_filter(std::span<const Obstacle> obs, const AssistConfig& cfg) {
  cfg.validate();
  std::vector<Obstacle> out;
  for (const auto& o : obs)
    if (o.depth_m <= cfg.near_threshold_m) out.push_back(o);
  std::stable_sort(out.begin(), out.end(), [](const Obstacle& a, const Obstacle& b) { return a.depth_m < b.depth_m; });
  if (out.size() > cfg.max_announced) out.resize(cfg.max_announced);
  return out;
}

inline const char* position_phrase(Position p) {
  switch (p) {
    case Position::Left: return "to your left";
    case Position::Right: return "to your right";
    default: return "ahead";
  }
}

inline constexpr const char* kPathClear = "path clear";
inline constexpr std::size_t kMaxNumeral = 30;

/// Whole meters for the sentence: nearest integer, at least 1.
inline long spoken_meters(double depth_m) { return std::max(1L, std::lround(depth_m)); }

/**
 * Fixed grammar: "<label> <position> at <D> meters" per obstacle, clauses
 * joined by ". ", or "path clear" when nothing is near. A clause for an
 * obstacle of unknown (infinite) depth drops the distance part.
 */
inline Announcement compose_announcement(std::span<const Obstacle> obs) {
  Announcement a;
  if (obs.empty()) {
    a.text = kPathClear;
    a.tokens = {kPathClear};
    return a;
  }
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    std::string clause = o.label + " " + position_phrase(o.position);
    a.tokens.push_back(o.label);
    a.tokens.push_back(position_phrase(o.position));
    if (std::isfinite(o.depth_m)) {
      const std::string num = std::to_string(spoken_meters(o.depth_m));
      clause += " at " + num + " meters";
      a.tokens.insert(a.tokens.end(), {"at", num, "meters"});
    }
    a.text += (i ? ". " : "") + clause;
  }
  return a;
}

/// Catalog file name for a token: lowercased, spaces replaced by underscores, ".wav".
inline std::string audio_file_name(const std::string& token) {
  std::string out;
  for (unsigned char c : token) out.push_back(c == ' ' ? '_' : static_cast<char>(std::tolower(c)));
  return out + ".wav";
}

/// Resolves every token to "<catalog_dir>/<token>.wav"; the first missing file raises MissingAudio.
inline Announcement audio_lookup(Announcement ann, const std::filesystem::path& catalog_dir) {
  if (!std::filesystem::is_directory(catalog_dir))
    throw ConfigError("audio catalog " + catalog_dir.string() + " is not a directory");
  ann.audio_paths.clear();
  for (const auto& tok : ann.tokens) {
    auto p = catalog_dir / audio_file_name(tok);
    if (!std::filesystem::is_regular_file(p)) throw MissingAudio(tok);
    ann.audio_paths.push_back(p.string());
  }
  return ann;
}

/// Every token the grammar can emit for the given class list.
inline std::set<std::string> announcement_vocabulary(std::span<const std::string> class_names,
                                                     std::size_t max_numeral = kMaxNumeral) {
  std::set<std::string> v(class_names.begin(), class_names.end());
  for (auto p : {Position::Left, Position::Front, Position::Right}) v.insert(position_phrase(p));
  for (std::size_t n = 1; n <= max_numeral; ++n) v.insert(std::to_string(n));
  v.insert({"at", "meters", kPathClear});
  return v;
}

/// Writes a short silent 16 kHz mono PCM file for every token (placeholder audio).
inline void make_stub_catalog(const std::filesystem::path& dir, const std::set<std::string>& vocabulary) {
  std::filesystem::create_directories(dir);
  const std::uint32_t samples = 160;
  const std::uint32_t data_bytes = samples * 2;
  auto u32 = [](std::ofstream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [](std::ofstream& os, std::uint16_t v) {
    os.put(static_cast<char>(v & 0xff));
    os.put(static_cast<char>(v >> 8));
  };
  for (const auto& tok : vocabulary) {
    std::ofstream os(dir / audio_file_name(tok), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write audio stub for '" + tok + "'");
    os.write("RIFF", 4);
    u32(os, 36 + data_bytes);
    os.write("WAVEfmt ", 8);
    u32(os, 16);
    u16(os, 1);
    u16(os, 1);
    u32(os, 16000);
    u32(os, 32000);
    u16(os, 2);
    u16(os, 16);
    os.write("data", 4);
    u32(os, data_bytes);
    for (std::uint32_t i = 0; i < data_bytes; ++i) os.put('\0');
  }
}

/// Tokens of the vocabulary with no file in the catalog.
inline std::vector<std::string> missing_audio(const std::set<std::string>& vocabulary,
                                              const std::filesystem::path& catalog_dir) {
  std::vector<std::string> out;
  for (const auto& tok : vocabulary)
    if (!std::filesystem::is_regular_file(catalog_dir / audio_file_name(tok))) out.push_back(tok);
  return out;
}

/// m3u-style playlist of the resolved audio files.
inline void write_playlist(const Announcement& ann, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write playlist " + path.string());
  os << "#EXTM3U\n";
  for (const auto& p : ann.audio_paths) os << p << '\n';
}

}  // namespace vision

#endif  // VISION_ASSIST_HPP_
