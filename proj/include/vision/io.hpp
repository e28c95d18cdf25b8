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

#ifndef VISION_IO_HPP_
#define VISION_IO_HPP_

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vision/depth.hpp"
#include "vision/detector.hpp"
#include "vision/preprocess.hpp"
#include "vision/stereo_data.hpp"
#include "vision/tensor.hpp"

namespace vision {

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DecodeError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("short write to " + path.string());
}

// Netpbm header: magic, then whitespace/comment separated integers, then one whitespace byte.
class PnmHeader {
 public:
  PnmHeader(const std::vector<unsigned char>& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  std::string magic() {
    if (bytes_.size() < 2) throw DecodeError(name_ + ": not a netpbm file");
    pos_ = 2;
    return std::string(bytes_.begin(), bytes_.begin() + 2);
  }

  std::size_t number() {
    skip_space();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw DecodeError(name_ + ": header value too large");
    }
    if (digits == 0) throw DecodeError(name_ + ": malformed header");
    return v;
  }

  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw DecodeError(name_ + ": malformed header");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

inline std::uint32_t float_bits_le(float v) {
  auto u = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
  return u;
}

inline float float_from_le(const unsigned char* p) {
  std::uint32_t u;
  std::memcpy(&u, p, 4);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
  return std::bit_cast<float>(u);
}

inline void append_floats_le(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t u = float_bits_le(values[i]);
    std::memcpy(out.data() + start + i * 4, &u, 4);
  }
}

}  // namespace detail

/// Binary PPM (P6, maxval 255) into a [3,H,W] tensor scaled to [0,1].
inline Tensor<float> load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::PnmHeader hdr(bytes, path.string());
  if (hdr.magic() != "P6") throw DecodeError(path.string() + ": only binary PPM (P6) is supported");
  const std::size_t w = hdr.number();
  const std::size_t h = hdr.number();
  const std::size_t maxval = hdr.number();
  if (w == 0 || h == 0) throw DecodeError(path.string() + ": empty image");
  if (maxval != 255) throw DecodeError(path.string() + ": unsupported maxval " + std::to_string(maxval));
  const std::size_t start = hdr.payload_start();
  const std::size_t plane = w * h;
  if (bytes.size() - start < 3 * plane)
    throw DecodeError(path.string() + ": truncated payload (" + std::to_string(bytes.size() - start) + " of " +
                      std::to_string(3 * plane) + " bytes)");
  std::vector<float> v(3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) v[c * plane + i] = static_cast<float>(bytes[start + 3 * i + c]) / 255.0f;
  return Tensor<float>({3, h, w}, std::move(v));
}

/// Writes a [3,H,W] tensor in [0,1] as P6 with the canonical "P6\nW H\n255\n" header.
inline void save_image(const Tensor<float>& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("save_image: expected [3,H,W], got " + shape_str(image.shape()));
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  const std::size_t plane = h * w;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t start = out.size();
  out.resize(start + 3 * plane);
  auto v = image.data();
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const float x = std::isfinite(v[c * plane + i]) ? v[c * plane + i] : 0.0f;
      out[start + 3 * i + c] = static_cast<char>(std::lround(std::clamp(x, 0.0f, 1.0f) * 255.0f));
    }
  detail::write_file(path, out);
}

/// Bilinear resampling of a [C,H,W] tensor with pixel-center alignment.
inline Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3) throw ShapeError("resize: expected [C,H,W], got " + shape_str(image.shape()));
  const std::size_t c = image.dim(0);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (h == height && w == width) return image.detach();
  std::vector<float> out(c * height * width);
  auto in = image.data();
  const double sy = static_cast<double>(h) / static_cast<double>(height);
  const double sx = static_cast<double>(w) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ay = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double ax = fx - static_cast<double>(x0);
      for (std::size_t k = 0; k < c; ++k) {
        const float* p = in.data() + k * h * w;
        const double top = p[y0 * w + x0] * (1 - ax) + p[y0 * w + x1] * ax;
        const double bot = p[y1 * w + x0] * (1 - ax) + p[y1 * w + x1] * ax;
        out[(k * height + y) * width + x] = static_cast<float>(top * (1 - ay) + bot * ay);
      }
    }
  }
  return Tensor<float>({c, height, width}, std::move(out));
}

/// Raw little-endian float32 payload after a one-line text header of the dimensions.
inline void save_raw_tensor(const Tensor<float>& t, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < t.rank(); ++i) out += (i ? " " : "") + std::to_string(t.dim(i));
  out += '\n';
  detail::append_floats_le(out, t.data());
  detail::write_file(path, out);
}

inline Tensor<float> load_raw_tensor(const std::filesystem::path& path, std::size_t expected_rank) {
  const auto bytes = detail::read_file(path);
  auto nl = std::find(bytes.begin(), bytes.end(), '\n');
  if (nl == bytes.end()) throw DecodeError(path.string() + ": missing dimension header");
  std::istringstream hdr(std::string(bytes.begin(), nl));
  Shape shape;
  std::size_t d = 0;
  while (hdr >> d) shape.push_back(d);
  if (!hdr.eof() || shape.size() != expected_rank || std::count(shape.begin(), shape.end(), 0u))
    throw DecodeError(path.string() + ": header must hold " + std::to_string(expected_rank) + " positive dimensions");
  const std::size_t start = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t n = shape_numel(shape);
  if (bytes.size() - start != 4 * n)
    throw DecodeError(path.string() + ": payload has " + std::to_string(bytes.size() - start) + " bytes, expected " +
                      std::to_string(4 * n));
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = detail::float_from_le(bytes.data() + start + 4 * i);
  return Tensor<float>(std::move(shape), std::move(v));
}

/// Flat float map of a [1,H,W] tensor: header "H W", then H*W little-endian floats.
inline void save_float_map(const Tensor<float>& map, const std::filesystem::path& path) {
  if (map.rank() != 3 || map.dim(0) != 1) throw ShapeError("save_float_map: expected [1,H,W]");
  save_raw_tensor(Tensor<float>({map.dim(1), map.dim(2)}, std::vector<float>(map.data().begin(), map.data().end())),
                  path);
}

inline Tensor<float> load_float_map(const std::filesystem::path& path) {
  auto t = load_raw_tensor(path, 2);
  return Tensor<float>({1, t.dim(0), t.dim(1)}, std::vector<float>(t.data().begin(), t.data().end()));
}

/// YOLO head stub: header "C S S", then the [C,S,S] floats.
inline Tensor<float> load_head_tensor(const std::filesystem::path& path) { return load_raw_tensor(path, 3); }

/**
 * 16-bit binary PGM (P5, maxval 65535, big-endian samples) of round(v * scale),
 * clamped to [0, 65535]; non-finite values are written as 0. The scale factor
 * goes to "<path>.txt" as the single line "scale <factor>".
 */
inline void save_pgm16(const Tensor<float>& map, double scale, const std::filesystem::path& path) {
  if (map.rank() != 3 || map.dim(0) != 1) throw ShapeError("save_pgm16: expected [1,H,W]");
  if (!(scale > 0.0)) throw std::invalid_argument("save_pgm16: scale must be positive");
  const std::size_t h = map.dim(1);
  const std::size_t w = map.dim(2);
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  for (float v : map.data()) {
    const double s = std::isfinite(v) ? std::clamp(std::round(v * scale), 0.0, 65535.0) : 0.0;
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<char>(u >> 8));
    out.push_back(static_cast<char>(u & 0xff));
  }
  detail::write_file(path, out);
  detail::write_file(path.string() + ".txt", "scale " + detail::format_real(scale) + "\n");
}

/// Reads a P5 PGM (8 or 16 bit) and divides by `scale`; [1,H,W].
inline Tensor<float> load_pgm(const std::filesystem::path& path, double scale = 1.0) {
  const auto bytes = detail::read_file(path);
  detail::PnmHeader hdr(bytes, path.string());
  if (hdr.magic() != "P5") throw DecodeError(path.string() + ": only binary PGM (P5) is supported");
  const std::size_t w = hdr.number();
  const std::size_t h = hdr.number();
  const std::size_t maxval = hdr.number();
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw DecodeError(path.string() + ": bad header");
  const std::size_t start = hdr.payload_start();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() - start < bps * w * h) throw DecodeError(path.string() + ": truncated payload");
  std::vector<float> v(w * h);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t raw = bps == 2 ? (std::size_t{bytes[start + 2 * i]} << 8) | bytes[start + 2 * i + 1]
                                     : bytes[start + i];
    v[i] = static_cast<float>(static_cast<double>(raw) / scale);
  }
  return Tensor<float>({1, h, w}, std::move(v));
}

/// Scale factor recorded next to a 16-bit PGM by save_pgm16 (1 when absent).
inline double load_pgm_scale(const std::filesystem::path& path) {
  std::ifstream is(path.string() + ".txt");
  if (!is) return 1.0;
  std::string key;
  std::string value;
  if (!(is >> key >> value) || key != "scale") throw DecodeError(path.string() + ".txt: expected 'scale <factor>'");
  return detail::parse_real(value, path.string() + ".txt");
}

/**
 * Weights file: a text manifest followed by the raw payload.
 *
 *   VISIONW 1 <count>
 *   <name> <d0>x<d1>x... <byte offset>      (one line per tensor, save order)
 *   <little-endian float32 payload>
 *
 * Offsets are relative to the first payload byte and must be contiguous.
 */
using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;

inline std::string encode_weights(const NamedTensors& params) {
  std::string manifest = "VISIONW 1 " + std::to_string(params.size()) + "\n";
  std::string payload;
  for (const auto& [name, t] : params) {
    if (name.empty() || std::any_of(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); }))
      throw std::invalid_argument("save_weights: parameter names must be non-empty without whitespace");
    for (const auto& [other, _] : params)
      if (&other != &name && other == name) throw std::invalid_argument("save_weights: duplicate name " + name);
    std::string dims;
    for (std::size_t i = 0; i < t.rank(); ++i) dims += (i ? "x" : "") + std::to_string(t.dim(i));
    manifest += name + " " + dims + " " + std::to_string(payload.size()) + "\n";
    detail::append_floats_le(payload, t.data());
  }
  return manifest + payload;
}

inline void save_weights(const NamedTensors& params, const std::filesystem::path& path) {
  detail::write_file(path, encode_weights(params));
}

inline NamedTensors decode_weights(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto next_line = [&]() {
    auto nl = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), '\n');
    if (nl == bytes.end()) throw IntegrityError(name + ": manifest ends unexpectedly");
    std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), nl);
    pos = static_cast<std::size_t>(nl - bytes.begin()) + 1;
    return line;
  };
  std::istringstream head(next_line());
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(head >> magic >> version >> count) || magic != "VISIONW" || version != 1)
    throw IntegrityError(name + ": not a VISIONW 1 weights file");

  struct Item {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Item> items;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream ls(next_line());
    Item it;
    std::string dims;
    if (!(ls >> it.name >> dims >> it.offset)) throw IntegrityError(name + ": bad manifest line " + std::to_string(i + 2));
    for (const auto& d : split(dims, 'x')) {
      std::size_t v = 0;
      try {
        v = std::stoul(d);
      } catch (const std::exception&) {
        throw IntegrityError(name + ": bad dimensions '" + dims + "'");
      }
      if (v == 0) throw IntegrityError(name + ": zero dimension in '" + dims + "'");
      it.shape.push_back(v);
    }
    if (it.shape.empty()) throw IntegrityError(name + ": empty dimensions for " + it.name);
    if (it.offset != expected)
      throw IntegrityError(name + ": offset of " + it.name + " is " + std::to_string(it.offset) + ", expected " +
                           std::to_string(expected));
    expected += 4 * shape_numel(it.shape);
    items.push_back(std::move(it));
  }
  const std::size_t payload = bytes.size() - pos;
  if (payload != expected)
    throw IntegrityError(name + ": payload has " + std::to_string(payload) + " bytes, manifest claims " +
                         std::to_string(expected));
  NamedTensors out;
  for (auto& it : items) {
    std::vector<float> v(shape_numel(it.shape));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::float_from_le(bytes.data() + pos + it.offset + 4 * i);
    out.emplace_back(std::move(it.name), Tensor<float>(std::move(it.shape), std::move(v)));
  }
  return out;
}

inline NamedTensors load_weights(const std::filesystem::path& path) {
  return decode_weights(detail::read_file(path), path.string());
}

/// One JSON object per detection, e.g.
/// {"class":"chair","score":0.9,"box":[x,y,w,h],"position":"front"}.
inline std::string detection_record(const Detection& d) {
  nlohmann::ordered_json j;
  j["class"] = d.class_name;
  j["class_id"] = d.class_id;
  j["score"] = d.score;
  j["box"] = {d.box.b_x, d.box.b_y, d.box.b_w, d.box.b_h};
  j["objectness"] = d.box.p_c;
  j["position"] = to_string(d.position);
  return j.dump();
}

inline Detection parse_detection_record(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    Detection d;
    d.class_name = j.at("class").get<std::string>();
    d.class_id = j.at("class_id").get<std::size_t>();
    d.score = j.at("score").get<double>();
    const auto& b = j.at("box");
    d.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>(),
             j.at("objectness").get<double>()};
    d.position = parse_position(j.at("position").get<std::string>());
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("bad detection record: ") + e.what());
  }
}

inline void save_detections(std::span<const Detection> dets, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : dets) out += detection_record(d) + "\n";
  detail::write_file(path, out);
}

inline std::vector<Detection> load_detections(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DecodeError("cannot open " + path.string());
  std::vector<Detection> out;
  std::string line;
  while (std::getline(is, line))
    if (!trim(line).empty()) out.push_back(parse_detection_record(line));
  return out;
}

/**
 * Paired stereo directory: left views in `left/` or `image_2/`, right views
 * with the same file names in `right/` or `image_3/`, and optional disparity
 * ground truth as 16-bit PGM in `disparity/` or `disp_noc_0/` (value / 256).
 */
inline std::vector<StereoSample> load_stereo_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  auto pick = [&](std::initializer_list<const char*> names) -> fs::path {
    for (const char* n : names)
      if (fs::is_directory(root / n)) return root / n;
    return {};
  };
  const fs::path left_dir = pick({"left", "image_2"});
  const fs::path right_dir = pick({"right", "image_3"});
  const fs::path disp_dir = pick({"disparity", "disp_noc_0"});
  if (left_dir.empty() || right_dir.empty())
    throw ConfigError(root.string() + ": expected left/ and right/ (or image_2/ and image_3/) subdirectories");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(left_dir))
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path().filename());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError(left_dir.string() + ": no .ppm images");
  std::vector<StereoSample> out;
  for (const auto& f : files) {
    StereoSample s{load_image(left_dir / f), load_image(right_dir / f), std::nullopt};
    require_same_shape(s.left.shape(), s.right.shape(), f.string().c_str());
    if (!disp_dir.empty()) {
      auto d = disp_dir / f;
      d.replace_extension(".pgm");
      if (fs::exists(d)) s.disparity = load_pgm(d, 256.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace vision

#endif  // VISION_IO_HPP_
