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

#ifndef VISION_DETECTOR_HPP_
#define VISION_DETECTOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vision/config.hpp"
#include "vision/ops.hpp"
#include "vision/preprocess.hpp"
#include "vision/tensor.hpp"

namespace vision {

/// Prior box size in input-image pixels.
struct Anchor {
  double p_w = 1.0;
  double p_h = 1.0;
};

/// Center-size box in input-image pixels with objectness p_c.
struct BoundingBox {
  double b_x = 0.0;
  double b_y = 0.0;
  double b_w = 1.0;
  double b_h = 1.0;
  double p_c = 0.0;

  double left() const { return b_x - b_w / 2.0; }
  double right() const { return b_x + b_w / 2.0; }
  double top() const { return b_y - b_h / 2.0; }
  double bottom() const { return b_y + b_h / 2.0; }

  static BoundingBox from_corners(double x0, double y0, double x1, double y1, double p_c = 1.0) {
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0, p_c};
  }
};

enum class Position { Left, Front, Right };

inline const char* to_string(Position p) {
  switch (p) {
    case Position::Left: return "left";
    case Position::Right: return "right";
    default: return "front";
  }
}

inline Position parse_position(const std::string& s) {
  if (s == "left") return Position::Left;
  if (s == "right") return Position::Right;
  if (s == "front") return Position::Front;
  throw ConfigError("unknown position '" + s + "'");
}

struct Detection {
  BoundingBox box;
  std::size_t class_id = 0;
  std::string class_name;
  double score = 0.0;
  Position position = Position::Front;
};

/// One decoded anchor slot: geometry plus independent per-class probabilities.
struct DecodedBox {
  BoundingBox box;
  std::vector<double> class_probs;
  std::size_t cell_x = 0;
  std::size_t cell_y = 0;
  std::size_t anchor = 0;
  std::size_t stride = 0;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Keeps decoded centers strictly inside their cell even when the logit saturates.
constexpr double kCenterCap = 1.0 - 1e-9;

}  // namespace detail

/**
 * Decodes a [B*(5+C), S, S] YOLO head. Channel block b holds, for anchor b,
 * (t_x, t_y, t_w, t_h, t_o, class logits...). Per cell (c_x, c_y):
 *
 *   b_x = (sigmoid(t_x) + c_x) * stride      b_w = p_w * exp(t_w)
 *   b_y = (sigmoid(t_y) + c_y) * stride      b_h = p_h * exp(t_h)
 *   p_c = sigmoid(t_o)                        class probs = sigmoid(logits)
 *
 * Output order is row-major over cells, anchors innermost.
 */
inline std::vector<DecodedBox> decode_predictions(const Tensor<float>& head, std::span<const Anchor> anchors,
                                                  std::size_t stride, std::size_t input_size) {
  if (anchors.empty()) throw ShapeError("decode_predictions: no anchors");
  if (head.rank() != 3) throw ShapeError("decode_predictions: head must be [B*(5+C),S,S], got " + shape_str(head.shape()));
  const std::size_t b = anchors.size();
  const std::size_t channels = head.dim(0);
  const std::size_t s = head.dim(1);
  if (head.dim(2) != s) throw ShapeError("decode_predictions: head grid must be square, got " + shape_str(head.shape()));
  if (channels % b != 0 || channels / b < 6)
    throw ShapeError("decode_predictions: " + std::to_string(channels) + " channels is not B*(5+C) for B=" +
                     std::to_string(b));
  if (stride == 0 || s * stride != input_size)
    throw ShapeError("decode_predictions: grid " + std::to_string(s) + " x stride " + std::to_string(stride) +
                     " != input size " + std::to_string(input_size));
  for (const auto& a : anchors)
    if (!(a.p_w > 0.0) || !(a.p_h > 0.0)) throw ConfigError("decode_predictions: anchor sizes must be positive");
  require_finite(head, "decode_predictions");

  const std::size_t per = channels / b;
  const std::size_t classes = per - 5;
  const std::size_t plane = s * s;
  auto t = head.data();
  const auto st = static_cast<double>(stride);
  std::vector<DecodedBox> out;
  out.reserve(plane * b);
  for (std::size_t cy = 0; cy < s; ++cy)
    for (std::size_t cx = 0; cx < s; ++cx)
      for (std::size_t a = 0; a < b; ++a) {
        const std::size_t base = a * per * plane + cy * s + cx;
        auto ch = [&](std::size_t k) { return static_cast<double>(t[base + k * plane]); };
        DecodedBox d;
        d.box.b_x = (std::min(detail::sigmoid(ch(0)), detail::kCenterCap) + static_cast<double>(cx)) * st;
        d.box.b_y = (std::min(detail::sigmoid(ch(1)), detail::kCenterCap) + static_cast<double>(cy)) * st;
        d.box.b_w = anchors[a].p_w * std::exp(ch(2));
        d.box.b_h = anchors[a].p_h * std::exp(ch(3));
        d.box.p_c = detail::sigmoid(ch(4));
        d.class_probs.resize(classes);
        for (std::size_t c = 0; c < classes; ++c) d.class_probs[c] = detail::sigmoid(ch(5 + c));
        d.cell_x = cx;
        d.cell_y = cy;
        d.anchor = a;
        d.stride = stride;
        out.push_back(std::move(d));
      }
  return out;
}

/// Intersection over union of two center-size boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!(a.b_w > 0.0) || !(a.b_h > 0.0) || !(b.b_w > 0.0) || !(b.b_h > 0.0))
    throw std::invalid_argument("iou: box width and height must be positive");
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.b_w * a.b_h + b.b_w * b.b_h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Left third, right third, or front (boundaries count as front).
inline Position classify_position(const BoundingBox& box, double image_width) {
  if (3.0 * box.b_x < image_width) return Position::Left;
  if (3.0 * box.b_x > 2.0 * image_width) return Position::Right;
  return Position::Front;
}

/// Best class per box; score = p_c * max class probability, ties to the lower class id.
inline std::vector<Detection> to_detections(std::span<const DecodedBox> decoded,
                                            std::span<const std::string> class_names, double image_width) {
  std::vector<Detection> out;
  out.reserve(decoded.size());
  for (const auto& d : decoded) {
    if (d.class_probs.size() != class_names.size())
      throw ShapeError("to_detections: head predicts " + std::to_string(d.class_probs.size()) +
                       " classes but the class list has " + std::to_string(class_names.size()));
    std::size_t best = 0;
    for (std::size_t c = 1; c < d.class_probs.size(); ++c)
      if (d.class_probs[c] > d.class_probs[best]) best = c;
    out.push_back({d.box, best, class_names[best], d.box.p_c * d.class_probs[best],
                   classify_position(d.box, image_width)});
  }
  return out;
}

/// Deterministic ranking: score descending, then class id, then b_x ascending.
inline bool detection_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.class_id != b.class_id) return a.class_id < b.class_id;
  return a.box.b_x < b.box.b_x;
}

/**
 * Drops detections scoring below conf_threshold, then greedily keeps the best
 * remaining box per class and suppresses same-class boxes whose IoU with a
 * kept box exceeds iou_threshold. Output is ranked by detection_before.
 */
inline std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold, double conf_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0) || !(conf_threshold >= 0.0 && conf_threshold <= 1.0))
    throw std::invalid_argument("nms: thresholds must lie in [0,1]");
  std::vector<Detection> ranked;
  for (const auto& d : dets)
    if (d.score >= conf_threshold) ranked.push_back(d);
  std::stable_sort(ranked.begin(), ranked.end(), detection_before);

  std::vector<Detection> kept;
  for (const auto& cand : ranked) {
    bool suppressed = false;
    for (const auto& k : kept)
      if (k.class_id == cand.class_id && iou(k.box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

struct AnchorCensus {
  std::vector<std::size_t> per_stride;
  std::size_t total = 0;
};

/// Anchor boxes per scale: (input_size / stride)^2 * boxes_per_cell.
inline AnchorCensus anchor_census(std::size_t input_size, std::size_t boxes_per_cell,
                                  std::span<const std::size_t> strides) {
  AnchorCensus c;
  for (auto s : strides) {
    if (s == 0 || input_size % s != 0)
      throw std::invalid_argument("anchor_census: input size " + std::to_string(input_size) +
                                  " is not divisible by stride " + std::to_string(s));
    const std::size_t grid = input_size / s;
    c.per_stride.push_back(grid * grid * boxes_per_cell);
    c.total += c.per_stride.back();
  }
  return c;
}

enum class Mode { Indoor, Outdoor };

inline const char* to_string(Mode m) { return m == Mode::Indoor ? "indoor" : "outdoor"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "indoor") return Mode::Indoor;
  if (s == "outdoor") return Mode::Outdoor;
  throw ConfigError("unknown mode '" + s + "' (expected indoor or outdoor)");
}

struct ModeConfig {
  Mode mode = Mode::Outdoor;
  std::set<std::string> allowed_classes;
};

/// Keeps detections whose class is allowed in the current mode, preserving order.
inline std::vector<Detection> mode_filter(std::span<const Detection> dets, const ModeConfig& cfg) {
  std::vector<Detection> out;
  for (const auto& d : dets)
    if (cfg.allowed_classes.contains(d.class_name)) out.push_back(d);
  return out;
}

/// The 80 COCO category names in canonical order.
inline const std::vector<std::string>& coco_class_names() {
  static const std::vector<std::string> names = {
      "person",        "bicycle",      "car",           "motorcycle",    "airplane",     "bus",
      "train",         "truck",        "boat",          "traffic light", "fire hydrant", "stop sign",
      "parking meter", "bench",        "bird",          "cat",           "dog",          "horse",
      "sheep",         "cow",          "elephant",      "bear",          "zebra",        "giraffe",
      "backpack",      "umbrella",     "handbag",       "tie",           "suitcase",     "frisbee",
      "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat", "baseball glove",
      "skateboard",    "surfboard",    "tennis racket", "bottle",        "wine glass",   "cup",
      "fork",          "knife",        "spoon",         "bowl",          "banana",       "apple",
      "sandwich",      "orange",       "broccoli",      "carrot",        "hot dog",      "pizza",
      "donut",         "cake",         "chair",         "couch",         "potted plant", "bed",
      "dining table",  "toilet",       "tv",            "laptop",        "mouse",        "remote",
      "keyboard",      "cell phone",   "microwave",     "oven",          "toaster",      "sink",
      "refrigerator",  "book",         "clock",         "vase",          "scissors",     "teddy bear",
      "hair drier",    "toothbrush"};
  return names;
}

namespace detail {

inline std::set<std::string> coco_except(std::initializer_list<const char*> excluded) {
  std::set<std::string> out(coco_class_names().begin(), coco_class_names().end());
  for (const char* e : excluded) out.erase(e);
  return out;
}

}  // namespace detail

/// Built-in partitions: vehicles, street furniture and large animals are not indoor obstacles;
/// small tabletop and kitchen objects are not outdoor obstacles.
inline ModeConfig default_mode_config(Mode mode) {
  if (mode == Mode::Indoor)
    return {mode, detail::coco_except({"car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
                                       "traffic light", "fire hydrant", "stop sign", "parking meter", "horse",
                                       "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "skis", "snowboard",
                                       "kite", "surfboard"})};
  return {mode, detail::coco_except({"book", "fork", "knife", "spoon", "bowl", "cup", "wine glass", "toothbrush",
                                     "hair drier", "remote", "keyboard", "mouse", "cell phone", "laptop", "scissors",
                                     "microwave", "oven", "toaster", "sink", "refrigerator", "bed", "toilet", "tv",
                                     "vase", "teddy bear", "clock"})};
}

/// Reads `indoor = a, b, ...` / `outdoor = ...` and validates names against the class list.
inline ModeConfig load_mode_config(const KeyValueFile& kv, Mode mode, std::span<const std::string> class_names) {
  auto value = kv.get(to_string(mode));
  if (!value) throw ConfigError(kv.source() + ": no '" + to_string(mode) + "' class list");
  ModeConfig cfg{mode, {}};
  const std::set<std::string> known(class_names.begin(), class_names.end());
  for (auto& name : split(*value, ',')) {
    if (!known.contains(name)) throw ConfigError(kv.source() + ": unknown class '" + name + "' in " + to_string(mode));
    cfg.allowed_classes.insert(name);
  }
  return cfg;
}

/// One class name per line; blank lines ignored.
inline std::vector<std::string> load_class_names(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read class list " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(is, line))
    if (auto t = trim(line); !t.empty()) names.push_back(t);
  if (names.empty()) throw ConfigError("class list " + path + " is empty");
  return names;
}

/// Anchor priors per stride, e.g. `stride32 = 116,90 156,198 373,326`.
using AnchorSet = std::map<std::size_t, std::vector<Anchor>, std::greater<>>;

inline AnchorSet parse_anchors(const KeyValueFile& kv) {
  AnchorSet set;
  for (const auto& e : kv.entries()) {
    if (e.key.rfind("stride", 0) != 0) continue;
    std::size_t stride = 0;
    try {
      stride = std::stoul(e.key.substr(6));
    } catch (const std::exception&) {
      throw ConfigError(kv.source() + ":" + std::to_string(e.line) + ": bad stride key '" + e.key + "'");
    }
    std::vector<Anchor> anchors;
    std::istringstream is(e.value);
    std::string pair;
    while (is >> pair) {
      auto wh = split(pair, ',');
      if (wh.size() != 2) throw ConfigError(kv.source() + ":" + std::to_string(e.line) + ": bad anchor '" + pair + "'");
      Anchor a{detail::parse_real(wh[0], kv.source()), detail::parse_real(wh[1], kv.source())};
      if (!(a.p_w > 0.0) || !(a.p_h > 0.0)) throw ConfigError(kv.source() + ": anchor sizes must be positive");
      anchors.push_back(a);
    }
    if (anchors.empty() || stride == 0) throw ConfigError(kv.source() + ": empty anchor list for " + e.key);
    set[stride] = std::move(anchors);
  }
  if (set.empty()) throw ConfigError(kv.source() + ": no strideN anchor entries");
  return set;
}

/// The standard YOLOv3 COCO priors at strides 32, 16 and 8.
inline AnchorSet default_anchors() {
  return {{32, {{116, 90}, {156, 198}, {373, 326}}},
          {16, {{30, 61}, {62, 45}, {59, 119}}},
          {8, {{10, 13}, {16, 30}, {33, 23}}}};
}

}  // namespace vision

#endif  // VISION_DETECTOR_HPP_
