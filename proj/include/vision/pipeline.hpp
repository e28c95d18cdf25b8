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

#ifndef VISION_PIPELINE_HPP_
#define VISION_PIPELINE_HPP_

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vision/assist.hpp"
#include "vision/config.hpp"
#include "vision/depth.hpp"
#include "vision/detector.hpp"
#include "vision/io.hpp"
#include "vision/networks.hpp"
#include "vision/preprocess.hpp"

namespace vision {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// VISION_SEED when set to an unsigned integer, otherwise 42.
inline std::uint64_t seed_from_env() {
  const char* s = std::getenv("VISION_SEED");
  if (!s || !*s) return kDefaultSeed;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == std::string(s).size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("VISION_SEED must be an unsigned integer, got '") + s + "'");
}

namespace detail {

inline std::size_t parse_count(const std::string& text, const std::string& what) {
  const double v = parse_real(text, what);
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::vector<LayerSpec> parse_layers(const KeyValueFile& kv, const std::string& key) {
  std::vector<LayerSpec> out;
  for (const auto& v : kv.get_all(key)) {
    try {
      out.push_back(parse_layer(v));
    } catch (const std::exception& e) {
      throw ConfigError(kv.source() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

/**
 * Synthesis architecture file:
 *   height = 64
 *   width = 64
 *   shifts = 33
 *   layer = enc1 conv 3 16 3 2 1 elu      (encoder-decoder, in order)
 *   refine = ref1 conv 3 16 3 1 1 elu     (refinement, in order)
 * Missing layer lists fall back to the default stack for the given size.
 */
inline SynthNetConfig load_synth_config(const KeyValueFile& kv) {
  auto num = [&](const char* key, std::size_t def) {
    auto v = kv.get(key);
    return v ? detail::parse_count(*v, kv.source() + " " + key) : def;
  };
  auto cfg = SynthNetConfig::defaults(num("height", 300), num("width", 300), num("shifts", 33));
  if (auto l = detail::parse_layers(kv, "layer"); !l.empty()) cfg.encoder_decoder = std::move(l);
  if (auto l = detail::parse_layers(kv, "refine"); !l.empty()) cfg.refine = std::move(l);
  cfg.validate();
  return cfg;
}

/// Matcher architecture file: `max_disp`, `alpha`, repeated `tower = ...` and `head = ...` layers.
inline MatcherConfig load_matcher_config(const KeyValueFile& kv) {
  std::size_t max_disp = 32;
  if (auto v = kv.get("max_disp")) max_disp = detail::parse_count(*v, kv.source() + " max_disp");
  auto cfg = MatcherConfig::defaults(max_disp);
  if (auto v = kv.get("alpha")) cfg.output_alpha = detail::parse_real(*v, kv.source() + " alpha");
  if (auto l = detail::parse_layers(kv, "tower"); !l.empty()) cfg.tower = std::move(l);
  if (auto l = detail::parse_layers(kv, "head"); !l.empty()) cfg.head = std::move(l);
  cfg.validate();
  return cfg;
}

/// Loads a weights file into a network's parameter set; every parameter must be present.
inline void load_parameters(ParamSet<float>& params, const std::filesystem::path& path) {
  auto values = load_weights(path);
  if (values.size() != params.size())
    throw ConfigError(path.string() + ": holds " + std::to_string(values.size()) + " tensors, network has " +
                      std::to_string(params.size()));
  params.assign(values);
}

inline NamedTensors snapshot(const ParamSet<float>& params) {
  NamedTensors out;
  for (const auto& [name, t] : params.entries()) out.emplace_back(name, t.detach().clone());
  return out;
}

enum class Schedule { Concurrent, DetectorFirst, DepthFirst };

inline Schedule parse_schedule(const std::string& s) {
  if (s == "concurrent") return Schedule::Concurrent;
  if (s == "detector-first") return Schedule::DetectorFirst;
  if (s == "depth-first") return Schedule::DepthFirst;
  throw ConfigError("unknown schedule '" + s + "' (expected concurrent, detector-first or depth-first)");
}

/**
 * Runtime configuration of the assist pipeline. Optional file keys fall back
 * to the built-in class list, anchors, mode partition and default networks.
 */
struct PipelineConfig {
  Mode mode = Mode::Indoor;
  double iou_threshold = 0.45;
  double conf_threshold = 0.5;
  double near_threshold_m = 3.0;
  std::size_t max_announced = 3;
  std::size_t input_size = 416;
  StereoRig rig;
  std::string classes;
  std::string anchors;
  std::string modes;
  std::string stats;
  std::map<std::size_t, std::string, std::greater<>> heads;  // stride -> head tensor file
  std::string synth_arch;
  std::string synth_weights;
  std::string matcher_arch;
  std::string matcher_weights;
  std::string depth_map;  // precomputed float depth map; skips the networks
  std::string audio_dir;
  std::string output_dir = ".";
  Schedule schedule = Schedule::Concurrent;
  std::uint64_t seed = kDefaultSeed;

  /// Applies `key = value` pairs in order; later keys win. Relative paths resolve against `base`.
  void apply(const KeyValueFile& kv, const std::filesystem::path& base = {}) {
    for (const auto& e : kv.entries()) set(e.key, e.value, base, kv.source() + ":" + std::to_string(e.line));
  }

  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {},
           const std::string& where = "option") {
    auto path = [&] {
      std::filesystem::path p(value);
      return (p.is_relative() && !base.empty() ? base / p : p).string();
    };
    auto real = [&] { return detail::parse_real(value, where + " " + key); };
    auto count = [&] { return detail::parse_count(value, where + " " + key); };
    if (key == "mode") mode = parse_mode(value);
    else if (key == "iou_threshold") iou_threshold = real();
    else if (key == "conf_threshold") conf_threshold = real();
    else if (key == "near_threshold") near_threshold_m = real();
    else if (key == "max_announced") max_announced = count();
    else if (key == "input_size") input_size = count();
    else if (key == "baseline") rig.baseline_m = real();
    else if (key == "focal") rig.focal_px = real();
    else if (key == "classes") classes = path();
    else if (key == "anchors") anchors = path();
    else if (key == "modes") modes = path();
    else if (key == "stats") stats = path();
    else if (key.rfind("head", 0) == 0 && key.size() > 4) heads[detail::parse_count(key.substr(4), where + " " + key)] = path();
    else if (key == "synth_arch") synth_arch = path();
    else if (key == "synth_weights") synth_weights = path();
    else if (key == "matcher_arch") matcher_arch = path();
    else if (key == "matcher_weights") matcher_weights = path();
    else if (key == "depth_map") depth_map = path();
    else if (key == "audio_dir") audio_dir = path();
    else if (key == "output_dir") output_dir = path();
    else if (key == "schedule") schedule = parse_schedule(value);
    else throw ConfigError(where + ": unknown key '" + key + "'");
  }

  /// Checks ranges and that every referenced file exists. `need_audio` requires the catalog.
  void validate(bool need_audio = true) const {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw ConfigError("iou_threshold must lie in [0,1]");
    if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) throw ConfigError("conf_threshold must lie in [0,1]");
    AssistConfig{near_threshold_m, max_announced}.validate();
    rig.validate();
    if (input_size == 0) throw ConfigError("input_size must be positive");
    if (need_audio && audio_dir.empty()) throw ConfigError("audio_dir is required");
    if (!audio_dir.empty() && !std::filesystem::is_directory(audio_dir)) throw ConfigError("audio_dir " + audio_dir + " is not a directory");
    auto need = [](const std::string& p, const char* what) {
      if (!p.empty() && !std::filesystem::is_regular_file(p))
        throw ConfigError(std::string(what) + " file " + p + " does not exist");
    };
    need(classes, "classes");
    need(anchors, "anchors");
    need(modes, "modes");
    need(stats, "stats");
    need(synth_arch, "synth_arch");
    need(synth_weights, "synth_weights");
    need(matcher_arch, "matcher_arch");
    need(matcher_weights, "matcher_weights");
    need(depth_map, "depth_map");
    for (const auto& [stride, p] : heads) {
      if (stride == 0 || input_size % stride != 0)
        throw ConfigError("head stride " + std::to_string(stride) + " does not divide input_size");
      need(p, "head");
    }
  }
};

/// Which parts of the pipeline a command runs.
struct Stages {
  bool detect = true;
  bool depth = true;
  bool audio = true;
};

/// Everything a run needs, loaded and cross-checked before any computation.
struct PipelineResources {
  PipelineConfig cfg;
  std::vector<std::string> class_names;
  AnchorSet anchors;
  ModeConfig mode;
  std::optional<ChannelStats> stats;
  std::vector<std::pair<std::size_t, Tensor<float>>> heads;
  std::optional<DepthMap> depth_override;
  std::optional<SynthesisNet<float>> synth;
  std::optional<MatcherNet<float>> matcher;

  static PipelineResources load(const PipelineConfig& cfg, Stages stages = {}) {
    cfg.validate(stages.audio);
    PipelineResources r;
    r.cfg = cfg;
    r.class_names = cfg.classes.empty() ? coco_class_names() : load_class_names(cfg.classes);
    r.anchors = cfg.anchors.empty() ? default_anchors() : parse_anchors(KeyValueFile::load(cfg.anchors));
    if (cfg.modes.empty()) {
      if (!cfg.classes.empty())
        throw ConfigError("a custom class list needs a modes file that partitions it");
      r.mode = default_mode_config(cfg.mode);
    } else {
      r.mode = load_mode_config(KeyValueFile::load(cfg.modes), cfg.mode, r.class_names);
    }
    if (!cfg.stats.empty()) r.stats = load_stats(cfg.stats);
    if (stages.detect) r.load_heads();
    if (stages.depth) r.load_depth();
    return r;
  }

 private:
  void load_heads() {
    for (const auto& [stride, p] : cfg.heads) {
      auto it = anchors.find(stride);
      if (it == anchors.end()) throw ConfigError("no anchors for head stride " + std::to_string(stride));
      Tensor<float> head;
      try {
        head = load_head_tensor(p);
      } catch (const DecodeError& e) {
        throw ConfigError(e.what());
      }
      const std::size_t grid = cfg.input_size / stride;
      const std::size_t want = it->second.size() * (5 + class_names.size());
      if (head.dim(0) != want || head.dim(1) != grid || head.dim(2) != grid)
        throw ConfigError(p + ": head shape " + shape_str(head.shape()) + ", expected [" + std::to_string(want) +
                          "," + std::to_string(grid) + "," + std::to_string(grid) + "]");
      heads.emplace_back(stride, std::move(head));
    }
  }

  void load_depth() {
    if (!cfg.depth_map.empty()) {
      Tensor<float> m;
      try {
        m = load_float_map(cfg.depth_map);
      } catch (const DecodeError& e) {
        throw ConfigError(e.what());
      }
      for (float v : m.data())
        if (!(v > 0.0f)) throw ConfigError(cfg.depth_map + ": depths must be positive");
      depth_override = DepthMap{std::move(m)};
    } else {
      auto sc = cfg.synth_arch.empty() ? SynthNetConfig::defaults() : load_synth_config(KeyValueFile::load(cfg.synth_arch));
      auto mc = cfg.matcher_arch.empty() ? MatcherConfig::defaults()
                                         : load_matcher_config(KeyValueFile::load(cfg.matcher_arch));
      if (sc.input_width <= mc.max_disp)
        throw ConfigError("synthesis width " + std::to_string(sc.input_width) + " must exceed matcher max_disp " +
                          std::to_string(mc.max_disp));
      synth.emplace(sc, cfg.seed);
      matcher.emplace(mc, cfg.seed + 1);
      if (!cfg.synth_weights.empty()) load_parameters(synth->params(), cfg.synth_weights);
      if (!cfg.matcher_weights.empty()) load_parameters(matcher->params(), cfg.matcher_weights);
    }
  }
};

struct PipelineResult {
  std::vector<Detection> detections;  // detector input coordinates
  DepthMap depth;
  Announcement announcement;
  std::optional<std::string> missing_token;
  int status = 0;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::vector<Detection> detector_branch(const PipelineResources& r, const Tensor<float>& image) {
  auto stats = r.stats;
  auto intensity = to_intensity(image);
  if (!stats) {
    const Tensor<float> one[] = {intensity};
    stats = channel_means(one);
  }
  // Normalized input for a backbone; the heads come precomputed from files.
  [[maybe_unused]] auto normalized = stage("normalize", [&] { return normalize(intensity, *stats); });
  return stage("detect", [&] {
    std::vector<Detection> all;
    const auto width = static_cast<double>(r.cfg.input_size);
    for (const auto& [stride, head] : r.heads) {
      auto decoded = decode_predictions(head, r.anchors.at(stride), stride, r.cfg.input_size);
      auto dets = to_detections(decoded, r.class_names, width);
      all.insert(all.end(), dets.begin(), dets.end());
    }
    auto kept = nms(all, r.cfg.iou_threshold, r.cfg.conf_threshold);
    return mode_filter(kept, r.mode);
  });
}

inline DepthMap depth_branch(const PipelineResources& r, const Tensor<float>& image) {
  if (r.depth_override) return *r.depth_override;
  const auto& sc = r.synth->config();
  auto left = stage("resize", [&] { return resize_bilinear(image, sc.input_height, sc.input_width); });
  auto right = stage("synthesize", [&] { return synthesize_right(left, *r.synth).detach(); });
  auto disp = stage("match", [&] { return match_stereo(left, right, *r.matcher); });
  return stage("depth", [&] {
    // The rig focal length is given for the original image width.
    const float gain = static_cast<float>(image.dim(2)) / static_cast<float>(sc.input_width);
    auto d = disp.values.clone();
    for (auto& v : d.data()) v *= gain;
    return disparity_to_depth(DisparityMap{d}, r.cfg.rig);
  });
}

/// Maps a box from the square detector frame onto a depth map of size h x w.
inline Detection to_depth_frame(Detection d, std::size_t input_size, std::size_t h, std::size_t w) {
  const double sx = static_cast<double>(w) / static_cast<double>(input_size);
  const double sy = static_cast<double>(h) / static_cast<double>(input_size);
  d.box.b_x *= sx;
  d.box.b_w *= sx;
  d.box.b_y *= sy;
  d.box.b_h *= sy;
  return d;
}

}  // namespace detail

/**
 * Runs detection and depth estimation on one image, fuses them and composes
 * the spoken announcement. Writes into the output directory:
 *   detections.jsonl, depth.map (float), depth.pgm (+ .txt scale),
 *   announcement.txt, playlist.m3u (only when every token has audio).
 * A missing audio token leaves the text written and sets status 3.
 */
inline PipelineResult run_pipeline(const std::filesystem::path& image_path, const PipelineResources& r) {
  auto image = detail::stage("load", [&] { return load_image(image_path); });

  PipelineResult res;
  auto detect = [&] { res.detections = detail::detector_branch(r, image); };
  auto depth = [&] { res.depth = detail::depth_branch(r, image); };
  switch (r.cfg.schedule) {
    case Schedule::DetectorFirst:
      detect();
      depth();
      break;
    case Schedule::DepthFirst:
      depth();
      detect();
      break;
    case Schedule::Concurrent: {
      std::exception_ptr depth_error;
      std::thread t([&] {
        try {
          depth();
        } catch (...) {
          depth_error = std::current_exception();
        }
      });
      try {
        detect();
      } catch (...) {
        t.join();
        throw;
      }
      t.join();
      if (depth_error) std::rethrow_exception(depth_error);
      break;
    }
  }

  const AssistConfig acfg{r.cfg.near_threshold_m, r.cfg.max_announced};
  auto ann = detail::stage("announce", [&] {
    std::vector<Detection> framed;
    for (const auto& d : res.detections)
      framed.push_back(detail::to_depth_frame(d, r.cfg.input_size, res.depth.height(), res.depth.width()));
    auto near = proximity_filter(fuse_depth(framed, res.depth), acfg);
    return compose_announcement(near);
  });

  const std::filesystem::path out(r.cfg.output_dir);
  detail::stage("write", [&] {
    std::filesystem::create_directories(out);
    save_detections(res.detections, out / "detections.jsonl");
    save_float_map(res.depth.values, out / "depth.map");
    save_pgm16(res.depth.values, 256.0, out / "depth.pgm");
    detail::write_file(out / "announcement.txt", ann.text + "\n");
    std::filesystem::remove(out / "playlist.m3u");
    return 0;
  });

  try {
    res.announcement = audio_lookup(ann, r.cfg.audio_dir);
  } catch (const MissingAudio& e) {
    res.announcement = std::move(ann);
    res.missing_token = e.token();
    res.status = 3;
    return res;
  }
  detail::stage("write", [&] {
    write_playlist(res.announcement, out / "playlist.m3u");
    return 0;
  });
  return res;
}

}  // namespace vision

#endif  // VISION_PIPELINE_HPP_
