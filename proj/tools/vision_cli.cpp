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

// Command-line front end: statistics, detection, depth, the assist pipeline,
// training and small utilities.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vision/pipeline.hpp"
#include "vision/training.hpp"

namespace fs = std::filesystem;
using namespace vision;

namespace {

constexpr int kUsageError = 2;
constexpr int kMissingAudio = 3;
constexpr int kFailure = 1;

// Config file first, then every --set key=value override in order.
struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", file, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("-s,--set", overrides, "override a config key, e.g. --set mode=outdoor");
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    cfg.seed = seed_from_env();
    if (!file.empty()) cfg.apply(KeyValueFile::load(file), fs::path(file).parent_path());
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), {}, "--set");
    }
    return cfg;
  }
};

std::vector<fs::path> image_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> dir;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".ppm") dir.push_back(e.path());
      std::sort(dir.begin(), dir.end());
      out.insert(out.end(), dir.begin(), dir.end());
    } else {
      out.emplace_back(in);
    }
  }
  if (out.empty()) throw ConfigError("no input images");
  return out;
}

struct TrainArgs {
  std::string data;
  std::size_t synthetic = 0;
  std::string arch;
  std::string output;
  std::size_t epochs = 0;
  double lr = 0.0003;
  double wd = 1e-6;
  std::size_t batch = 16;
  std::string optimizer = "adam";
  std::string history;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "stereo directory (left/ right/ [disparity/])");
    app->add_option("--synthetic", synthetic, "train on N generated scenes instead");
    app->add_option("--arch", arch, "architecture file")->check(CLI::ExistingFile);
    app->add_option("-o,--output", output, "weights file to write")->required();
    app->add_option("--epochs", epochs, "epochs (default: plan default)");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--weight-decay", wd, "weight decay");
    app->add_option("--batch", batch, "mini-batch size");
    app->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    app->add_option("--history", history, "write per-epoch mean loss here");
  }

  TrainPlan plan(TrainPlan p) const {
    if (epochs) p.epochs = epochs;
    p.optim.learning_rate = lr;
    p.optim.weight_decay = wd;
    p.optim.batch_size = batch;
    p.optim.kind = optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    p.optim.validate();
    return p;
  }

  // Zero height/width keeps directory images at their native size.
  std::vector<StereoSample> samples(std::size_t height, std::size_t width, std::uint64_t seed) const {
    if (data.empty() == (synthetic == 0)) throw ConfigError("give exactly one of --data or --synthetic");
    if (synthetic) {
      SyntheticSceneConfig sc;
      if (height) sc.height = height;
      if (width) sc.width = width;
      return make_synthetic_pairs(synthetic, sc, seed);
    }
    auto set = load_stereo_directory(data);
    for (auto& s : set) {
      if (!height || (s.left.dim(1) == height && s.left.dim(2) == width)) continue;
      const float gain = static_cast<float>(width) / static_cast<float>(s.left.dim(2));
      s.left = resize_bilinear(s.left, height, width);
      s.right = resize_bilinear(s.right, height, width);
      if (s.disparity) {
        auto d = resize_bilinear(*s.disparity, height, width);
        for (auto& v : d.data()) v *= gain;
        s.disparity = d;
      }
    }
    return set;
  }

  void finish(const ParamSet<float>& params, const std::vector<double>& losses) const {
    save_weights(snapshot(params), output);
    if (!history.empty()) {
      std::string text;
      for (std::size_t e = 0; e < losses.size(); ++e)
        text += std::to_string(e + 1) + " " + detail::format_real(losses[e]) + "\n";
      detail::write_file(history, text);
    }
  }
};

void print_epoch(std::size_t e, double l) { std::cout << "epoch " << e + 1 << " loss " << l << "\n"; }

int cmd_stats(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<Tensor<float>> images;
  for (const auto& p : image_files(inputs)) images.push_back(to_intensity(load_image(p)));
  auto stats = channel_means(images);
  if (out.empty()) {
    std::cout << detail::format_real(stats.mu_r) << '\n' << detail::format_real(stats.mu_g) << '\n'
              << detail::format_real(stats.mu_b) << '\n' << detail::format_real(stats.sigma) << '\n';
  } else {
    save_stats(stats, out);
  }
  return 0;
}

int cmd_detect(const ConfigArgs& ca, const std::string& image) {
  auto cfg = ca.build();
  auto res = PipelineResources::load(cfg, {.detect = true, .depth = false, .audio = false});
  auto dets = detail::detector_branch(res, load_image(image));
  fs::create_directories(cfg.output_dir);
  save_detections(dets, fs::path(cfg.output_dir) / "detections.jsonl");
  for (const auto& d : dets) std::cout << detection_record(d) << "\n";
  return 0;
}

int cmd_depth(const ConfigArgs& ca, const std::string& image) {
  auto cfg = ca.build();
  auto res = PipelineResources::load(cfg, {.detect = false, .depth = true, .audio = false});
  auto depth = detail::depth_branch(res, load_image(image));
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  save_float_map(depth.values, out / "depth.map");
  save_pgm16(depth.values, 256.0, out / "depth.pgm");
  return 0;
}

int cmd_assist(const ConfigArgs& ca, const std::string& image) {
  auto res = PipelineResources::load(ca.build());
  auto result = run_pipeline(image, res);
  std::cout << result.announcement.text << "\n";
  if (result.missing_token) {
    std::cerr << "error: missing audio for token '" << *result.missing_token << "'; playlist not written\n";
    return kMissingAudio;
  }
  return 0;
}

int cmd_census(std::size_t input, std::size_t boxes, const std::vector<std::size_t>& strides) {
  auto c = anchor_census(input, boxes, strides);
  for (std::size_t i = 0; i < strides.size(); ++i) {
    const std::size_t g = input / strides[i];
    std::cout << "stride " << strides[i] << ": " << g << "x" << g << "x" << boxes << " = " << c.per_stride[i] << "\n";
  }
  std::cout << "total " << c.total << "\n";
  return 0;
}

int cmd_synth_data(std::size_t count, const SyntheticSceneConfig& sc, const std::string& out) {
  auto pairs = make_synthetic_pairs(count, sc, seed_from_env());
  const fs::path root(out);
  for (const char* d : {"left", "right", "disparity"}) fs::create_directories(root / d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu", i);
    save_image(pairs[i].left, root / "left" / (std::string(name) + ".ppm"));
    save_image(pairs[i].right, root / "right" / (std::string(name) + ".ppm"));
    save_pgm16(*pairs[i].disparity, 256.0, root / "disparity" / (std::string(name) + ".pgm"));
  }
  std::cout << "wrote " << pairs.size() << " pairs to " << root.string() << "\n";
  return 0;
}

int cmd_catalog(const std::string& classes, const std::string& dir, bool check) {
  const auto names = classes.empty() ? coco_class_names() : load_class_names(classes);
  const auto vocab = announcement_vocabulary(names);
  if (!check) {
    make_stub_catalog(dir, vocab);
    std::cout << "wrote " << vocab.size() << " stub files to " << dir << "\n";
    return 0;
  }
  const auto missing = missing_audio(vocab, dir);
  for (const auto& t : missing) std::cout << "missing: " << t << "\n";
  return missing.empty() ? 0 : kMissingAudio;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle detection, stereo depth and spoken guidance"};
  app.require_subcommand(1);

  std::vector<std::string> stats_inputs;
  std::string stats_out;
  auto* stats = app.add_subcommand("stats", "per-channel means of a set of images");
  stats->add_option("images", stats_inputs, "PPM files or directories")->required();
  stats->add_option("-o,--output", stats_out, "stats file to write (default: stdout)");

  ConfigArgs cfg_args;
  std::string image;
  auto* detect = app.add_subcommand("detect", "decode, suppress and mode-filter detector heads");
  auto* depth = app.add_subcommand("depth", "estimate a depth map from one image");
  auto* assist = app.add_subcommand("assist", "full pipeline: detections, depth, announcement, playlist");
  for (auto* sub : {detect, depth, assist}) {
    cfg_args.add_to(sub);
    sub->add_option("image", image, "input P6 image")->required()->check(CLI::ExistingFile);
  }

  TrainArgs train_args;
  auto* train_synth = app.add_subcommand("train-synth", "train the right-view synthesis network");
  auto* train_matcher = app.add_subcommand("train-matcher", "train the stereo matcher");
  train_args.add_to(train_synth);
  train_args.add_to(train_matcher);

  std::size_t census_input = 416;
  std::size_t census_boxes = 3;
  std::vector<std::size_t> census_strides{32, 16, 8};
  auto* census = app.add_subcommand("census", "count anchor boxes per scale");
  census->add_option("--input", census_input, "square input size");
  census->add_option("--boxes", census_boxes, "boxes per cell");
  census->add_option("--strides", census_strides, "strides")->delimiter(',');

  std::size_t synth_count = 4;
  SyntheticSceneConfig scene;
  std::string synth_out;
  auto* synth_data = app.add_subcommand("synth-data", "write synthetic stereo pairs with ground truth");
  synth_data->add_option("--count", synth_count, "number of pairs");
  synth_data->add_option("--height", scene.height, "image height");
  synth_data->add_option("--width", scene.width, "image width");
  synth_data->add_option("--rectangles", scene.rectangles, "foreground rectangles per scene");
  synth_data->add_option("--max-disparity", scene.max_disparity, "largest disparity");
  synth_data->add_option("-o,--output", synth_out, "output directory")->required();

  std::string catalog_classes;
  std::string catalog_dir;
  bool catalog_check = false;
  auto* catalog = app.add_subcommand("catalog", "write or check placeholder audio for the whole vocabulary");
  catalog->add_option("--classes", catalog_classes, "class list (default: built-in)")->check(CLI::ExistingFile);
  catalog->add_option("-o,--output", catalog_dir, "catalog directory")->required();
  catalog->add_flag("--check", catalog_check, "only list tokens without audio");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) return cmd_stats(stats_inputs, stats_out);
    if (*detect) return cmd_detect(cfg_args, image);
    if (*depth) return cmd_depth(cfg_args, image);
    if (*assist) return cmd_assist(cfg_args, image);
    if (*census) return cmd_census(census_input, census_boxes, census_strides);
    if (*catalog) return cmd_catalog(catalog_classes, catalog_dir, catalog_check);
    if (*synth_data) return cmd_synth_data(synth_count, scene, synth_out);
    const auto seed = seed_from_env();
    if (*train_synth) {
      auto sc = train_args.arch.empty() ? SynthNetConfig::defaults() : load_synth_config(KeyValueFile::load(train_args.arch));
      SynthesisNet<float> net(sc, seed);
      auto data = train_args.samples(sc.input_height, sc.input_width, seed);
      auto losses = train_network(net, data, train_args.plan(TrainPlan::synthesis_defaults()), seed, print_epoch);
      train_args.finish(net.params(), losses);
    } else if (*train_matcher) {
      auto mc = train_args.arch.empty() ? MatcherConfig::defaults() : load_matcher_config(KeyValueFile::load(train_args.arch));
      MatcherNet<float> net(mc, seed);
      auto data = train_args.samples(0, 0, seed);
      auto losses = train_network(net, data, train_args.plan(TrainPlan::matcher_defaults()), seed, print_epoch);
      train_args.finish(net.params(), losses);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
