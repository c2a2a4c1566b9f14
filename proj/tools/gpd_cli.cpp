// gpd: synthetic scenes, texture maps, superpixels, training, inference and reports.
//
// Exit codes: 0 success, 1 computation failure, 2 bad input or configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpd/baseline.hpp"
#include "gpd/config.hpp"
#include "gpd/descriptor.hpp"
#include "gpd/eval.hpp"
#include "gpd/io.hpp"
#include "gpd/models.hpp"
#include "gpd/nn/checkpoint.hpp"
#include "gpd/nn/gradcheck.hpp"
#include "gpd/pipeline.hpp"
#include "gpd/superpixel.hpp"
#include "gpd/synth.hpp"

namespace fs = std::filesystem;
using namespace gpd;

namespace {

enum ExitCode { kOk = 0, kComputeFailure = 1, kBadInput = 2 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> block_size;
  std::string task = "ground";
  std::vector<std::string> overrides;

  std::string scene = "six-planes";
  std::optional<int> count;
  std::string image;
  std::string disparity;
  std::optional<int> regions;
  std::string manifest;
  std::string checkpoint;
  std::string pred_dir;
  bool full = false;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.train.seed = *o.seed;
  if (!o.out.empty()) cfg.paths.out = o.out;
  if (o.block_size) cfg.descriptor.block_size = *o.block_size;
  if (o.count) cfg.scene.count = *o.count;
  if (o.regions) cfg.slic.region_count = *o.regions;
  if (!o.manifest.empty()) cfg.paths.manifest = o.manifest;
  if (!o.checkpoint.empty()) cfg.paths.checkpoint = o.checkpoint;
  if (!o.pred_dir.empty()) cfg.paths.pred_dir = o.pred_dir;
  cfg.validate();
  return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.paths.out);
  return cfg.paths.out;
}

fs::path checkpoint_path(const RunConfig& cfg, const std::string& task) {
  return cfg.paths.checkpoint.empty() ? cfg.paths.out / (task + ".gpdn") : cfg.paths.checkpoint;
}

fs::path pred_dir(const RunConfig& cfg) { return cfg.paths.pred_dir.empty() ? cfg.paths.out / "pred" : cfg.paths.pred_dir; }

std::string scene_name(const ManifestEntry& e) {
  std::string stem = e.rgb.stem().string();
  if (stem.size() > 4 && stem.ends_with("_rgb")) stem.resize(stem.size() - 4);
  return stem;
}

fs::path pred_path(const fs::path& dir, const ManifestEntry& e) { return dir / (scene_name(e) + "_pred.png"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << text;
}

struct LoadedScene {
  RgbImage rgb;
  DisparityMap disparity;
  Mask mask;
};

LoadedScene load_entry(const ManifestEntry& e) {
  LoadedScene s{load_rgb_png(e.rgb), load_disparity(e.disparity), load_mask_png(e.mask)};
  require_same_shape(s.rgb, s.disparity, e.rgb.string().c_str());
  require_same_shape(s.rgb, s.mask, e.rgb.string().c_str());
  return s;
}

std::vector<ManifestEntry> require_manifest(const RunConfig& cfg) {
  if (cfg.paths.manifest.empty()) throw InputError("no manifest given (--manifest or paths.manifest)");
  auto entries = load_manifest(cfg.paths.manifest);
  if (entries.empty()) throw InputError("manifest lists no scenes: " + cfg.paths.manifest.string());
  return entries;
}

void write_scene(const SynthScene& s, const fs::path& dir, const std::string& name) {
  save_rgb_png(s.rgb, dir / (name + "_rgb.png"));
  save_disparity_png16(s.disparity, dir / (name + "_disparity.png"));
  save_mask_png(s.ground, dir / (name + "_mask.png"));
  save_rgb_png(render_overlay(s.rgb, s.ground, Rgb{0, 200, 0}, 0.5), dir / (name + "_overlay.png"));
}

// --- commands ------------------------------------------------------------------------

int cmd_synth(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const int w = cfg.scene.width, h = cfg.scene.height;
  const CameraModel cam = cfg.camera.for_image(w, h);
  const fs::path dir = output_dir(cfg);
  if (o.scene == "suite") {
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < cfg.scene.count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "scene_%03d", i);
      const std::uint64_t seed = cfg.train.seed * 1000003ULL + static_cast<std::uint64_t>(i);
      write_scene(synth_scene(random_scene(seed, w, h, cam), cam), dir, name);
      entries.push_back({dir / (std::string(name) + "_rgb.png"), dir / (std::string(name) + "_disparity.png"),
                         dir / (std::string(name) + "_mask.png")});
    }
    write_manifest(entries, dir / "manifest.txt");
    std::cout << "wrote " << entries.size() << " scenes and " << (dir / "manifest.txt").string() << '\n';
    return kOk;
  }
  const auto spec = named_scene(o.scene, w, h);
  if (!spec) throw InputError("unknown scene '" + o.scene + "' (six-planes, flat, lateral-slope, longitudinal-slope, suite)");
  write_scene(synth_scene(*spec, cam), dir, o.scene);
  std::cout << "wrote " << o.scene << " scene to " << dir.string() << '\n';
  return kOk;
}

int cmd_texture(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  if (o.disparity.empty()) throw InputError("texture needs --disparity");
  if (!fs::exists(o.disparity)) throw InputError("file not found: " + o.disparity);
  const DisparityMap d = load_disparity(o.disparity);
  const TextureMap t = texture_map(d, cfg.descriptor);
  const fs::path dir = output_dir(cfg);
  const std::string stem = fs::path(o.disparity).stem().string();
  save_pfm(t, dir / (stem + "_texture.pfm"));
  save_gray8_png(texture_to_gray8(t), dir / (stem + "_texture.png"));
  save_mask_png(binarize(t, cfg.descriptor.binarize_threshold), dir / (stem + "_binary.png"));
  std::cout << "wrote texture maps for " << o.disparity << " to " << dir.string() << '\n';
  return kOk;
}

int cmd_slic(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  if (o.image.empty()) throw InputError("slic needs --image");
  if (!fs::exists(o.image)) throw InputError("file not found: " + o.image);
  const RgbImage img = load_rgb_png(o.image);
  const SuperpixelLabeling lab = slic_segment(img, cfg.slic);
  const fs::path dir = output_dir(cfg);
  const std::string stem = fs::path(o.image).stem().string();
  save_gray16_png(labels_to_u16(lab), dir / (stem + "_labels.png"));
  save_rgb_png(draw_boundaries(img, lab), dir / (stem + "_boundaries.png"));
  std::cout << lab.region_count() << " regions\n";
  return kOk;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto entries = require_manifest(cfg);
  std::vector<Sample> samples;
  nn::Network<float> net;
  if (o.task == "ground") {
    std::vector<GroundScene> scenes;
    for (const auto& e : entries) {
      LoadedScene s = load_entry(e);
      scenes.push_back({std::move(s.rgb), texture_map(s.disparity, cfg.descriptor), std::move(s.mask)});
    }
    samples = extract_ground_samples(scenes, cfg.slic, cfg.ground_patch, cfg.train.seed);
    net = build_ground_net(cfg.train.seed, GroundNetConfig{cfg.ground_patch});
  } else {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const LoadedScene s = load_entry(entries[i]);
      auto part = extract_road_samples(s.rgb, texture_map(s.disparity, cfg.descriptor), s.mask, cfg.road_patch,
                                       static_cast<int>(i));
      std::move(part.begin(), part.end(), std::back_inserter(samples));
    }
    net = build_fusion_net(cfg.train.seed, FusionNetConfig{cfg.road_patch});
  }
  if (samples.size() < 2) throw InputError("too few training samples (" + std::to_string(samples.size()) + ")");
  std::cout << samples.size() << " samples, " << net.parameter_count() << " parameters\n";

  const fs::path dir = output_dir(cfg);
  std::ostringstream trace;
  trace << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  train(net, samples, cfg.train, [&trace](const EpochMetrics& m) {
    char line[160];
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f\n", m.epoch, m.train_loss, m.train_accuracy,
                  m.val_loss, m.val_accuracy);
    trace << line;
    std::cout << "epoch " << line;
  });
  const fs::path ck = checkpoint_path(cfg, o.task);
  if (ck.has_parent_path()) fs::create_directories(ck.parent_path());
  nn::save_checkpoint(net, ck);
  write_text(dir / (o.task + "_trace.csv"), trace.str());
  std::cout << "wrote " << ck.string() << '\n';
  return kOk;
}

nn::Network<float> load_task_net(const RunConfig& cfg, const std::string& task) {
  const fs::path ck = checkpoint_path(cfg, task);
  if (!fs::exists(ck)) throw InputError("checkpoint not found: " + ck.string());
  nn::Network<float> net = nn::load_checkpoint(ck);
  const std::string want = task == "ground" ? kGroundArch : kFusionArch;
  if (net.arch != want && net.arch != "fcn_" + want) {
    throw InputError("checkpoint holds a '" + net.arch + "' net, task " + task + " needs '" + want + "'");
  }
  return net;
}

int cmd_infer(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const nn::Network<float> net = load_task_net(cfg, o.task);
  const auto entries = require_manifest(cfg);
  const fs::path dir = pred_dir(cfg);
  fs::create_directories(dir);
  for (const auto& e : entries) {
    const RgbImage rgb = load_rgb_png(e.rgb);
    const DisparityMap d = load_disparity(e.disparity);
    require_same_shape(rgb, d, e.rgb.string().c_str());
    const Mask pred = o.task == "ground" ? detect_ground(rgb, d, net, cfg.ground_params())
                                         : segment_road(rgb, texture_map(d, cfg.descriptor), net);
    const fs::path p = pred_path(dir, e);
    save_mask_png(pred, p);
    save_rgb_png(render_overlay(rgb, pred, Rgb{0, 200, 0}, 0.5), dir / (scene_name(e) + "_overlay.png"));
    std::cout << p.string() << '\n';
  }
  return kOk;
}

int cmd_eval(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto entries = require_manifest(cfg);
  const fs::path dir = pred_dir(cfg);
  const std::string method = o.task == "ground" ? "descriptor" : "fusion";
  std::vector<SceneResult> results;
  for (const auto& e : entries) {
    const DisparityMap d = load_disparity(e.disparity);
    const Mask gt = load_mask_png(e.mask);
    const fs::path p = pred_path(dir, e);
    if (!fs::exists(p)) throw InputError("prediction not found: " + p.string());
    const Mask pred = load_mask_png(p);
    require_same_shape(gt, pred, p.string().c_str());
    require_same_shape(gt, d, e.disparity.string().c_str());
    results.push_back({scene_name(e),
                       gt,
                       {{method, pred}, {"vdisparity", v_disparity_ground(d, cfg.baseline.tolerance, cfg.baseline.bin_width)}}});
  }
  const Report r = compare_report(results);
  const fs::path out = output_dir(cfg);
  write_text(out / "report.txt", r.to_text());
  write_text(out / "report.csv", r.to_csv());
  std::cout << r.to_text();
  return kOk;
}

int cmd_gradcheck(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  nn::GradCheckOptions opts;
  opts.sample_seed = cfg.train.seed;
  nn::Network<double> net;
  if (o.full) {
    opts.max_params_per_tensor = 32;
    net = o.task == "ground" ? build_ground_net(cfg.train.seed).cast<double>()
                             : build_fusion_net(cfg.train.seed).cast<double>();
  } else {
    net = o.task == "ground" ? build_ground_net(cfg.train.seed, GroundNetConfig{16, 3, 4, 10}).cast<double>()
                             : build_fusion_net(cfg.train.seed, FusionNetConfig{14, 4, 3, 8}).cast<double>();
  }
  Rng rng(cfg.train.seed);
  std::vector<nn::Tensor<double>> inputs;
  for (const auto& s : net.input_shapes) {
    nn::Tensor<double> t(s);
    for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
    inputs.push_back(std::move(t));
  }
  const auto r = nn::grad_check(net, inputs, kPositiveClass, opts);
  std::printf("%s: %zu entries checked, %zu excluded, max relative error %.3g (%s)\n", net.arch.c_str(), r.checked,
              r.excluded.size(), r.max_rel_error, r.worst_param.c_str());
  return r.max_rel_error < 1e-5 ? kOk : kComputeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-plane and road detection from stereo disparity"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for scene generation, initialization and shuffling");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--block-size", o.block_size, "Descriptor block size")->check(CLI::IsMember({1, 3}));
  app.add_option("--task", o.task, "Network task")->check(CLI::IsMember({"ground", "road"}));
  app.add_option("--set", o.overrides, "Override a config entry, section.key=value");

  auto* synth = app.add_subcommand("synth", "Render a synthetic plane scene");
  synth->add_option("--scene", o.scene, "six-planes, flat, lateral-slope, longitudinal-slope or suite");
  synth->add_option("--count", o.count, "Scene count for --scene suite");
  auto* texture = app.add_subcommand("texture", "Disparity texture map and its binarization");
  texture->add_option("--disparity", o.disparity, "Disparity file (16-bit PNG or PFM)")->required();
  auto* slic = app.add_subcommand("slic", "SLIC superpixels of an RGB image");
  slic->add_option("--image", o.image, "RGB PNG")->required();
  slic->add_option("-k,--regions", o.regions, "Target region count");
  auto* train_cmd = app.add_subcommand("train", "Train the ground or road network");
  auto* infer = app.add_subcommand("infer", "Predict masks for a manifest");
  auto* eval = app.add_subcommand("eval", "Score predictions against the V-disparity baseline");
  for (auto* cmd : {train_cmd, infer, eval}) cmd->add_option("--manifest", o.manifest, "Scene manifest");
  for (auto* cmd : {train_cmd, infer}) cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  for (auto* cmd : {infer, eval}) cmd->add_option("--pred-dir", o.pred_dir, "Prediction directory");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_flag("--full", o.full, "Full-size network, sampled entries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (texture->parsed()) return cmd_texture(o);
    if (slic->parsed()) return cmd_slic(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (infer->parsed()) return cmd_infer(o);
    if (eval->parsed()) return cmd_eval(o);
    if (gradcheck->parsed()) return cmd_gradcheck(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kBadInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kComputeFailure;
  }
  return kBadInput;
}
