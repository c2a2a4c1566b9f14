#include "gpd/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gpd {
namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class T, class Field>
Setter number(Field field) {
  return [field](RunConfig& c, const std::string& key, const std::string& text) {
    field(c) = parse_number<T>(key, text);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"camera.focal_length_px", number<double>([](RunConfig& c) -> double& { return c.camera.focal_length_px; })},
      {"camera.baseline_m", number<double>([](RunConfig& c) -> double& { return c.camera.baseline_m; })},
      {"camera.camera_height_m", number<double>([](RunConfig& c) -> double& { return c.camera.camera_height_m; })},
      {"camera.horizon_row",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.camera.horizon_row = parse_number<double>(k, v); }},
      {"camera.principal_col",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.camera.principal_col = parse_number<double>(k, v); }},
      {"scene.width", number<int>([](RunConfig& c) -> int& { return c.scene.width; })},
      {"scene.height", number<int>([](RunConfig& c) -> int& { return c.scene.height; })},
      {"scene.count", number<int>([](RunConfig& c) -> int& { return c.scene.count; })},
      {"descriptor.block_size", number<int>([](RunConfig& c) -> int& { return c.descriptor.block_size; })},
      {"descriptor.min_valid_fraction",
       number<double>([](RunConfig& c) -> double& { return c.descriptor.min_valid_fraction; })},
      {"descriptor.binarize_threshold",
       number<double>([](RunConfig& c) -> double& { return c.descriptor.binarize_threshold; })},
      {"slic.region_count", number<int>([](RunConfig& c) -> int& { return c.slic.region_count; })},
      {"slic.compactness", number<double>([](RunConfig& c) -> double& { return c.slic.compactness; })},
      {"slic.iterations", number<int>([](RunConfig& c) -> int& { return c.slic.iterations; })},
      {"slic.connectivity_min_fraction",
       number<double>([](RunConfig& c) -> double& { return c.slic.connectivity_min_fraction; })},
      {"train.lr", number<float>([](RunConfig& c) -> float& { return c.train.lr; })},
      {"train.momentum", number<float>([](RunConfig& c) -> float& { return c.train.momentum; })},
      {"train.batch_size", number<int>([](RunConfig& c) -> int& { return c.train.batch_size; })},
      {"train.epochs", number<int>([](RunConfig& c) -> int& { return c.train.epochs; })},
      {"train.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.train.seed; })},
      {"train.validation_fraction", number<double>([](RunConfig& c) -> double& { return c.train.validation_fraction; })},
      {"model.ground_patch", number<int>([](RunConfig& c) -> int& { return c.ground_patch; })},
      {"model.road_patch", number<int>([](RunConfig& c) -> int& { return c.road_patch; })},
      {"baseline.tolerance", number<double>([](RunConfig& c) -> double& { return c.baseline.tolerance; })},
      {"baseline.bin_width", number<double>([](RunConfig& c) -> double& { return c.baseline.bin_width; })},
      {"paths.manifest", [](RunConfig& c, const std::string&, const std::string& v) { c.paths.manifest = v; }},
      {"paths.checkpoint", [](RunConfig& c, const std::string&, const std::string& v) { c.paths.checkpoint = v; }},
      {"paths.out", [](RunConfig& c, const std::string&, const std::string& v) { c.paths.out = v; }},
      {"paths.pred_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.paths.pred_dir = v; }},
  };
  return table;
}

}  // namespace

CameraModel CameraSettings::for_image(int width, int height) const {
  CameraModel cam = CameraModel::kitti_like(width, height);
  cam.focal_length_px = focal_length_px;
  cam.baseline_m = baseline_m;
  cam.camera_height_m = camera_height_m;
  if (horizon_row) cam.horizon_row_v0 = *horizon_row;
  if (principal_col) cam.principal_col_u0 = *principal_col;
  return cam;
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto it = setters().find(dotted_key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + dotted_key + "'");
  it->second(*this, dotted_key, value);
}

void RunConfig::validate() const {
  try {
    CameraModel{camera.focal_length_px, camera.baseline_m, camera.camera_height_m, 0, 0}.validate();
    descriptor.validate();
    slic.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (scene.width < 1 || scene.height < 1 || scene.count < 1) throw ConfigError("scene dimensions and count must be >= 1");
  if (ground_patch < 8 || ground_patch % 4 != 0) throw ConfigError("model.ground_patch must be a multiple of 4, >= 8");
  if (road_patch < 14 || (road_patch - 2) % 4 != 0) throw ConfigError("model.road_patch must be 2 mod 4 and >= 14");
  if (!(baseline.tolerance >= 0.0) || !(baseline.bin_width > 0.0)) throw ConfigError("bad baseline settings");
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) throw ConfigError("config entry '" + section + "' is outside any section");
    for (const auto& [key, value] : entries) cfg.set(section + "." + key, value.data());
  }
  cfg.validate();
  return cfg;
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "[camera]\nfocal_length_px=" << c.camera.focal_length_px << "\nbaseline_m=" << c.camera.baseline_m
      << "\ncamera_height_m=" << c.camera.camera_height_m << '\n';
  if (c.camera.horizon_row) out << "horizon_row=" << *c.camera.horizon_row << '\n';
  if (c.camera.principal_col) out << "principal_col=" << *c.camera.principal_col << '\n';
  out << "\n[scene]\nwidth=" << c.scene.width << "\nheight=" << c.scene.height << "\ncount=" << c.scene.count << '\n';
  out << "\n[descriptor]\nblock_size=" << c.descriptor.block_size
      << "\nmin_valid_fraction=" << c.descriptor.min_valid_fraction
      << "\nbinarize_threshold=" << c.descriptor.binarize_threshold << '\n';
  out << "\n[slic]\nregion_count=" << c.slic.region_count << "\ncompactness=" << c.slic.compactness
      << "\niterations=" << c.slic.iterations << "\nconnectivity_min_fraction=" << c.slic.connectivity_min_fraction
      << '\n';
  out << "\n[train]\nlr=" << c.train.lr << "\nmomentum=" << c.train.momentum << "\nbatch_size=" << c.train.batch_size
      << "\nepochs=" << c.train.epochs << "\nseed=" << c.train.seed
      << "\nvalidation_fraction=" << c.train.validation_fraction << '\n';
  out << "\n[model]\nground_patch=" << c.ground_patch << "\nroad_patch=" << c.road_patch << '\n';
  out << "\n[baseline]\ntolerance=" << c.baseline.tolerance << "\nbin_width=" << c.baseline.bin_width << '\n';
  out << "\n[paths]\nmanifest=" << c.paths.manifest.string() << "\ncheckpoint=" << c.paths.checkpoint.string()
      << "\nout=" << c.paths.out.string() << "\npred_dir=" << c.paths.pred_dir.string() << '\n';
  return out.str();
}

}  // namespace gpd
