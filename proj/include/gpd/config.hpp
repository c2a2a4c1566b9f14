#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gpd/descriptor.hpp"
#include "gpd/pipeline.hpp"
#include "gpd/superpixel.hpp"
#include "gpd/synth.hpp"

namespace gpd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CameraSettings {
  double focal_length_px = 700.0;
  double baseline_m = 0.54;
  double camera_height_m = 1.65;
  /// Unset means height/3 and width/2 of the image at hand.
  std::optional<double> horizon_row;
  std::optional<double> principal_col;

  CameraModel for_image(int width, int height) const;
};

struct SceneSettings {
  int width = 240;
  int height = 120;
  int count = 30;
};

struct BaselineSettings {
  double tolerance = 1.0;
  double bin_width = 1.0;
};

struct PathSettings {
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path out = ".";
  std::filesystem::path pred_dir;
};

/// Every tunable of a run. Loaded from an INI file with sections [camera],
/// [scene], [descriptor], [slic], [train], [model], [baseline], [paths]; keys are
/// the field names below. Unknown sections or keys are rejected.
struct RunConfig {
  CameraSettings camera;
  SceneSettings scene;
  DescriptorParams descriptor;
  SlicParams slic;
  TrainConfig train;
  int ground_patch = 32;
  int road_patch = 30;
  BaselineSettings baseline;
  PathSettings paths;

  void validate() const;

  /// Sets one "section.key" entry from its textual value.
  void set(const std::string& dotted_key, const std::string& value);

  GroundDetectParams ground_params() const { return GroundDetectParams{descriptor, slic, ground_patch}; }
};

RunConfig load_config(const std::filesystem::path& path);

/// INI text of the full configuration, keys in a fixed order.
std::string to_ini(const RunConfig& cfg);

}  // namespace gpd
