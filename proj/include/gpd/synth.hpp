#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpd/image.hpp"

namespace gpd {

/// Pinhole stereo rig looking along +Z with rows growing downward.
struct CameraModel {
  double focal_length_px = 700.0;
  double baseline_m = 0.54;
  double camera_height_m = 1.65;
  double horizon_row_v0 = 0.0;
  double principal_col_u0 = 0.0;

  /// f = 700 px, B = 0.54 m, h = 1.65 m, v0 = height/3, u0 = width/2.
  static CameraModel kitti_like(int width, int height);
  void validate() const;
};

enum class PlaneKind {
  HorizontalGround,
  LateralSlopeGround,
  LongitudinalSlopeGround,
  FrontalObstacle,
  LeftLateralObstacle,
  RightLateralObstacle,
};

std::string_view to_string(PlaneKind kind);
bool is_ground(PlaneKind kind);

/// Half-open pixel rectangle: rows [row0, row1), columns [col0, col1).
struct Footprint {
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;
};

/// One analytic plane.
///
/// angle_deg: roll for lateral-slope ground, pitch for longitudinal-slope ground
/// (positive = uphill), yaw magnitude for lateral obstacles. distance_m: depth of a
/// frontal obstacle, depth at the principal column for lateral obstacles, and the
/// distance at which a longitudinal slope starts.
struct PlaneEntry {
  PlaneKind kind = PlaneKind::HorizontalGround;
  double angle_deg = 0.0;
  double distance_m = 0.0;
  Footprint footprint;
  Rgb color{128, 128, 128};
};

/// Planes are painted in list order; later entries overwrite earlier ones.
struct PlaneSceneSpec {
  int width = 0;
  int height = 0;
  std::vector<PlaneEntry> planes;
};

struct SynthScene {
  DisparityMap disparity;
  Mask ground;
  /// Index into PlaneSceneSpec::planes of the plane painted at each pixel, -1 if none.
  Grid<std::int16_t> plane_id;
  RgbImage rgb;
};

/// Closed-form disparity of a plane at pixel (v, u).
double plane_disparity(const PlaneEntry& plane, const CameraModel& cam, double v, double u);

/// Throws std::invalid_argument for footprints outside the image or negative disparities.
SynthScene synth_scene(const PlaneSceneSpec& spec, const CameraModel& cam);

/// Canonical scenes. Uncovered pixels (sky) carry invalid disparity.
PlaneSceneSpec six_plane_scene(int width, int height);
PlaneSceneSpec flat_scene(int width, int height);
PlaneSceneSpec lateral_slope_scene(int width, int height);
PlaneSceneSpec longitudinal_slope_scene(int width, int height);

/// Seeded random layout: one or two ground kinds below the horizon plus 1-4 obstacles.
PlaneSceneSpec random_scene(std::uint64_t seed, int width, int height, const CameraModel& cam);

/// Looks up a canonical scene by CLI name ("six-planes", "flat", "lateral-slope",
/// "longitudinal-slope").
std::optional<PlaneSceneSpec> named_scene(std::string_view name, int width, int height);

/// Alpha-blends `color` into the masked pixels: round((1-alpha)*in + alpha*color).
RgbImage render_overlay(const RgbImage& image, const Mask& mask, Rgb color, double alpha);

}  // namespace gpd
