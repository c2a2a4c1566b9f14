#include "gpd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gpd/random.hpp"

namespace gpd {
namespace {

double tan_deg(double deg) { return std::tan(deg * std::numbers::pi / 180.0); }

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint8_t clamp_u8(int x) { return static_cast<std::uint8_t>(std::clamp(x, 0, 255)); }

// Small deterministic per-pixel texture so images are not piecewise flat.
Rgb shade(Rgb base, int plane, int v, int u) {
  const std::uint64_t h = mix64((static_cast<std::uint64_t>(plane + 1) << 42) ^
                                (static_cast<std::uint64_t>(v) << 21) ^ static_cast<std::uint64_t>(u));
  const int jitter = static_cast<int>(h % 13) - 6;
  return Rgb{clamp_u8(base.r + jitter), clamp_u8(base.g + jitter), clamp_u8(base.b + jitter)};
}

constexpr Rgb kSkyColor{150, 190, 235};

Rgb default_color(PlaneKind kind) {
  switch (kind) {
    case PlaneKind::HorizontalGround: return {105, 100, 95};
    case PlaneKind::LateralSlopeGround: return {120, 110, 90};
    case PlaneKind::LongitudinalSlopeGround: return {90, 95, 105};
    case PlaneKind::FrontalObstacle: return {200, 60, 50};
    case PlaneKind::LeftLateralObstacle: return {60, 170, 70};
    case PlaneKind::RightLateralObstacle: return {210, 190, 40};
  }
  return {};
}

void check_footprint(const Footprint& f, int width, int height) {
  if (f.row0 < 0 || f.col0 < 0 || f.row1 > height || f.col1 > width || f.row0 >= f.row1 || f.col0 >= f.col1) {
    throw std::invalid_argument("plane footprint [" + std::to_string(f.row0) + "," + std::to_string(f.row1) + ")x[" +
                                std::to_string(f.col0) + "," + std::to_string(f.col1) +
                                ") is empty or outside the " + std::to_string(width) + "x" + std::to_string(height) +
                                " image");
  }
}

PlaneEntry make_plane(PlaneKind kind, double angle, double distance, Footprint f) {
  return PlaneEntry{kind, angle, distance, f, default_color(kind)};
}

}  // namespace

CameraModel CameraModel::kitti_like(int width, int height) {
  CameraModel cam;
  cam.horizon_row_v0 = height / 3.0;
  cam.principal_col_u0 = width / 2.0;
  return cam;
}

void CameraModel::validate() const {
  if (!(focal_length_px > 0.0) || !(baseline_m > 0.0) || !(camera_height_m > 0.0)) {
    throw std::invalid_argument("camera focal length, baseline and height must be positive");
  }
}

std::string_view to_string(PlaneKind kind) {
  switch (kind) {
    case PlaneKind::HorizontalGround: return "horizontal-ground";
    case PlaneKind::LateralSlopeGround: return "lateral-slope-ground";
    case PlaneKind::LongitudinalSlopeGround: return "longitudinal-slope-ground";
    case PlaneKind::FrontalObstacle: return "frontal-obstacle";
    case PlaneKind::LeftLateralObstacle: return "left-lateral-obstacle";
    case PlaneKind::RightLateralObstacle: return "right-lateral-obstacle";
  }
  return "unknown";
}

bool is_ground(PlaneKind kind) {
  return kind == PlaneKind::HorizontalGround || kind == PlaneKind::LateralSlopeGround ||
         kind == PlaneKind::LongitudinalSlopeGround;
}

double plane_disparity(const PlaneEntry& plane, const CameraModel& cam, double v, double u) {
  const double f = cam.focal_length_px;
  const double b = cam.baseline_m;
  const double h = cam.camera_height_m;
  const double dv = v - cam.horizon_row_v0;
  const double du = u - cam.principal_col_u0;
  switch (plane.kind) {
    case PlaneKind::HorizontalGround:
      return b / h * dv;
    case PlaneKind::LateralSlopeGround:
      // Ground Y + X tan(roll) = h.
      return b / h * (dv + du * tan_deg(plane.angle_deg));
    case PlaneKind::LongitudinalSlopeGround: {
      // Ground Y = h - (Z - Z0) tan(pitch): effective height h + Z0 tan(pitch).
      const double t = tan_deg(plane.angle_deg);
      const double h_eff = h + plane.distance_m * t;
      if (!(h_eff > 0.0)) throw std::invalid_argument("longitudinal slope puts the ground above the camera");
      return b / h_eff * (dv + f * t);
    }
    case PlaneKind::FrontalObstacle:
      return f * b / plane.distance_m;
    case PlaneKind::LeftLateralObstacle:
      // Vertical plane Z = Z0 + X tan(yaw); nearer on the left.
      return f * b / plane.distance_m - b / plane.distance_m * du * tan_deg(plane.angle_deg);
    case PlaneKind::RightLateralObstacle:
      return f * b / plane.distance_m + b / plane.distance_m * du * tan_deg(plane.angle_deg);
  }
  return 0.0;
}

SynthScene synth_scene(const PlaneSceneSpec& spec, const CameraModel& cam) {
  cam.validate();
  SynthScene scene{DisparityMap(spec.width, spec.height), Mask(spec.width, spec.height),
                   Grid<std::int16_t>(spec.width, spec.height, -1), RgbImage(spec.width, spec.height)};
  for (int v = 0; v < spec.height; ++v) {
    const int tint = (spec.height - v) * 20 / spec.height;
    for (int u = 0; u < spec.width; ++u)
      scene.rgb.at(v, u) = Rgb{clamp_u8(kSkyColor.r - tint), clamp_u8(kSkyColor.g - tint), kSkyColor.b};
  }

  for (std::size_t i = 0; i < spec.planes.size(); ++i) {
    const PlaneEntry& plane = spec.planes[i];
    const Footprint& f = plane.footprint;
    check_footprint(f, spec.width, spec.height);
    const bool obstacle = !is_ground(plane.kind);
    if (obstacle && !(plane.distance_m > 0.0)) throw std::invalid_argument("obstacle distance must be positive");
    if ((plane.kind == PlaneKind::LeftLateralObstacle || plane.kind == PlaneKind::RightLateralObstacle) &&
        !(plane.angle_deg >= 0.0 && plane.angle_deg < 90.0)) {
      throw std::invalid_argument("lateral obstacle yaw must lie in [0, 90) degrees");
    }
    for (int v = f.row0; v < f.row1; ++v) {
      for (int u = f.col0; u < f.col1; ++u) {
        const double d = plane_disparity(plane, cam, v, u);
        if (!std::isfinite(d) || d < 0.0) {
          throw std::invalid_argument(std::string(to_string(plane.kind)) + " yields negative disparity at (" +
                                      std::to_string(v) + "," + std::to_string(u) + ")");
        }
        scene.disparity.at(v, u) = static_cast<float>(d);
        scene.ground.at(v, u) = is_ground(plane.kind) ? 1 : 0;
        scene.plane_id.at(v, u) = static_cast<std::int16_t>(i);
        scene.rgb.at(v, u) = shade(plane.color, static_cast<int>(i), v, u);
      }
    }
  }
  return scene;
}

PlaneSceneSpec six_plane_scene(int width, int height) {
  const int v0 = height / 3;
  const int split = v0 + (height - v0) / 3;
  const int c1 = width / 3, c2 = 2 * width / 3;
  PlaneSceneSpec spec{width, height, {}};
  spec.planes.push_back(make_plane(PlaneKind::HorizontalGround, 0.0, 0.0, {split, 0, height, c1}));
  spec.planes.push_back(make_plane(PlaneKind::LateralSlopeGround, 8.0, 0.0, {split, c1, height, c2}));
  spec.planes.push_back(make_plane(PlaneKind::LongitudinalSlopeGround, 4.0, 8.0, {split, c2, height, width}));
  spec.planes.push_back(make_plane(PlaneKind::LeftLateralObstacle, 50.0, 20.0, {0, 0, split, c1}));
  spec.planes.push_back(make_plane(PlaneKind::FrontalObstacle, 0.0, 18.9, {0, c1, split, c2}));
  spec.planes.push_back(make_plane(PlaneKind::RightLateralObstacle, 50.0, 20.0, {0, c2, split, width}));
  return spec;
}

PlaneSceneSpec flat_scene(int width, int height) {
  const int v0 = height / 3;
  PlaneSceneSpec spec{width, height, {}};
  spec.planes.push_back(make_plane(PlaneKind::HorizontalGround, 0.0, 0.0, {v0 + 1, 0, height, width}));
  return spec;
}

PlaneSceneSpec lateral_slope_scene(int width, int height) {
  // Roll of 10 degrees; the ground starts where the left edge turns positive.
  const double v0 = height / 3.0;
  const double u0 = width / 2.0;
  const double t = std::tan(10.0 * std::numbers::pi / 180.0);
  const int top = static_cast<int>(std::ceil(v0 + u0 * t)) + 1;
  PlaneSceneSpec spec{width, height, {}};
  spec.planes.push_back(make_plane(PlaneKind::LateralSlopeGround, 10.0, 0.0, {top, 0, height, width}));
  return spec;
}

PlaneSceneSpec longitudinal_slope_scene(int width, int height) {
  const int v0 = height / 3;
  PlaneSceneSpec spec{width, height, {}};
  spec.planes.push_back(make_plane(PlaneKind::LongitudinalSlopeGround, 4.0, 8.0, {v0 + 1, 0, height, width}));
  return spec;
}

std::optional<PlaneSceneSpec> named_scene(std::string_view name, int width, int height) {
  if (name == "six-planes") return six_plane_scene(width, height);
  if (name == "flat") return flat_scene(width, height);
  if (name == "lateral-slope") return lateral_slope_scene(width, height);
  if (name == "longitudinal-slope") return longitudinal_slope_scene(width, height);
  return std::nullopt;
}

namespace {

// First row at which the ground plane is at least `min_d` over all columns of the
// footprint. Ground disparity grows with v for every supported slope.
int ground_top_row(const PlaneEntry& plane, const CameraModel& cam, int col0, int col1, int height,
                   double min_d) {
  for (int v = 0; v < height; ++v) {
    if (plane_disparity(plane, cam, v, col0) >= min_d && plane_disparity(plane, cam, v, col1 - 1) >= min_d) return v;
  }
  return height;
}

Rgb random_ground_color(Rng& rng) {
  const int g = static_cast<int>(rng.uniform_int(80, 125));
  return Rgb{clamp_u8(g + static_cast<int>(rng.uniform_int(0, 15))), clamp_u8(g + static_cast<int>(rng.uniform_int(-5, 8))),
             clamp_u8(g - static_cast<int>(rng.uniform_int(0, 12)))};
}

// Saturated colors far from the gray-brown ground palette.
Rgb random_obstacle_color(Rng& rng) {
  static constexpr Rgb palette[] = {{200, 60, 50},  {60, 170, 70},  {210, 190, 40}, {170, 70, 190},
                                    {40, 150, 200}, {230, 130, 40}, {240, 240, 240}, {30, 30, 40}};
  Rgb c = palette[rng.uniform_int(0, std::size(palette) - 1)];
  auto j = [&](std::uint8_t x) { return clamp_u8(x + static_cast<int>(rng.uniform_int(-15, 15))); };
  return Rgb{j(c.r), j(c.g), j(c.b)};
}

PlaneEntry random_ground(Rng& rng, const CameraModel& cam, int col0, int col1, int height) {
  PlaneEntry g;
  switch (rng.uniform_int(0, 2)) {
    case 0: g.kind = PlaneKind::HorizontalGround; break;
    case 1:
      g.kind = PlaneKind::LateralSlopeGround;
      g.angle_deg = rng.uniform(3.0, 12.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      break;
    default:
      g.kind = PlaneKind::LongitudinalSlopeGround;
      g.angle_deg = rng.uniform(-2.0, 6.0);
      g.distance_m = rng.uniform(5.0, 15.0);
      break;
  }
  g.color = random_ground_color(rng);
  const int top = ground_top_row(g, cam, col0, col1, height, 0.5) + static_cast<int>(rng.uniform_int(0, height / 12));
  g.footprint = {std::min(top, height - 1), col0, height, col1};
  return g;
}

}  // namespace

PlaneSceneSpec random_scene(std::uint64_t seed, int width, int height, const CameraModel& cam) {
  Rng rng(mix64(seed));
  PlaneSceneSpec spec{width, height, {}};

  if (rng.uniform() < 0.5) {
    spec.planes.push_back(random_ground(rng, cam, 0, width, height));
  } else {
    const int split = static_cast<int>(rng.uniform_int(width / 4, 3 * width / 4));
    spec.planes.push_back(random_ground(rng, cam, 0, split, height));
    spec.planes.push_back(random_ground(rng, cam, split, width, height));
  }

  const int v0 = static_cast<int>(cam.horizon_row_v0);
  const int obstacles = static_cast<int>(rng.uniform_int(1, 4));
  for (int i = 0; i < obstacles; ++i) {
    PlaneEntry o;
    const auto pick = rng.uniform_int(0, 2);
    o.kind = pick == 0 ? PlaneKind::FrontalObstacle
                       : (pick == 1 ? PlaneKind::LeftLateralObstacle : PlaneKind::RightLateralObstacle);
    o.color = random_obstacle_color(rng);
    const int w = static_cast<int>(rng.uniform_int(width / 8, width / 3));
    const int col0 = static_cast<int>(rng.uniform_int(0, width - w));
    const int row0 = static_cast<int>(rng.uniform_int(0, std::max(0, v0 - 1)));
    const int row1 = static_cast<int>(rng.uniform_int(std::min(v0 + 5, height - 1), std::max(v0 + 5, height - 5)));
    o.footprint = {row0, col0, std::min(row1, height), col0 + w};
    if (o.kind == PlaneKind::FrontalObstacle) {
      o.distance_m = rng.uniform(8.0, 40.0);
    } else {
      // Keep the wall in front of the camera over its whole footprint.
      o.distance_m = rng.uniform(10.0, 40.0);
      o.angle_deg = rng.uniform(30.0, 70.0);
      while (std::min(plane_disparity(o, cam, row0, col0), plane_disparity(o, cam, row0, col0 + w - 1)) < 1.0) {
        o.angle_deg *= 0.5;
      }
    }
    spec.planes.push_back(o);
  }
  return spec;
}

RgbImage render_overlay(const RgbImage& image, const Mask& mask, Rgb color, double alpha) {
  require_same_shape(image, mask, "render_overlay");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("overlay alpha must lie in [0, 1]");
  RgbImage out = image;
  auto blend = [alpha](std::uint8_t in, std::uint8_t c) {
    return clamp_u8(static_cast<int>(std::lround((1.0 - alpha) * in + alpha * c)));
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask.data()[i]) continue;
    Rgb& p = out.data()[i];
    p = Rgb{blend(p.r, color.r), blend(p.g, color.g), blend(p.b, color.b)};
  }
  return out;
}

}  // namespace gpd
