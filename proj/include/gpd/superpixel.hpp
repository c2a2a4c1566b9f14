#pragma once

#include <cstdint>
#include <vector>

#include "gpd/image.hpp"

namespace gpd {

struct SlicParams {
  int region_count = 600;
  double compactness = 10.0;
  int iterations = 10;
  /// Components smaller than this fraction of S² are merged into a neighbour.
  double connectivity_min_fraction = 0.25;

  void validate() const;
};

struct Region {
  std::size_t pixel_count = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  double mean_r = 0.0, mean_g = 0.0, mean_b = 0.0;
};

/// Dense region ids 0..R-1 per pixel plus per-region statistics.
struct SuperpixelLabeling {
  Grid<std::int32_t> labels;
  std::vector<Region> regions;

  int region_count() const { return static_cast<int>(regions.size()); }
};

/// CIE L*a*b* (D65) of an sRGB pixel.
struct Lab {
  double l = 0.0, a = 0.0, b = 0.0;
};
Lab srgb_to_lab(Rgb p);

/// SLIC on the CIELAB image: grid seeding moved to the lowest-gradient pixel of its
/// 3×3 neighbourhood, localized k-means with D² = d_lab² + (m/S)²·d_xy², then
/// connectivity enforcement. Fully deterministic.
SuperpixelLabeling slic_segment(const RgbImage& img, const SlicParams& p);

/// Grid seed positions (row, col) before gradient perturbation.
struct SeedGrid {
  int rows = 0, cols = 0;
  double step_row = 0.0, step_col = 0.0;
  std::vector<std::pair<double, double>> seeds;
};
SeedGrid slic_seed_grid(int width, int height, int region_count);

/// Recomputes per-region statistics and renumbers ids densely in row-major order of
/// first appearance.
SuperpixelLabeling relabel_dense(const Grid<std::int32_t>& labels, const RgbImage& img);

struct PatchCenter {
  int region = 0;
  int row = 0;
  int col = 0;
};

/// Region centroids rounded half-up to integer pixels.
std::vector<PatchCenter> region_patch_centers(const SuperpixelLabeling& lab);

/// Every pixel inherits its region's class. Throws if a region id has no class.
Mask project_region_classes(const SuperpixelLabeling& lab, const std::vector<std::uint8_t>& region_classes);

/// Strict pixel majority of `mask` inside each region; ties go to the negative class.
std::vector<std::uint8_t> region_majority(const SuperpixelLabeling& lab, const Mask& mask);

/// True when every region is a single 4-connected component.
bool regions_are_connected(const SuperpixelLabeling& lab);

/// Region ids as 16-bit samples; throws when ids exceed 65535.
Grid<std::uint16_t> labels_to_u16(const SuperpixelLabeling& lab);
RgbImage draw_boundaries(const RgbImage& img, const SuperpixelLabeling& lab, Rgb color = {255, 0, 0});

}  // namespace gpd
