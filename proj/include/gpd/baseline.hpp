#pragma once

#include <cstdint>
#include <vector>

#include "gpd/image.hpp"

namespace gpd {

/// Row × disparity-bin accumulator.
struct VDisparityHistogram {
  int rows = 0;
  int bins = 0;
  double bin_width = 1.0;
  std::vector<std::uint32_t> counts;  // rows × bins, row-major

  std::uint32_t at(int row, int bin) const { return counts[static_cast<std::size_t>(row) * bins + bin]; }
  std::uint64_t total() const;
};

/// Ground line d̂(v) = slope·v + offset, defined on rows [first_row, last_row].
struct GroundProfile {
  double slope = 0.0;
  double offset = 0.0;
  int first_row = 0;
  int last_row = -1;

  double expected(int row) const { return slope * row + offset; }
};

/// Bin of each valid pixel is floor(d / bin_width), clamped to the last bin.
VDisparityHistogram v_disparity(const DisparityMap& d, int bins, double bin_width = 1.0);

/// Bin count covering the largest valid disparity at `bin_width`.
int bins_for(const DisparityMap& d, double bin_width = 1.0);

struct HoughSettings {
  double slope_min = 0.0;
  double slope_max = 1.0;
  int slope_steps = 200;
};

/// Count-weighted Hough vote over (slope, offset) followed by a count-weighted
/// least-squares refit on bins within one bin of the winning line. Throws on an
/// empty histogram or when fewer than two rows support the line.
GroundProfile fit_ground_line(const VDisparityHistogram& h, const HoughSettings& settings = {});

/// Ground iff valid and |d(v,u) - d̂(v)| <= tol on rows the profile covers.
Mask classify_by_profile(const DisparityMap& d, const GroundProfile& g, double tol = 1.0);

/// v_disparity → fit_ground_line → classify_by_profile with default settings.
Mask v_disparity_ground(const DisparityMap& d, double tol = 1.0, double bin_width = 1.0);

/// Histogram as an 8-bit image, log-scaled for inspection.
Grid<std::uint8_t> histogram_to_gray8(const VDisparityHistogram& h);

}  // namespace gpd
