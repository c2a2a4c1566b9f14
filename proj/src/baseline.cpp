#include "gpd/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gpd {

std::uint64_t VDisparityHistogram::total() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

int bins_for(const DisparityMap& d, double bin_width) {
  float max_d = 0.0f;
  for (float x : d.data())
    if (is_valid(x)) max_d = std::max(max_d, x);
  return static_cast<int>(std::floor(max_d / bin_width)) + 1;
}

VDisparityHistogram v_disparity(const DisparityMap& d, int bins, double bin_width) {
  if (bins < 1 || !(bin_width > 0.0)) throw std::invalid_argument("v-disparity needs bins >= 1 and bin_width > 0");
  VDisparityHistogram h{d.height(), bins, bin_width, std::vector<std::uint32_t>(static_cast<std::size_t>(d.height()) * bins)};
  for (int v = 0; v < d.height(); ++v) {
    for (float x : d.row(v)) {
      if (!is_valid(x)) continue;
      const int bin = std::clamp(static_cast<int>(std::floor(x / bin_width)), 0, bins - 1);
      ++h.counts[static_cast<std::size_t>(v) * bins + bin];
    }
  }
  return h;
}

GroundProfile fit_ground_line(const VDisparityHistogram& h, const HoughSettings& s) {
  if (h.total() == 0) throw std::invalid_argument("cannot fit a ground line to an empty v-disparity histogram");
  if (s.slope_steps < 1 || !(s.slope_max > s.slope_min)) throw std::invalid_argument("bad Hough slope range");

  const double bw = h.bin_width;
  const double slope_step = (s.slope_max - s.slope_min) / s.slope_steps;
  // Offsets span every line through the histogram at any admissible slope.
  const double offset_min = -std::max(0.0, s.slope_max) * (h.rows - 1) - bw;
  const double offset_max = h.bins * bw - std::min(0.0, s.slope_min) * (h.rows - 1) + bw;
  const int offsets = static_cast<int>(std::ceil((offset_max - offset_min) / bw)) + 1;

  std::vector<std::uint64_t> votes(static_cast<std::size_t>(s.slope_steps + 1) * offsets, 0);
  for (int v = 0; v < h.rows; ++v) {
    for (int k = 0; k < h.bins; ++k) {
      const std::uint32_t c = h.at(v, k);
      if (c == 0) continue;
      const double dc = (k + 0.5) * bw;
      for (int i = 0; i <= s.slope_steps; ++i) {
        const double slope = s.slope_min + i * slope_step;
        const int j = static_cast<int>(std::lround((dc - slope * v - offset_min) / bw));
        if (j >= 0 && j < offsets) votes[static_cast<std::size_t>(i) * offsets + j] += c;
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  double slope = s.slope_min + static_cast<double>(best / offsets) * slope_step;
  double offset = offset_min + static_cast<double>(best % offsets) * bw;

  // Weighted least squares over the inlier bins of the Hough line.
  double sw = 0, sv = 0, sd = 0, svv = 0, svd = 0;
  int first = h.rows, last = -1;
  for (int v = 0; v < h.rows; ++v) {
    for (int k = 0; k < h.bins; ++k) {
      const std::uint32_t c = h.at(v, k);
      if (c == 0) continue;
      const double dc = (k + 0.5) * bw;
      if (std::abs(dc - (slope * v + offset)) > bw) continue;
      const double w = c;
      sw += w;
      sv += w * v;
      sd += w * dc;
      svv += w * v * v;
      svd += w * v * dc;
      first = std::min(first, v);
      last = std::max(last, v);
    }
  }
  const double det = sw * svv - sv * sv;
  if (last <= first || !(det > 1e-9 * sw * sw)) {
    throw std::invalid_argument("ground line is underdetermined: inliers span fewer than two rows");
  }
  slope = (sw * svd - sv * sd) / det;
  offset = (sd - slope * sv) / sw;
  if (!std::isfinite(slope) || !std::isfinite(offset)) throw std::runtime_error("ground line fit diverged");
  return GroundProfile{slope, offset, first, last};
}

Mask classify_by_profile(const DisparityMap& d, const GroundProfile& g, double tol) {
  Mask m(d.width(), d.height());
  const int v0 = std::max(0, g.first_row);
  const int v1 = std::min(d.height() - 1, g.last_row);
  for (int v = v0; v <= v1; ++v) {
    const double expected = g.expected(v);
    for (int u = 0; u < d.width(); ++u) {
      const float x = d.at(v, u);
      m.at(v, u) = is_valid(x) && std::abs(x - expected) <= tol;
    }
  }
  return m;
}

Mask v_disparity_ground(const DisparityMap& d, double tol, double bin_width) {
  const VDisparityHistogram h = v_disparity(d, bins_for(d, bin_width), bin_width);
  if (h.total() == 0) return Mask(d.width(), d.height());
  try {
    return classify_by_profile(d, fit_ground_line(h), tol);
  } catch (const std::invalid_argument&) {
    return Mask(d.width(), d.height());  // no line support: nothing is ground
  }
}

Grid<std::uint8_t> histogram_to_gray8(const VDisparityHistogram& h) {
  Grid<std::uint8_t> g(h.bins, h.rows);
  std::uint32_t max_c = 0;
  for (auto c : h.counts) max_c = std::max(max_c, c);
  if (max_c == 0) return g;
  const double norm = std::log1p(static_cast<double>(max_c));
  for (int v = 0; v < h.rows; ++v)
    for (int k = 0; k < h.bins; ++k)
      g.at(v, k) = static_cast<std::uint8_t>(std::lround(255.0 * std::log1p(h.at(v, k)) / norm));
  return g;
}

}  // namespace gpd
