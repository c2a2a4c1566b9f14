#include "gpd/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gpd {

void DescriptorParams::validate() const {
  if (block_size < 1 || block_size % 2 == 0) {
    throw std::invalid_argument("descriptor block size must be odd and >= 1, got " + std::to_string(block_size));
  }
  if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0)) {
    throw std::invalid_argument("min_valid_fraction must lie in [0, 1]");
  }
  if (!(binarize_threshold > 0.0)) throw std::invalid_argument("binarize threshold must be positive");
}

TextureMap texture_map(const DisparityMap& d, const DescriptorParams& p) {
  p.validate();
  const int w = d.width(), h = d.height();
  const int b = p.block_size;
  const int r = b / 2;

  // Block means; NaN where the block leaves the image or lacks support.
  Grid<double> means(w, h, std::nan(""));
  const int needed = std::max(1, static_cast<int>(std::ceil(p.min_valid_fraction * b * b - 1e-9)));
  for (int v = r; v < h - r; ++v) {
    for (int u = r; u < w - r; ++u) {
      double sum = 0.0;
      int count = 0;
      for (int dv = -r; dv <= r; ++dv) {
        const auto row = d.row(v + dv);
        for (int du = -r; du <= r; ++du) {
          const float x = row[u + du];
          if (is_valid(x)) {
            sum += x;
            ++count;
          }
        }
      }
      if (count >= needed) means.at(v, u) = sum / count;
    }
  }

  TextureMap t(w, h);
  const double norm = 2.0 * b;
  for (int v = b; v < h - b; ++v) {
    for (int u = 0; u < w; ++u) {
      const double below = means.at(v + b, u);
      const double above = means.at(v - b, u);
      if (std::isnan(below) || std::isnan(above)) continue;
      t.at(v, u) = static_cast<float>((below - above) / norm);
    }
  }
  return t;
}

Mask binarize(const TextureMap& t, double threshold) {
  Mask m(t.width(), t.height());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float x = t.data()[i];
    m.data()[i] = is_valid(x) && x > threshold;
  }
  return m;
}

Grid<std::uint8_t> texture_to_gray8(const TextureMap& t, double t_max) {
  Grid<std::uint8_t> g(t.width(), t.height());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float x = t.data()[i];
    if (!is_valid(x)) continue;
    const double s = std::clamp(x / t_max, 0.0, 1.0);
    g.data()[i] = static_cast<std::uint8_t>(std::lround(s * 255.0));
  }
  return g;
}

}  // namespace gpd
