#pragma once

#include <cstdint>
#include <vector>

#include "gpd/descriptor.hpp"
#include "gpd/pipeline.hpp"
#include "gpd/random.hpp"
#include "gpd/superpixel.hpp"
#include "gpd/synth.hpp"

namespace gpd::test {

/// Pixels whose whole texture stencil (both blocks and the rows between them) lies
/// inside the image and on the pixel's own plane.
inline Mask interior_mask(const SynthScene& s, int block) {
  const int h = block / 2;
  const int reach = block + h;
  Mask out(s.plane_id.width(), s.plane_id.height());
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      const int id = s.plane_id.at(v, u);
      if (id < 0) continue;
      bool inside = true;
      for (int dv = -reach; dv <= reach && inside; ++dv)
        for (int du = -h; du <= h && inside; ++du)
          inside = s.plane_id.contains(v + dv, u + du) && s.plane_id.at(v + dv, u + du) == id;
      out.at(v, u) = inside ? 1 : 0;
    }
  }
  return out;
}

/// Adds seeded N(0, sigma) noise to every valid disparity; results below a small
/// positive floor are clamped so they stay valid.
inline DisparityMap add_noise(const DisparityMap& d, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  DisparityMap out = d;
  for (float& x : out.data()) {
    if (!is_valid(x)) continue;
    x = static_cast<float>(std::max(1e-3, x + sigma * rng.normal()));
  }
  return out;
}

inline GroundScene ground_scene(const SynthScene& s, const DescriptorParams& p) {
  return GroundScene{s.rgb, texture_map(s.disparity, p), s.ground};
}

/// Settings used for the 240×120 synthetic suite.
inline SlicParams synthetic_slic() {
  SlicParams p;
  p.region_count = 300;
  return p;
}

}  // namespace gpd::test
