#pragma once

#include "gpd/image.hpp"

namespace gpd {

struct DescriptorParams {
  /// Odd block side; the texture compares the blocks b rows below and b rows above.
  int block_size = 3;
  /// A block mean is invalid when fewer than this fraction of its pixels are valid.
  double min_valid_fraction = 0.5;
  /// Binarization threshold in disparity px per row.
  double binarize_threshold = 0.1;

  void validate() const;
};

/// Disparity texture map.
///
/// With D_b(v,u) the mean of valid disparities in the b×b block centred on (v,u),
///   T(v,u) = (D_b(v+b,u) - D_b(v-b,u)) / (2b),
/// the vertical disparity gradient in px/row. Rows grow downward, so ground planes
/// give T > 0 and fronto-parallel or lateral obstacles give T ≈ 0. Pixels whose
/// stencil leaves the image, or whose blocks lack valid support, are invalid.
TextureMap texture_map(const DisparityMap& d, const DescriptorParams& p);

/// Positive iff the texture is valid and strictly above `threshold`.
Mask binarize(const TextureMap& t, double threshold);

/// Visualization: clamp(T / t_max, 0, 1) * 255, invalid pixels black.
Grid<std::uint8_t> texture_to_gray8(const TextureMap& t, double t_max = 1.0);

/// Network input encoding: clamp(T / scale, -1, 1), invalid pixels map to 0.
inline float normalize_texture(float t, float scale = 1.0f) {
  if (!is_valid(t)) return 0.0f;
  const float x = t / scale;
  return x < -1.0f ? -1.0f : (x > 1.0f ? 1.0f : x);
}

}  // namespace gpd
