#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gpd/image.hpp"

namespace gpd {

/// Raised for unreadable, malformed or inconsistent input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DisparityFormat { KittiPng16, Pfm };

DisparityFormat disparity_format_from_path(const std::filesystem::path& path);

/// kitti-png16: value/256, stored 0 is invalid. pfm: floats as stored, values <= 0 are invalid.
DisparityMap load_disparity(const std::filesystem::path& path, DisparityFormat format);
DisparityMap load_disparity(const std::filesystem::path& path);

/// Quantizes to round(d*256) clamped to [1, 65535]; invalid pixels are written as 0.
void save_disparity_png16(const DisparityMap& d, const std::filesystem::path& path);

/// Grayscale "Pf" file, little-endian (negative scale). NaN is written through unchanged.
void save_pfm(const Grid<float>& g, const std::filesystem::path& path);
Grid<float> load_pfm(const std::filesystem::path& path);

/// 8-bit PNG, 0 = negative, 255 = positive. Loading treats any nonzero sample as positive.
void save_mask_png(const Mask& m, const std::filesystem::path& path);
Mask load_mask_png(const std::filesystem::path& path);

void save_rgb_png(const RgbImage& img, const std::filesystem::path& path);
RgbImage load_rgb_png(const std::filesystem::path& path);

void save_gray8_png(const Grid<std::uint8_t>& g, const std::filesystem::path& path);
void save_gray16_png(const Grid<std::uint16_t>& g, const std::filesystem::path& path);

}  // namespace gpd
