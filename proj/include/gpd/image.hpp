#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpd {

/// Row-major H×W grid. Rows are indexed by v (growing downward), columns by u.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("grid dimensions must be positive, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int v, int u) const { return v >= 0 && v < height_ && u >= 0 && u < width_; }

  T& at(int v, int u) { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  const T& at(int v, int u) const { return data_[static_cast<std::size_t>(v) * width_ + u]; }

  std::span<T> row(int v) { return {data_.data() + static_cast<std::size_t>(v) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int v) const {
    return {data_.data() + static_cast<std::size_t>(v) * width_, static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Grid& other) const { return width_ == other.width_ && height_ == other.height_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

inline constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

inline bool is_valid(float value) { return !std::isnan(value); }

/// Disparity in pixels. Invalid pixels hold NaN; valid ones are >= 0.
class DisparityMap : public Grid<float> {
 public:
  DisparityMap() = default;
  DisparityMap(int width, int height) : Grid<float>(width, height, kInvalid) {}
};

/// Block-averaged vertical disparity gradient in px/row. Invalid pixels hold NaN.
class TextureMap : public Grid<float> {
 public:
  TextureMap() = default;
  TextureMap(int width, int height) : Grid<float>(width, height, kInvalid) {}
};

/// Binary class map: 1 = positive (ground / road), 0 = negative.
class Mask : public Grid<std::uint8_t> {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0) : Grid<std::uint8_t>(width, height, fill) {}

  std::size_t count_positive() const {
    std::size_t n = 0;
    for (auto x : data()) n += x != 0;
    return n;
  }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Grid<Rgb>;

inline void require_same_shape(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(w0) + "x" +
                                std::to_string(h0) + " vs " + std::to_string(w1) + "x" + std::to_string(h1) + ")");
  }
}

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  require_same_shape(a.width(), a.height(), b.width(), b.height(), what);
}

}  // namespace gpd
