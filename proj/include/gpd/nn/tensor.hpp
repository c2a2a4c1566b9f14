#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpd::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// (channels, height, width). Feature vectors are (n, 1, 1).
struct Shape {
  int c = 0, h = 0, w = 0;

  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  std::string str() const { return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{}) : shape(s), data(s.size(), fill) {}
  Tensor(Shape s, std::vector<T> values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.size()) throw ShapeError("tensor data length does not match shape " + shape.str());
  }

  T& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x]; }
  const T& at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x]; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

}  // namespace gpd::nn
