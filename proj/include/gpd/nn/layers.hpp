#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "gpd/nn/tensor.hpp"
#include "gpd/random.hpp"

namespace gpd::nn {

/// Valid cross-correlation, stride 1, no padding. Weights are (out, in, kh, kw).
template <class T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, kh = 0, kw = 0;
  std::vector<T> weight;
  std::vector<T> bias;

  Conv2d() = default;
  Conv2d(int in, int out, int kernel_h, int kernel_w)
      : in_ch(in), out_ch(out), kh(kernel_h), kw(kernel_w),
        weight(static_cast<std::size_t>(out) * in * kernel_h * kernel_w), bias(out) {}

  Shape output_shape(const Shape& s) const {
    if (s.c != in_ch) throw ShapeError("conv expects " + std::to_string(in_ch) + " channels, got " + s.str());
    if (s.h < kh || s.w < kw) throw ShapeError("conv kernel larger than input " + s.str());
    return {out_ch, s.h - kh + 1, s.w - kw + 1};
  }

  void forward(const Tensor<T>& in, Tensor<T>& out) const {
    const Shape os = output_shape(in.shape);
    out = Tensor<T>(os);
    const int ih = in.shape.h, iw = in.shape.w;
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    for (int oc = 0; oc < out_ch; ++oc) {
      T* dst_plane = out.data.data() + oc * plane;
      std::fill(dst_plane, dst_plane + plane, bias[oc]);
      for (int ic = 0; ic < in_ch; ++ic) {
        const T* src_plane = in.data.data() + static_cast<std::size_t>(ic) * ih * iw;
        const T* wk = weight.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = wk[ky * kw + kx];
            for (int y = 0; y < os.h; ++y) {
              const T* src = src_plane + static_cast<std::size_t>(y + ky) * iw + kx;
              T* dst = dst_plane + static_cast<std::size_t>(y) * os.w;
              for (int x = 0; x < os.w; ++x) dst[x] += wv * src[x];
            }
          }
        }
      }
    }
  }

  /// Accumulates parameter gradients; writes the input gradient when `din` is non-null.
  void backward(const Tensor<T>& in, const Tensor<T>& dout, std::vector<T>& dweight, std::vector<T>& dbias,
                Tensor<T>* din) const {
    const Shape os = dout.shape;
    const int ih = in.shape.h, iw = in.shape.w;
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    if (din) *din = Tensor<T>(in.shape);
    for (int oc = 0; oc < out_ch; ++oc) {
      const T* g_plane = dout.data.data() + oc * plane;
      T bsum = 0;
      for (std::size_t i = 0; i < plane; ++i) bsum += g_plane[i];
      dbias[oc] += bsum;
      for (int ic = 0; ic < in_ch; ++ic) {
        const std::size_t in_off = static_cast<std::size_t>(ic) * ih * iw;
        const std::size_t wbase = (static_cast<std::size_t>(oc) * in_ch + ic) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = weight[wbase + ky * kw + kx];
            T acc = 0;
            for (int y = 0; y < os.h; ++y) {
              const T* src = in.data.data() + in_off + static_cast<std::size_t>(y + ky) * iw + kx;
              const T* g = g_plane + static_cast<std::size_t>(y) * os.w;
              for (int x = 0; x < os.w; ++x) acc += g[x] * src[x];
              if (din) {
                T* d = din->data.data() + in_off + static_cast<std::size_t>(y + ky) * iw + kx;
                for (int x = 0; x < os.w; ++x) d[x] += wv * g[x];
              }
            }
            dweight[wbase + ky * kw + kx] += acc;
          }
        }
      }
    }
  }
};

/// Affine map on the flattened (c, h, w) input. Weights are (out, in).
template <class T>
struct Dense {
  int in_features = 0, out_features = 0;
  std::vector<T> weight;
  std::vector<T> bias;

  Dense() = default;
  Dense(int in, int out)
      : in_features(in), out_features(out), weight(static_cast<std::size_t>(in) * out), bias(out) {}

  Shape output_shape(const Shape& s) const {
    if (s.size() != static_cast<std::size_t>(in_features)) {
      throw ShapeError("fully connected layer expects " + std::to_string(in_features) + " inputs, got " + s.str());
    }
    return {out_features, 1, 1};
  }

  void forward(const Tensor<T>& in, Tensor<T>& out) const {
    out = Tensor<T>(output_shape(in.shape));
    const T* x = in.data.data();
    for (int o = 0; o < out_features; ++o) {
      const T* wr = weight.data() + static_cast<std::size_t>(o) * in_features;
      T acc = 0;
      for (int i = 0; i < in_features; ++i) acc += wr[i] * x[i];
      out.data[o] = acc + bias[o];
    }
  }

  void backward(const Tensor<T>& in, const Tensor<T>& dout, std::vector<T>& dweight, std::vector<T>& dbias,
                Tensor<T>* din) const {
    if (din) *din = Tensor<T>(in.shape);
    const T* x = in.data.data();
    for (int o = 0; o < out_features; ++o) {
      const T g = dout.data[o];
      dbias[o] += g;
      if (g == T{0}) continue;
      T* dw = dweight.data() + static_cast<std::size_t>(o) * in_features;
      for (int i = 0; i < in_features; ++i) dw[i] += g * x[i];
      if (din) {
        const T* wr = weight.data() + static_cast<std::size_t>(o) * in_features;
        T* dx = din->data.data();
        for (int i = 0; i < in_features; ++i) dx[i] += g * wr[i];
      }
    }
  }
};

struct Relu {
  Shape output_shape(const Shape& s) const { return s; }

  template <class T>
  void forward(const Tensor<T>& in, Tensor<T>& out) const {
    out = Tensor<T>(in.shape);
    for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] > T{0} ? in.data[i] : T{0};
  }

  /// The derivative at exactly 0 is taken as 0.
  template <class T>
  void backward(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& din) const {
    din = Tensor<T>(in.shape);
    for (std::size_t i = 0; i < in.data.size(); ++i) din.data[i] = in.data[i] > T{0} ? dout.data[i] : T{0};
  }
};

/// 2×2 max pooling with stride 2; spatial dims must be even.
struct MaxPool2 {
  Shape output_shape(const Shape& s) const {
    if (s.h % 2 != 0 || s.w % 2 != 0) throw ShapeError("2x2 max pool needs even spatial dims, got " + s.str());
    return {s.c, s.h / 2, s.w / 2};
  }

  /// `argmax` receives the flat input index chosen for every output element; ties
  /// keep the first element in row-major order.
  template <class T>
  void forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::uint32_t>* argmax) const {
    const Shape os = output_shape(in.shape);
    out = Tensor<T>(os);
    if (argmax) argmax->resize(os.size());
    std::size_t o = 0;
    for (int c = 0; c < os.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int x = 0; x < os.w; ++x, ++o) {
          const std::size_t base = (static_cast<std::size_t>(c) * in.shape.h + 2 * y) * in.shape.w + 2 * x;
          const std::size_t cand[4] = {base, base + 1, base + in.shape.w, base + in.shape.w + 1};
          std::size_t best = cand[0];
          for (int k = 1; k < 4; ++k)
            if (in.data[cand[k]] > in.data[best]) best = cand[k];
          out.data[o] = in.data[best];
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }

  template <class T>
  void backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax, const Tensor<T>& dout,
                Tensor<T>& din) const {
    din = Tensor<T>(in_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) din.data[argmax[o]] += dout.data[o];
  }
};

template <class T>
using Layer = std::variant<Conv2d<T>, Relu, MaxPool2, Dense<T>>;

template <class T>
Shape output_shape(const Layer<T>& layer, const Shape& s) {
  return std::visit([&](const auto& l) { return l.output_shape(s); }, layer);
}

/// Glorot-uniform weights, zero biases, drawn in layer order.
template <class T>
void init_glorot(Layer<T>& layer, Rng& rng) {
  auto fill = [&rng](std::vector<T>& w, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& x : w) x = static_cast<T>(rng.uniform(-a, a));
  };
  if (auto* c = std::get_if<Conv2d<T>>(&layer)) {
    const double area = static_cast<double>(c->kh) * c->kw;
    fill(c->weight, c->in_ch * area, c->out_ch * area);
    std::fill(c->bias.begin(), c->bias.end(), T{0});
  } else if (auto* d = std::get_if<Dense<T>>(&layer)) {
    fill(d->weight, d->in_features, d->out_features);
    std::fill(d->bias.begin(), d->bias.end(), T{0});
  }
}

template <class U, class T>
Layer<U> cast_layer(const Layer<T>& layer) {
  auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
  if (auto* c = std::get_if<Conv2d<T>>(&layer)) {
    Conv2d<U> out(c->in_ch, c->out_ch, c->kh, c->kw);
    out.weight = conv(c->weight);
    out.bias = conv(c->bias);
    return out;
  }
  if (auto* d = std::get_if<Dense<T>>(&layer)) {
    Dense<U> out(d->in_features, d->out_features);
    out.weight = conv(d->weight);
    out.bias = conv(d->bias);
    return out;
  }
  if (std::holds_alternative<Relu>(layer)) return Relu{};
  return MaxPool2{};
}

}  // namespace gpd::nn
