#pragma once

#include <cstdint>
#include <string>

#include "gpd/nn/network.hpp"

namespace gpd {

inline constexpr const char* kGroundArch = "ground_v1";
inline constexpr const char* kFusionArch = "fusion_v1";

/// Ground-plane patch classifier:
///   conv 5×5×20 → relu → pool 2×2 → conv 3×3×20 → relu → pool 2×2 → fc 500 → relu → fc 2.
/// The widths are parameters so gradient checks can run on narrower copies.
struct GroundNetConfig {
  int patch = 32;
  int conv1_channels = 20;
  int conv2_channels = 20;
  int fc_units = 500;
};

/// Two-path late-fusion road classifier. Each path (RGB: 3 channels, texture: 1):
///   [conv 3×3×32 → relu → conv 1×1×16 → relu → pool 2×2] × 2
/// with independent weights; path outputs are channel-concatenated (RGB first) and
/// fed to fc 1000 → relu → fc 2.
struct FusionNetConfig {
  int patch = 30;
  int conv3_channels = 32;
  int conv1_channels = 16;
  int fc_units = 1000;
};

nn::Network<float> build_ground_net(std::uint64_t seed, const GroundNetConfig& cfg = {});
nn::Network<float> build_fusion_net(std::uint64_t seed, const FusionNetConfig& cfg = {});

template <class T>
nn::Network<T> build_ground_net_as(std::uint64_t seed, const GroundNetConfig& cfg = {}) {
  return build_ground_net(seed, cfg).template cast<T>();
}

/// Class index convention for both nets.
inline constexpr int kNegativeClass = 0;
inline constexpr int kPositiveClass = 1;

/// Rewrites fully connected layers as convolutions: the first one becomes a
/// conv whose kernel spans its whole input map, later ones become 1×1 convs.
/// Values are reinterpreted, not changed. Throws if the net is already fully
/// convolutional or has a fully connected layer inside a branch.
template <class T>
nn::Network<T> fcn_convert(const nn::Network<T>& net) {
  if (net.fully_convolutional) throw std::invalid_argument("network is already fully convolutional");
  for (const auto& stack : net.branches)
    for (const auto& layer : stack)
      if (std::holds_alternative<nn::Dense<T>>(layer))
        throw std::invalid_argument("unsupported layer stack: fully connected layer before fusion");
  const auto shapes = net.head_input_shapes();
  nn::Network<T> out = net;
  for (std::size_t i = 0; i < out.head.size(); ++i) {
    auto* d = std::get_if<nn::Dense<T>>(&out.head[i]);
    if (!d) continue;
    const nn::Shape s = shapes[i];
    nn::Conv2d<T> conv(s.c, d->out_features, s.h, s.w);
    conv.weight = d->weight;  // (out, c, h, w) is the flattened (out, in) layout
    conv.bias = d->bias;
    out.head[i] = std::move(conv);
  }
  out.fully_convolutional = true;
  out.arch = "fcn_" + net.arch;
  return out;
}

}  // namespace gpd
