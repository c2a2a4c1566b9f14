#include "gpd/models.hpp"

namespace gpd {

using nn::Conv2d;
using nn::Dense;
using nn::MaxPool2;
using nn::Relu;
using nn::Shape;

nn::Network<float> build_ground_net(std::uint64_t seed, const GroundNetConfig& cfg) {
  nn::Network<float> net;
  net.arch = kGroundArch;
  net.input_shapes = {Shape{1, cfg.patch, cfg.patch}};
  nn::LayerStack<float> features;
  features.push_back(Conv2d<float>(1, cfg.conv1_channels, 5, 5));
  features.push_back(Relu{});
  features.push_back(MaxPool2{});
  features.push_back(Conv2d<float>(cfg.conv1_channels, cfg.conv2_channels, 3, 3));
  features.push_back(Relu{});
  features.push_back(MaxPool2{});
  net.branches.push_back(std::move(features));

  // Spatial trace: p → p-4 → /2 → -2 → /2.
  const int side = ((cfg.patch - 4) / 2 - 2) / 2;
  net.head.push_back(Dense<float>(cfg.conv2_channels * side * side, cfg.fc_units));
  net.head.push_back(Relu{});
  net.head.push_back(Dense<float>(cfg.fc_units, 2));
  net.output_shape();
  net.init(seed);
  return net;
}

namespace {

nn::LayerStack<float> fusion_path(int in_channels, const FusionNetConfig& cfg) {
  nn::LayerStack<float> path;
  int channels = in_channels;
  for (int rep = 0; rep < 2; ++rep) {
    path.push_back(Conv2d<float>(channels, cfg.conv3_channels, 3, 3));
    path.push_back(Relu{});
    path.push_back(Conv2d<float>(cfg.conv3_channels, cfg.conv1_channels, 1, 1));
    path.push_back(Relu{});
    path.push_back(MaxPool2{});
    channels = cfg.conv1_channels;
  }
  return path;
}

}  // namespace

nn::Network<float> build_fusion_net(std::uint64_t seed, const FusionNetConfig& cfg) {
  nn::Network<float> net;
  net.arch = kFusionArch;
  net.input_shapes = {Shape{3, cfg.patch, cfg.patch}, Shape{1, cfg.patch, cfg.patch}};
  net.branches.push_back(fusion_path(3, cfg));
  net.branches.push_back(fusion_path(1, cfg));

  // Spatial trace: p → p-2 → /2 → -2 → /2.
  const int side = ((cfg.patch - 2) / 2 - 2) / 2;
  net.head.push_back(Dense<float>(2 * cfg.conv1_channels * side * side, cfg.fc_units));
  net.head.push_back(Relu{});
  net.head.push_back(Dense<float>(cfg.fc_units, 2));
  net.output_shape();
  net.init(seed);
  return net;
}

}  // namespace gpd
