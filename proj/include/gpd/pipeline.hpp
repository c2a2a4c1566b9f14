#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gpd/descriptor.hpp"
#include "gpd/image.hpp"
#include "gpd/nn/network.hpp"
#include "gpd/superpixel.hpp"

namespace gpd {

/// One training or inference patch set. Ground samples carry a single 1×P×P
/// texture patch and (image, region); road samples carry a 3×P×P RGB patch and a
/// 1×P×P texture patch and (image, row, col) of the 4×4 region's top-left pixel.
struct Sample {
  std::vector<nn::Tensor<float>> inputs;
  int label = 0;
  int image = 0;
  int region = -1;
  int row = 0;
  int col = 0;
};

struct TrainConfig {
  float lr = 0.01f;
  float momentum = 0.9f;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Seeded split into train/validation, then epochs of shuffled mini-batch SGD with
/// momentum; the loss is averaged over each batch. Throws TrainingDiverged when a
/// loss turns non-finite.
std::vector<EpochMetrics> train(nn::Network<float>& net, const std::vector<Sample>& samples, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {});

/// Argmax class (ties resolve to the negative class).
int classify(const nn::Network<float>& net, const std::vector<nn::Tensor<float>>& inputs);

/// Mean loss and accuracy of `net` over samples.
std::pair<double, double> evaluate(const nn::Network<float>& net, const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& indices);

// --- ground detection ---------------------------------------------------------

struct GroundScene {
  RgbImage rgb;
  TextureMap texture;
  Mask ground;
};

/// Top-left corner of a P×P patch centred on (row, col), shifted to lie inside the image.
std::pair<int, int> clamped_patch_origin(int row, int col, int patch, int width, int height);

/// Normalized texture patch; `any_valid` reports whether it holds any valid texel.
nn::Tensor<float> texture_patch(const TextureMap& t, int top, int left, int patch, bool* any_valid = nullptr);

/// One candidate per superpixel: the patch at the clamped centroid, labelled by the
/// strict pixel majority of the region (ties non-ground).
std::vector<Sample> ground_candidates(const GroundScene& scene, const SuperpixelLabeling& lab, int patch, int image_id);

/// Uniformly (seeded) subsamples the majority class down to the minority count.
/// Survivors keep their original order.
std::vector<Sample> balance_classes(std::vector<Sample> samples, std::uint64_t seed);

/// SLIC on each RGB image, candidates per region, then class balancing over the whole set.
std::vector<Sample> extract_ground_samples(const std::vector<GroundScene>& scenes, const SlicParams& slic, int patch,
                                           std::uint64_t seed);

struct GroundDetectParams {
  DescriptorParams descriptor;
  SlicParams slic;
  int patch = 32;
};

/// texture map → SLIC on the RGB image → centroid patch per region → CNN class →
/// projection onto pixels. Regions whose patch holds no valid texture are non-ground.
Mask detect_ground(const RgbImage& rgb, const DisparityMap& disparity, const nn::Network<float>& net,
                   const GroundDetectParams& params);
Mask detect_ground_from_texture(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net,
                                const GroundDetectParams& params);

// --- road segmentation ----------------------------------------------------------

inline constexpr int kRoadCell = 4;

/// Reflect-101 index into [0, n).
int reflect_index(int i, int n);

/// Region-grid dimensions: ceil(H/4) × ceil(W/4).
std::pair<int, int> road_grid_size(int width, int height);

/// RGB (scaled to [0,1]) and normalized texture patches of side `patch` centred on
/// the 4×4 cell whose top-left pixel is (row, col), read through reflection padding.
std::vector<nn::Tensor<float>> road_patch(const RgbImage& rgb, const TextureMap& texture, int row, int col, int patch);

/// One sample per 4×4 cell (stride 4) whose in-image pixels are single-class; mixed
/// cells are skipped.
std::vector<Sample> extract_road_samples(const RgbImage& rgb, const TextureMap& texture, const Mask& road, int patch,
                                         int image_id = 0);

/// Raw class scores per 4×4 cell.
struct RoadScores {
  Grid<float> negative;
  Grid<float> positive;

  Mask to_mask(int width, int height) const;
};

/// Runs the fully convolutional form of `net` once over the reflection-padded pair.
RoadScores road_scores_fcn(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net);
/// Reference path: forward() on the patch of every 4×4 cell.
RoadScores road_scores_patchwise(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net);

Mask segment_road(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net);

// --- datasets -----------------------------------------------------------------------

struct ManifestEntry {
  std::filesystem::path rgb;
  std::filesystem::path disparity;
  std::filesystem::path mask;
};

/// Lines of `<rgb> <disparity> <mask>`; relative paths resolve against the manifest's
/// directory. Blank lines and lines starting with '#' are skipped.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Sample sets in the checkpoint container style: "GPDS" | u32 version | u32 count |
/// per sample: u32 inputs | (u32 c,h,w | f32 data) per input | u32 label | i32 image,
/// region, row, col.
void save_samples(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::vector<Sample> load_samples(const std::filesystem::path& path);

}  // namespace gpd
