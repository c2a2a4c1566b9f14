#include "gpd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpd/binary_io.hpp"
#include "gpd/io.hpp"
#include "gpd/models.hpp"
#include "gpd/random.hpp"

namespace gpd {

// --- training -------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lr >= 0.0f) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be finite and >= 0");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epoch count must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
}

namespace {

int argmax(const std::vector<float>& scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

int classify(const nn::Network<float>& net, const std::vector<nn::Tensor<float>>& inputs) {
  return argmax(nn::forward(net, inputs).data);
}

std::pair<double, double> evaluate(const nn::Network<float>& net, const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& indices) {
  if (indices.empty()) return {0.0, 0.0};
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    const auto out = nn::forward(net, samples[i].inputs);
    loss += nn::cross_entropy<float>(out.data, samples[i].label);
    correct += argmax(out.data) == samples[i].label;
  }
  return {loss / indices.size(), static_cast<double>(correct) / indices.size()};
}

std::vector<EpochMetrics> train(nn::Network<float>& net, const std::vector<Sample>& samples, const TrainConfig& cfg,
                                const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("training set is empty");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(std::lround(cfg.validation_fraction * samples.size()));
  if (samples.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  else n_val = 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  nn::Sgd<float> sgd(cfg.lr, cfg.momentum);
  auto grads = nn::Gradients<float>::zeros_like(net);
  nn::ForwardTrace<float> trace;
  std::vector<EpochMetrics> history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(tr);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < tr.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(tr.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grads.zero();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = samples[tr[k]];
        const float l = nn::backward(net, s.inputs, s.label, grads, &trace);
        if (!std::isfinite(l)) {
          throw TrainingDiverged("loss became non-finite in epoch " + std::to_string(epoch));
        }
        loss_sum += l;
        correct += argmax(trace.output.data) == s.label;
      }
      sgd.step(net, grads, end - start);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = tr.empty() ? 0.0 : loss_sum / tr.size();
    m.train_accuracy = tr.empty() ? 0.0 : static_cast<double>(correct) / tr.size();
    std::tie(m.val_loss, m.val_accuracy) = evaluate(net, samples, val);
    if (!std::isfinite(m.val_loss)) throw TrainingDiverged("validation loss became non-finite");
    history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return history;
}

// --- ground detection -------------------------------------------------------------

std::pair<int, int> clamped_patch_origin(int row, int col, int patch, int width, int height) {
  if (width < patch || height < patch) {
    throw std::invalid_argument("image " + std::to_string(width) + "x" + std::to_string(height) +
                                " is smaller than the " + std::to_string(patch) + " px patch");
  }
  const int top = std::clamp(row - patch / 2, 0, height - patch);
  const int left = std::clamp(col - patch / 2, 0, width - patch);
  return {top, left};
}

nn::Tensor<float> texture_patch(const TextureMap& t, int top, int left, int patch, bool* any_valid) {
  nn::Tensor<float> x(nn::Shape{1, patch, patch});
  bool valid = false;
  for (int y = 0; y < patch; ++y) {
    for (int xx = 0; xx < patch; ++xx) {
      const float v = t.at(top + y, left + xx);
      valid = valid || is_valid(v);
      x.at(0, y, xx) = normalize_texture(v);
    }
  }
  if (any_valid) *any_valid = valid;
  return x;
}

std::vector<Sample> ground_candidates(const GroundScene& scene, const SuperpixelLabeling& lab, int patch,
                                      int image_id) {
  require_same_shape(scene.texture, scene.ground, "ground_candidates");
  require_same_shape(scene.texture, lab.labels, "ground_candidates");
  const auto classes = region_majority(lab, scene.ground);
  std::vector<Sample> out;
  for (const PatchCenter& c : region_patch_centers(lab)) {
    const auto [top, left] = clamped_patch_origin(c.row, c.col, patch, scene.texture.width(), scene.texture.height());
    Sample s;
    s.inputs.push_back(texture_patch(scene.texture, top, left, patch));
    s.label = classes[c.region] ? kPositiveClass : kNegativeClass;
    s.image = image_id;
    s.region = c.region;
    s.row = c.row;
    s.col = c.col;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> balance_classes(std::vector<Sample> samples, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].label == kPositiveClass ? pos : neg).push_back(i);
  std::vector<std::size_t>& major = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  Rng rng(seed);
  rng.shuffle(major);
  major.resize(keep);

  std::vector<char> kept(samples.size(), 0);
  for (auto i : pos) kept[i] = 1;
  for (auto i : neg) kept[i] = 1;
  std::vector<Sample> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (kept[i]) out.push_back(std::move(samples[i]));
  return out;
}

std::vector<Sample> extract_ground_samples(const std::vector<GroundScene>& scenes, const SlicParams& slic, int patch,
                                           std::uint64_t seed) {
  std::vector<Sample> all;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    require_same_shape(scenes[i].rgb, scenes[i].ground, "extract_ground_samples");
    const SuperpixelLabeling lab = slic_segment(scenes[i].rgb, slic);
    auto c = ground_candidates(scenes[i], lab, patch, static_cast<int>(i));
    std::move(c.begin(), c.end(), std::back_inserter(all));
  }
  return balance_classes(std::move(all), seed);
}

Mask detect_ground_from_texture(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net,
                                const GroundDetectParams& params) {
  require_same_shape(rgb, texture, "detect_ground");
  const SuperpixelLabeling lab = slic_segment(rgb, params.slic);
  std::vector<std::uint8_t> classes(lab.regions.size(), 0);
  for (const PatchCenter& c : region_patch_centers(lab)) {
    const auto [top, left] = clamped_patch_origin(c.row, c.col, params.patch, texture.width(), texture.height());
    bool any_valid = false;
    auto patch = texture_patch(texture, top, left, params.patch, &any_valid);
    if (!any_valid) continue;
    classes[c.region] = classify(net, {std::move(patch)}) == kPositiveClass;
  }
  return project_region_classes(lab, classes);
}

Mask detect_ground(const RgbImage& rgb, const DisparityMap& disparity, const nn::Network<float>& net,
                   const GroundDetectParams& params) {
  require_same_shape(rgb, disparity, "detect_ground");
  return detect_ground_from_texture(rgb, texture_map(disparity, params.descriptor), net, params);
}

// --- road segmentation -------------------------------------------------------------

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::pair<int, int> road_grid_size(int width, int height) {
  return {(height + kRoadCell - 1) / kRoadCell, (width + kRoadCell - 1) / kRoadCell};
}

std::vector<nn::Tensor<float>> road_patch(const RgbImage& rgb, const TextureMap& texture, int row, int col,
                                          int patch) {
  require_same_shape(rgb, texture, "road_patch");
  const int pad = (patch - kRoadCell) / 2;
  nn::Tensor<float> color(nn::Shape{3, patch, patch});
  nn::Tensor<float> tex(nn::Shape{1, patch, patch});
  for (int y = 0; y < patch; ++y) {
    const int v = reflect_index(row - pad + y, rgb.height());
    for (int x = 0; x < patch; ++x) {
      const int u = reflect_index(col - pad + x, rgb.width());
      const Rgb p = rgb.at(v, u);
      color.at(0, y, x) = p.r / 255.0f;
      color.at(1, y, x) = p.g / 255.0f;
      color.at(2, y, x) = p.b / 255.0f;
      tex.at(0, y, x) = normalize_texture(texture.at(v, u));
    }
  }
  return {std::move(color), std::move(tex)};
}

std::vector<Sample> extract_road_samples(const RgbImage& rgb, const TextureMap& texture, const Mask& road, int patch,
                                         int image_id) {
  require_same_shape(rgb, road, "extract_road_samples");
  require_same_shape(rgb, texture, "extract_road_samples");
  if (patch < kRoadCell || (patch - kRoadCell) % 2 != 0) throw std::invalid_argument("road patch must be 4 + 2k");
  const auto [gh, gw] = road_grid_size(rgb.width(), rgb.height());
  std::vector<Sample> out;
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      const int row = i * kRoadCell, col = j * kRoadCell;
      int pos = 0, total = 0;
      for (int v = row; v < std::min(row + kRoadCell, rgb.height()); ++v) {
        for (int u = col; u < std::min(col + kRoadCell, rgb.width()); ++u) {
          pos += road.at(v, u) != 0;
          ++total;
        }
      }
      if (pos != 0 && pos != total) continue;
      Sample s;
      s.inputs = road_patch(rgb, texture, row, col, patch);
      s.label = pos == total ? kPositiveClass : kNegativeClass;
      s.image = image_id;
      s.row = row;
      s.col = col;
      out.push_back(std::move(s));
    }
  }
  return out;
}

Mask RoadScores::to_mask(int width, int height) const {
  Mask m(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int i = v / kRoadCell, j = u / kRoadCell;
      m.at(v, u) = positive.at(i, j) > negative.at(i, j);
    }
  }
  return m;
}

namespace {

// Padded RGB/texture tensors: (P-4)/2 on every side plus enough at the bottom and
// right to complete the last 4×4 cell.
std::vector<nn::Tensor<float>> padded_inputs(const RgbImage& rgb, const TextureMap& texture, int patch) {
  const int pad = (patch - kRoadCell) / 2;
  const auto [gh, gw] = road_grid_size(rgb.width(), rgb.height());
  const int ph = gh * kRoadCell + 2 * pad;
  const int pw = gw * kRoadCell + 2 * pad;
  nn::Tensor<float> color(nn::Shape{3, ph, pw});
  nn::Tensor<float> tex(nn::Shape{1, ph, pw});
  for (int y = 0; y < ph; ++y) {
    const int v = reflect_index(y - pad, rgb.height());
    for (int x = 0; x < pw; ++x) {
      const int u = reflect_index(x - pad, rgb.width());
      const Rgb p = rgb.at(v, u);
      color.at(0, y, x) = p.r / 255.0f;
      color.at(1, y, x) = p.g / 255.0f;
      color.at(2, y, x) = p.b / 255.0f;
      tex.at(0, y, x) = normalize_texture(texture.at(v, u));
    }
  }
  return {std::move(color), std::move(tex)};
}

int road_patch_size(const nn::Network<float>& net) {
  if (net.input_shapes.size() != 2) throw std::invalid_argument("road segmentation needs a two-path network");
  return net.input_shapes[0].h;
}

}  // namespace

RoadScores road_scores_fcn(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net) {
  require_same_shape(rgb, texture, "road_scores_fcn");
  const nn::Network<float> fcn = net.fully_convolutional ? net : fcn_convert(net);
  const auto [gh, gw] = road_grid_size(rgb.width(), rgb.height());
  const auto out = nn::forward(fcn, padded_inputs(rgb, texture, road_patch_size(net)));
  if (out.shape.c != 2 || out.shape.h != gh || out.shape.w != gw) {
    throw nn::ShapeError("fully convolutional output " + out.shape.str() + " does not match the " +
                         std::to_string(gh) + "x" + std::to_string(gw) + " cell grid");
  }
  RoadScores s{Grid<float>(gw, gh), Grid<float>(gw, gh)};
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      s.negative.at(i, j) = out.at(kNegativeClass, i, j);
      s.positive.at(i, j) = out.at(kPositiveClass, i, j);
    }
  }
  return s;
}

RoadScores road_scores_patchwise(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net) {
  require_same_shape(rgb, texture, "road_scores_patchwise");
  if (net.fully_convolutional) throw std::invalid_argument("patchwise scoring needs the patch classifier");
  const int patch = road_patch_size(net);
  const auto [gh, gw] = road_grid_size(rgb.width(), rgb.height());
  RoadScores s{Grid<float>(gw, gh), Grid<float>(gw, gh)};
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      const auto out = nn::forward(net, road_patch(rgb, texture, i * kRoadCell, j * kRoadCell, patch));
      s.negative.at(i, j) = out.data[kNegativeClass];
      s.positive.at(i, j) = out.data[kPositiveClass];
    }
  }
  return s;
}

Mask segment_road(const RgbImage& rgb, const TextureMap& texture, const nn::Network<float>& net) {
  return road_scores_fcn(rgb, texture, net).to_mask(rgb.width(), rgb.height());
}

// --- datasets ----------------------------------------------------------------------

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("manifest not found: " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string a, b, c, extra;
    if (!(fields >> a) || a.front() == '#') continue;
    if (!(fields >> b >> c) || (fields >> extra)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected '<rgb> <disparity> <mask>'");
    }
    entries.push_back(ManifestEntry{resolve(a), resolve(b), resolve(c)});
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  const auto base = path.parent_path();
  const auto abs_base = std::filesystem::absolute(base);
  auto rel = [&abs_base](const std::filesystem::path& p) {
    const auto r = std::filesystem::absolute(p).lexically_relative(abs_base);
    return r.empty() ? std::filesystem::absolute(p).string() : r.string();
  };
  for (const auto& e : entries) out << rel(e.rgb) << ' ' << rel(e.disparity) << ' ' << rel(e.mask) << '\n';
}

namespace {
constexpr char kSampleMagic[4] = {'G', 'P', 'D', 'S'};
constexpr std::uint32_t kSampleVersion = 1;
}  // namespace

void save_samples(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  using namespace binio;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out.write(kSampleMagic, 4);
  put_u32(out, kSampleVersion);
  put_u32(out, static_cast<std::uint32_t>(samples.size()));
  for (const Sample& s : samples) {
    put_u32(out, static_cast<std::uint32_t>(s.inputs.size()));
    for (const auto& t : s.inputs) {
      put_u32(out, static_cast<std::uint32_t>(t.shape.c));
      put_u32(out, static_cast<std::uint32_t>(t.shape.h));
      put_u32(out, static_cast<std::uint32_t>(t.shape.w));
      put_floats(out, t.data);
    }
    put_u32(out, static_cast<std::uint32_t>(s.label));
    for (int x : {s.image, s.region, s.row, s.col}) put_u32(out, static_cast<std::uint32_t>(x));
  }
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<Sample> load_samples(const std::filesystem::path& path) {
  using namespace binio;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("sample file not found: " + path.string());
  try {
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kSampleMagic, 4)) {
      throw FormatError("not a sample file (bad magic)");
    }
    if (get_u32(in) != kSampleVersion) throw FormatError("unsupported sample file version");
    const std::uint32_t n = get_u32(in);
    std::vector<Sample> samples;
    for (std::uint32_t i = 0; i < n; ++i) {
      Sample s;
      const std::uint32_t inputs = get_u32(in);
      if (inputs > 64) throw FormatError("implausible input count");
      for (std::uint32_t k = 0; k < inputs; ++k) {
        nn::Shape shape{static_cast<int>(get_u32(in)), static_cast<int>(get_u32(in)), static_cast<int>(get_u32(in))};
        if (shape.c <= 0 || shape.h <= 0 || shape.w <= 0 || shape.size() > (1u << 26)) {
          throw FormatError("implausible tensor shape");
        }
        s.inputs.emplace_back(shape, get_floats(in, shape.size()));
      }
      s.label = static_cast<int>(get_u32(in));
      s.image = static_cast<int>(get_u32(in));
      s.region = static_cast<int>(get_u32(in));
      s.row = static_cast<int>(get_u32(in));
      s.col = static_cast<int>(get_u32(in));
      samples.push_back(std::move(s));
    }
    return samples;
  } catch (const FormatError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace gpd
