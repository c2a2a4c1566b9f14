#include "gpd/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace gpd {
namespace {

cv::Mat read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("file not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw InputError("cannot decode image: " + path.string());
  return m;
}

void write_png(const cv::Mat& m, const std::filesystem::path& path) {
  // Fixed compression settings keep output bytes reproducible.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6, cv::IMWRITE_PNG_STRATEGY,
                                cv::IMWRITE_PNG_STRATEGY_DEFAULT};
  if (!cv::imwrite(path.string(), m, params)) throw InputError("cannot write image: " + path.string());
}

std::uint16_t quantize_disparity(float d) {
  const double q = std::round(static_cast<double>(d) * 256.0);
  return static_cast<std::uint16_t>(std::clamp(q, 1.0, 65535.0));
}

}  // namespace

DisparityFormat disparity_format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return DisparityFormat::KittiPng16;
  if (ext == ".pfm") return DisparityFormat::Pfm;
  throw InputError("unrecognized disparity file extension: " + path.string());
}

DisparityMap load_disparity(const std::filesystem::path& path) {
  return load_disparity(path, disparity_format_from_path(path));
}

DisparityMap load_disparity(const std::filesystem::path& path, DisparityFormat format) {
  if (format == DisparityFormat::Pfm) {
    const Grid<float> raw = load_pfm(path);
    DisparityMap d(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const float x = raw.data()[i];
      d.data()[i] = (is_valid(x) && x > 0.0f) ? x : kInvalid;
    }
    return d;
  }
  const cv::Mat m = read_png(path);
  if (m.channels() != 1 || m.depth() != CV_16U) {
    throw InputError("kitti-png16 disparity must be single-channel 16-bit: " + path.string());
  }
  DisparityMap d(m.cols, m.rows);
  for (int v = 0; v < m.rows; ++v) {
    const auto* src = m.ptr<std::uint16_t>(v);
    for (int u = 0; u < m.cols; ++u) d.at(v, u) = src[u] == 0 ? kInvalid : static_cast<float>(src[u]) / 256.0f;
  }
  return d;
}

void save_disparity_png16(const DisparityMap& d, const std::filesystem::path& path) {
  cv::Mat m(d.height(), d.width(), CV_16UC1);
  for (int v = 0; v < d.height(); ++v) {
    auto* dst = m.ptr<std::uint16_t>(v);
    for (int u = 0; u < d.width(); ++u) {
      const float x = d.at(v, u);
      dst[u] = is_valid(x) ? quantize_disparity(x) : 0;
    }
  }
  write_png(m, path);
}

void save_pfm(const Grid<float>& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << "Pf\n" << g.width() << ' ' << g.height() << "\n-1.0\n";
  // PFM stores rows bottom-to-top.
  for (int v = g.height() - 1; v >= 0; --v) {
    for (float x : g.row(v)) {
      auto bits = std::bit_cast<std::uint32_t>(x);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!out) throw InputError("write failed: " + path.string());
}

Grid<float> load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("file not found: " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || magic != "Pf") throw InputError("not a grayscale PFM (expected 'Pf' header): " + path.string());
  if (width <= 0 || height <= 0 || scale == 0.0) throw InputError("bad PFM header: " + path.string());
  in.get();  // single whitespace after the scale
  const bool little = scale < 0.0;
  Grid<float> g(width, height);
  for (int v = height - 1; v >= 0; --v) {
    for (float& x : g.row(v)) {
      std::uint32_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), 4)) {
        throw InputError("PFM payload shorter than " + std::to_string(width) + "x" + std::to_string(height) +
                         ": " + path.string());
      }
      const bool swap = little != (std::endian::native == std::endian::little);
      if (swap) bits = __builtin_bswap32(bits);
      x = std::bit_cast<float>(bits);
    }
  }
  return g;
}

void save_mask_png(const Mask& m, const std::filesystem::path& path) {
  cv::Mat out(m.height(), m.width(), CV_8UC1);
  for (int v = 0; v < m.height(); ++v) {
    auto* dst = out.ptr<std::uint8_t>(v);
    for (int u = 0; u < m.width(); ++u) dst[u] = m.at(v, u) ? 255 : 0;
  }
  write_png(out, path);
}

Mask load_mask_png(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path);
  if (m.channels() != 1 || m.depth() != CV_8U) throw InputError("mask must be single-channel 8-bit: " + path.string());
  Mask mask(m.cols, m.rows);
  for (int v = 0; v < m.rows; ++v) {
    const auto* src = m.ptr<std::uint8_t>(v);
    for (int u = 0; u < m.cols; ++u) mask.at(v, u) = src[u] != 0;
  }
  return mask;
}

void save_rgb_png(const RgbImage& img, const std::filesystem::path& path) {
  cv::Mat out(img.height(), img.width(), CV_8UC3);
  for (int v = 0; v < img.height(); ++v) {
    auto* dst = out.ptr<cv::Vec3b>(v);
    for (int u = 0; u < img.width(); ++u) {
      const Rgb p = img.at(v, u);
      dst[u] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  write_png(out, path);
}

RgbImage load_rgb_png(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path);
  if (m.depth() != CV_8U || (m.channels() != 3 && m.channels() != 1)) {
    throw InputError("expected 8-bit RGB or gray image: " + path.string());
  }
  RgbImage img(m.cols, m.rows);
  for (int v = 0; v < m.rows; ++v) {
    for (int u = 0; u < m.cols; ++u) {
      if (m.channels() == 3) {
        const auto p = m.at<cv::Vec3b>(v, u);
        img.at(v, u) = Rgb{p[2], p[1], p[0]};
      } else {
        const auto g = m.at<std::uint8_t>(v, u);
        img.at(v, u) = Rgb{g, g, g};
      }
    }
  }
  return img;
}

void save_gray8_png(const Grid<std::uint8_t>& g, const std::filesystem::path& path) {
  cv::Mat out(g.height(), g.width(), CV_8UC1);
  for (int v = 0; v < g.height(); ++v) std::memcpy(out.ptr<std::uint8_t>(v), g.row(v).data(), g.width());
  write_png(out, path);
}

void save_gray16_png(const Grid<std::uint16_t>& g, const std::filesystem::path& path) {
  cv::Mat out(g.height(), g.width(), CV_16UC1);
  for (int v = 0; v < g.height(); ++v) std::memcpy(out.ptr<std::uint16_t>(v), g.row(v).data(), 2 * g.width());
  write_png(out, path);
}

}  // namespace gpd
