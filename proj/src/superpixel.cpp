#include "gpd/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gpd {
namespace {

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct Center {
  double l, a, b, row, col;
};

double sq(double x) { return x * x; }

// 4-connected components of equal labels; returns component id per pixel.
int connected_components(const Grid<std::int32_t>& labels, Grid<std::int32_t>& comp) {
  const int w = labels.width(), h = labels.height();
  comp = Grid<std::int32_t>(w, h, -1);
  std::vector<int> stack;
  int n = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (comp.at(v, u) >= 0) continue;
      const std::int32_t label = labels.at(v, u);
      comp.at(v, u) = n;
      stack.assign(1, v * w + u);
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int y = idx / w, x = idx % w;
        const int ny[4] = {y - 1, y + 1, y, y};
        const int nx[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (!labels.contains(ny[k], nx[k])) continue;
          if (comp.at(ny[k], nx[k]) >= 0 || labels.at(ny[k], nx[k]) != label) continue;
          comp.at(ny[k], nx[k]) = n;
          stack.push_back(ny[k] * w + nx[k]);
        }
      }
      ++n;
    }
  }
  return n;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

// Splits disconnected labels into components and merges components smaller than
// `min_size` into the largest adjacent component, smallest first.
Grid<std::int32_t> enforce_connectivity(const Grid<std::int32_t>& labels, std::size_t min_size) {
  Grid<std::int32_t> comp;
  const int n = connected_components(labels, comp);
  const int w = labels.width(), h = labels.height();

  std::vector<std::size_t> size(n, 0);
  for (auto c : comp.data()) ++size[c];

  std::vector<std::vector<int>> adjacent(n);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int c = comp.at(v, u);
      if (u + 1 < w && comp.at(v, u + 1) != c) {
        adjacent[c].push_back(comp.at(v, u + 1));
        adjacent[comp.at(v, u + 1)].push_back(c);
      }
      if (v + 1 < h && comp.at(v + 1, u) != c) {
        adjacent[c].push_back(comp.at(v + 1, u));
        adjacent[comp.at(v + 1, u)].push_back(c);
      }
    }
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return size[a] < size[b]; });

  for (int c : order) {
    const int root = find_root(parent, c);
    if (root != c || size[root] >= min_size) continue;
    // Neighbours of everything already merged into this component.
    int best = -1;
    for (int other : adjacent[c]) {
      const int r = find_root(parent, other);
      if (r == root) continue;
      if (best < 0 || size[r] > size[best] || (size[r] == size[best] && r < best)) best = r;
    }
    if (best < 0) continue;
    parent[root] = best;
    size[best] += size[root];
    adjacent[best].insert(adjacent[best].end(), adjacent[root].begin(), adjacent[root].end());
  }

  Grid<std::int32_t> out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = find_root(parent, comp.data()[i]);
  return out;
}

}  // namespace

void SlicParams::validate() const {
  if (region_count < 1) throw std::invalid_argument("SLIC region count must be >= 1");
  if (!(compactness > 0.0)) throw std::invalid_argument("SLIC compactness must be positive");
  if (iterations < 1) throw std::invalid_argument("SLIC iterations must be >= 1");
  if (!(connectivity_min_fraction >= 0.0)) throw std::invalid_argument("connectivity_min_fraction must be >= 0");
}

Lab srgb_to_lab(Rgb p) {
  const double r = srgb_to_linear(p.r / 255.0);
  const double g = srgb_to_linear(p.g / 255.0);
  const double b = srgb_to_linear(p.b / 255.0);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.00000;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SeedGrid slic_seed_grid(int width, int height, int region_count) {
  SeedGrid g;
  g.rows = std::clamp(static_cast<int>(std::lround(std::sqrt(static_cast<double>(region_count) * height / width))), 1,
                      height);
  g.cols = std::clamp(static_cast<int>(std::lround(static_cast<double>(region_count) / g.rows)), 1, width);
  g.step_row = static_cast<double>(height) / g.rows;
  g.step_col = static_cast<double>(width) / g.cols;
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      // Integer pixel positions so seeds sit on actual pixels.
      g.seeds.emplace_back(std::floor((i + 0.5) * g.step_row), std::floor((j + 0.5) * g.step_col));
    }
  }
  return g;
}

SuperpixelLabeling slic_segment(const RgbImage& img, const SlicParams& p) {
  p.validate();
  const int w = img.width(), h = img.height();
  if (img.empty()) throw std::invalid_argument("SLIC input image is empty");
  if (static_cast<std::size_t>(p.region_count) > img.size()) {
    throw std::invalid_argument("SLIC region count " + std::to_string(p.region_count) + " exceeds pixel count " +
                                std::to_string(img.size()));
  }

  Grid<Lab> lab(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) lab.data()[i] = srgb_to_lab(img.data()[i]);

  const double step = std::sqrt(static_cast<double>(w) * h / p.region_count);
  const SeedGrid grid = slic_seed_grid(w, h, p.region_count);

  auto gradient = [&](int v, int u) {
    const Lab& l = lab.at(v, std::max(u - 1, 0));
    const Lab& r = lab.at(v, std::min(u + 1, w - 1));
    const Lab& t = lab.at(std::max(v - 1, 0), u);
    const Lab& b = lab.at(std::min(v + 1, h - 1), u);
    return sq(r.l - l.l) + sq(r.a - l.a) + sq(r.b - l.b) + sq(b.l - t.l) + sq(b.a - t.a) + sq(b.b - t.b);
  };

  std::vector<Center> centers;
  centers.reserve(grid.seeds.size());
  for (auto [row, col] : grid.seeds) {
    int best_v = static_cast<int>(row), best_u = static_cast<int>(col);
    double best_g = gradient(best_v, best_u);
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        const int v = static_cast<int>(row) + dv, u = static_cast<int>(col) + du;
        if (!img.contains(v, u)) continue;
        const double g = gradient(v, u);
        if (g < best_g) {
          best_g = g;
          best_v = v;
          best_u = u;
        }
      }
    }
    const Lab& c = lab.at(best_v, best_u);
    centers.push_back(Center{c.l, c.a, c.b, static_cast<double>(best_v), static_cast<double>(best_u)});
  }

  const double spatial_weight = sq(p.compactness / step);
  // Search window half-size; covers the whole grid cell even when cells are not square.
  const int reach = static_cast<int>(std::ceil(std::max({step, grid.step_row, grid.step_col})));

  Grid<std::int32_t> labels(w, h, -1);
  Grid<double> dist(w, h);
  std::vector<double> acc;
  for (int iter = 0; iter < p.iterations; ++iter) {
    std::fill(dist.data().begin(), dist.data().end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int v0 = std::max(0, static_cast<int>(std::floor(c.row)) - reach);
      const int v1 = std::min(h - 1, static_cast<int>(std::ceil(c.row)) + reach);
      const int u0 = std::max(0, static_cast<int>(std::floor(c.col)) - reach);
      const int u1 = std::min(w - 1, static_cast<int>(std::ceil(c.col)) + reach);
      for (int v = v0; v <= v1; ++v) {
        for (int u = u0; u <= u1; ++u) {
          const Lab& x = lab.at(v, u);
          const double d = sq(x.l - c.l) + sq(x.a - c.a) + sq(x.b - c.b) +
                           spatial_weight * (sq(v - c.row) + sq(u - c.col));
          if (d < dist.at(v, u)) {
            dist.at(v, u) = d;
            labels.at(v, u) = static_cast<std::int32_t>(k);
          }
        }
      }
    }

    // Fixed-order accumulation: l, a, b, row, col, count per center.
    acc.assign(centers.size() * 6, 0.0);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const int k = labels.at(v, u);
        if (k < 0) continue;
        const Lab& x = lab.at(v, u);
        double* a = &acc[static_cast<std::size_t>(k) * 6];
        a[0] += x.l;
        a[1] += x.a;
        a[2] += x.b;
        a[3] += v;
        a[4] += u;
        a[5] += 1.0;
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double* a = &acc[k * 6];
      if (a[5] == 0.0) continue;
      centers[k] = Center{a[0] / a[5], a[1] / a[5], a[2] / a[5], a[3] / a[5], a[4] / a[5]};
    }
  }

  // Pixels outside every window (possible only for degenerate grids) join the nearest center.
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (labels.at(v, u) >= 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = sq(v - centers[k].row) + sq(u - centers[k].col);
        if (d < best) {
          best = d;
          labels.at(v, u) = static_cast<std::int32_t>(k);
        }
      }
    }
  }

  const auto min_size = static_cast<std::size_t>(p.connectivity_min_fraction * step * step);
  return relabel_dense(enforce_connectivity(labels, min_size), img);
}

SuperpixelLabeling relabel_dense(const Grid<std::int32_t>& labels, const RgbImage& img) {
  require_same_shape(labels, img, "relabel_dense");
  SuperpixelLabeling out{Grid<std::int32_t>(labels.width(), labels.height()), {}};
  std::vector<std::int32_t> remap;
  std::vector<double> sums;  // row, col, r, g, b
  for (int v = 0; v < labels.height(); ++v) {
    for (int u = 0; u < labels.width(); ++u) {
      const std::int32_t old = labels.at(v, u);
      if (old < 0) throw std::invalid_argument("relabel_dense: negative label");
      if (static_cast<std::size_t>(old) >= remap.size()) remap.resize(old + 1, -1);
      if (remap[old] < 0) {
        remap[old] = static_cast<std::int32_t>(out.regions.size());
        out.regions.emplace_back();
        sums.resize(sums.size() + 5, 0.0);
      }
      const std::int32_t id = remap[old];
      out.labels.at(v, u) = id;
      Region& r = out.regions[id];
      ++r.pixel_count;
      double* s = &sums[static_cast<std::size_t>(id) * 5];
      const Rgb p = img.at(v, u);
      s[0] += v;
      s[1] += u;
      s[2] += p.r;
      s[3] += p.g;
      s[4] += p.b;
    }
  }
  for (std::size_t i = 0; i < out.regions.size(); ++i) {
    Region& r = out.regions[i];
    const double n = static_cast<double>(r.pixel_count);
    const double* s = &sums[i * 5];
    r.centroid_row = s[0] / n;
    r.centroid_col = s[1] / n;
    r.mean_r = s[2] / n;
    r.mean_g = s[3] / n;
    r.mean_b = s[4] / n;
  }
  return out;
}

std::vector<PatchCenter> region_patch_centers(const SuperpixelLabeling& lab) {
  std::vector<PatchCenter> centers;
  centers.reserve(lab.regions.size());
  for (std::size_t i = 0; i < lab.regions.size(); ++i) {
    const Region& r = lab.regions[i];
    centers.push_back(PatchCenter{static_cast<int>(i), static_cast<int>(std::floor(r.centroid_row + 0.5)),
                                  static_cast<int>(std::floor(r.centroid_col + 0.5))});
  }
  return centers;
}

Mask project_region_classes(const SuperpixelLabeling& lab, const std::vector<std::uint8_t>& region_classes) {
  if (region_classes.size() < lab.regions.size()) {
    throw std::invalid_argument("missing class for region " + std::to_string(region_classes.size()) + " of " +
                                std::to_string(lab.regions.size()));
  }
  Mask m(lab.labels.width(), lab.labels.height());
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = region_classes[lab.labels.data()[i]] ? 1 : 0;
  return m;
}

std::vector<std::uint8_t> region_majority(const SuperpixelLabeling& lab, const Mask& mask) {
  require_same_shape(lab.labels, mask, "region_majority");
  std::vector<std::size_t> positive(lab.regions.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) positive[lab.labels.data()[i]] += mask.data()[i] != 0;
  std::vector<std::uint8_t> classes(lab.regions.size());
  for (std::size_t r = 0; r < classes.size(); ++r) classes[r] = 2 * positive[r] > lab.regions[r].pixel_count;
  return classes;
}

bool regions_are_connected(const SuperpixelLabeling& lab) {
  Grid<std::int32_t> comp;
  return connected_components(lab.labels, comp) == lab.region_count();
}

Grid<std::uint16_t> labels_to_u16(const SuperpixelLabeling& lab) {
  if (lab.region_count() > 65536) throw std::invalid_argument("too many regions for a 16-bit label image");
  Grid<std::uint16_t> g(lab.labels.width(), lab.labels.height());
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = static_cast<std::uint16_t>(lab.labels.data()[i]);
  return g;
}

RgbImage draw_boundaries(const RgbImage& img, const SuperpixelLabeling& lab, Rgb color) {
  require_same_shape(img, lab.labels, "draw_boundaries");
  RgbImage out = img;
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const auto id = lab.labels.at(v, u);
      const bool edge = (u + 1 < img.width() && lab.labels.at(v, u + 1) != id) ||
                        (v + 1 < img.height() && lab.labels.at(v + 1, u) != id);
      if (edge) out.at(v, u) = color;
    }
  }
  return out;
}

}  // namespace gpd
