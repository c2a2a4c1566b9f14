#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "gpd/random.hpp"
#include "gpd/superpixel.hpp"
#include "gpd/synth.hpp"

using namespace gpd;

namespace {

// Two labelings describe the same partition iff their labels correspond one-to-one.
bool same_partition(const Grid<std::int32_t>& a, const Grid<std::int32_t>& b) {
  if (!a.same_shape(b)) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int x = a.data()[i], y = b.data()[i];
    if (ab.emplace(x, y).first->second != y) return false;
    if (ba.emplace(y, x).first->second != x) return false;
  }
  return true;
}

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(w, h);
  for (Rgb& p : img.data()) {
    p = Rgb{static_cast<std::uint8_t>(rng.uniform_int(0, 255)), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
            static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
  }
  return img;
}

bool flood_connected(const SuperpixelLabeling& lab, int region) {
  const auto& L = lab.labels;
  std::vector<char> seen(L.size(), 0);
  int start = -1;
  std::size_t members = 0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (L.data()[i] == region) {
      ++members;
      if (start < 0) start = static_cast<int>(i);
    }
  }
  if (start < 0) return false;
  std::vector<int> stack{start};
  seen[start] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    ++reached;
    const int v = i / L.width(), u = i % L.width();
    const int nv[4] = {v - 1, v + 1, v, v}, nu[4] = {u, u, u - 1, u + 1};
    for (int k = 0; k < 4; ++k) {
      if (!L.contains(nv[k], nu[k])) continue;
      const int j = nv[k] * L.width() + nu[k];
      if (seen[j] || L.data()[j] != region) continue;
      seen[j] = 1;
      stack.push_back(j);
    }
  }
  return reached == members;
}

}  // namespace

TEST_CASE("sRGB to Lab reference values") {
  const Lab white = srgb_to_lab(Rgb{255, 255, 255});
  CHECK(white.l == doctest::Approx(100.0).epsilon(1e-4));
  CHECK(std::abs(white.a) < 1e-3);
  CHECK(std::abs(white.b) < 1e-3);
  const Lab red = srgb_to_lab(Rgb{255, 0, 0});
  CHECK(red.l == doctest::Approx(53.24).epsilon(1e-3));
  CHECK(red.a == doctest::Approx(80.09).epsilon(1e-3));
  CHECK(red.b == doctest::Approx(67.20).epsilon(1e-3));
  const Lab black = srgb_to_lab(Rgb{0, 0, 0});
  CHECK(black.l == doctest::Approx(0.0));
}

TEST_CASE("seed grid") {
  const SeedGrid g = slic_seed_grid(100, 100, 25);
  CHECK(g.rows == 5);
  CHECK(g.cols == 5);
  CHECK(g.step_row == 20.0);
  REQUIRE(g.seeds.size() == 25);
  CHECK(g.seeds[0] == std::pair{10.0, 10.0});
  CHECK(g.seeds[24] == std::pair{90.0, 90.0});
  const SeedGrid two = slic_seed_grid(100, 100, 2);
  CHECK(two.rows == 1);
  CHECK(two.cols == 2);
}

TEST_CASE("uniform image, one iteration: labels are the nearest-seed Voronoi partition") {
  RgbImage img(100, 100, Rgb{90, 120, 60});
  SlicParams p;
  p.region_count = 25;
  p.iterations = 1;
  const SuperpixelLabeling lab = slic_segment(img, p);
  const SeedGrid g = slic_seed_grid(100, 100, 25);
  Grid<std::int32_t> oracle(100, 100);
  for (int v = 0; v < 100; ++v) {
    for (int u = 0; u < 100; ++u) {
      double best = 1e300;
      for (std::size_t k = 0; k < g.seeds.size(); ++k) {
        const double d = std::pow(v - g.seeds[k].first, 2) + std::pow(u - g.seeds[k].second, 2);
        if (d < best) {
          best = d;
          oracle.at(v, u) = static_cast<std::int32_t>(k);
        }
      }
    }
  }
  CHECK(lab.region_count() == 25);
  CHECK(same_partition(lab.labels, oracle));
}

TEST_CASE("uniform image, k = 25: 25 regions of about 400 px near a 5x5 grid") {
  RgbImage img(100, 100, Rgb{200, 200, 200});
  SlicParams p;
  p.region_count = 25;
  const SuperpixelLabeling lab = slic_segment(img, p);
  REQUIRE(lab.region_count() == 25);
  std::set<std::pair<int, int>> cells;
  for (const Region& r : lab.regions) {
    // Ties go to the lower seed, so a cell spans 19 to 21 pixels per axis.
    CHECK(r.pixel_count >= 19 * 19);
    CHECK(r.pixel_count <= 21 * 21);
    const double gi = (r.centroid_row - 9.5) / 20.0, gj = (r.centroid_col - 9.5) / 20.0;
    const int i = static_cast<int>(std::lround(gi)), j = static_cast<int>(std::lround(gj));
    CHECK(std::abs(r.centroid_row - (20 * i + 9.5)) <= 1.0);
    CHECK(std::abs(r.centroid_col - (20 * j + 9.5)) <= 1.0);
    cells.insert({i, j});
  }
  CHECK(cells.size() == 25);
}

TEST_CASE("k = 1 gives one region centred on the image") {
  const RgbImage img = noise_image(40, 30, 2);
  SlicParams p;
  p.region_count = 1;
  const SuperpixelLabeling lab = slic_segment(img, p);
  REQUIRE(lab.region_count() == 1);
  CHECK(lab.regions[0].pixel_count == 1200);
  CHECK(lab.regions[0].centroid_row == doctest::Approx(14.5));
  CHECK(lab.regions[0].centroid_col == doctest::Approx(19.5));
}

TEST_CASE("two-colour halves, k = 2: the boundary sits on the colour edge") {
  RgbImage img(100, 60);
  for (int v = 0; v < 60; ++v)
    for (int u = 0; u < 100; ++u) img.at(v, u) = u < 50 ? Rgb{220, 30, 30} : Rgb{30, 30, 220};
  SlicParams p;
  p.region_count = 2;
  const SuperpixelLabeling lab = slic_segment(img, p);
  REQUIRE(lab.region_count() == 2);
  for (int v = 0; v < 60; ++v)
    for (int u = 0; u < 100; ++u) CHECK(lab.labels.at(v, u) == (u < 50 ? 0 : 1));
  // At the edge the colour term dominates: D² to the own centre is far below D² to the other.
  const Lab a = srgb_to_lab(img.at(0, 49)), b = srgb_to_lab(img.at(0, 50));
  const double colour = std::pow(a.l - b.l, 2) + std::pow(a.a - b.a, 2) + std::pow(a.b - b.b, 2);
  const double step = std::sqrt(100.0 * 60.0 / 2.0);
  const double spatial = std::pow(10.0 / step, 2) * std::pow(50.0, 2);
  CHECK(colour > spatial);
}

TEST_CASE("labelings partition the image with dense, connected regions") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const CameraModel cam = CameraModel::kitti_like(160, 80);
    const SynthScene s = synth_scene(random_scene(seed, 160, 80, cam), cam);
    SlicParams p;
    p.region_count = 120;
    const SuperpixelLabeling lab = slic_segment(s.rgb, p);
    std::vector<std::size_t> counts(lab.regions.size(), 0);
    int next_new = 0;
    for (int v = 0; v < 80; ++v) {
      for (int u = 0; u < 160; ++u) {
        const int id = lab.labels.at(v, u);
        REQUIRE(id >= 0);
        REQUIRE(id < lab.region_count());
        if (counts[id] == 0) CHECK(id == next_new++);  // row-major order of first appearance
        ++counts[id];
      }
    }
    for (int r = 0; r < lab.region_count(); ++r) {
      CHECK(counts[r] == lab.regions[r].pixel_count);
      CHECK(flood_connected(lab, r));
    }
    CHECK(regions_are_connected(lab));
    const double step = std::sqrt(160.0 * 80.0 / 120.0);
    for (const Region& r : lab.regions) CHECK(r.pixel_count >= static_cast<std::size_t>(0.25 * step * step));
  }
}

TEST_CASE("noise image still yields connected regions") {
  const RgbImage img = noise_image(64, 48, 9);
  SlicParams p;
  p.region_count = 40;
  const SuperpixelLabeling lab = slic_segment(img, p);
  CHECK(regions_are_connected(lab));
  for (int r = 0; r < lab.region_count(); ++r) CHECK(flood_connected(lab, r));
}

TEST_CASE("slic is deterministic") {
  const RgbImage img = noise_image(80, 50, 3);
  SlicParams p;
  p.region_count = 30;
  CHECK(slic_segment(img, p).labels == slic_segment(img, p).labels);
}

TEST_CASE("slic rejects invalid parameters") {
  const RgbImage img(4, 4);
  SlicParams p;
  p.region_count = 17;
  CHECK_THROWS_AS(slic_segment(img, p), std::invalid_argument);
  p.region_count = 0;
  CHECK_THROWS_AS(slic_segment(img, p), std::invalid_argument);
  p = {};
  p.compactness = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.iterations = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("patch centres round half up") {
  {
    Grid<std::int32_t> labels(100, 100, 0);
    const auto lab = relabel_dense(labels, RgbImage(100, 100));
    const auto c = region_patch_centers(lab);
    REQUIRE(c.size() == 1);
    CHECK(c[0].row == 50);
    CHECK(c[0].col == 50);
  }
  {
    Grid<std::int32_t> labels(5, 4, 0);
    labels.at(2, 3) = 1;
    const auto c = region_patch_centers(relabel_dense(labels, RgbImage(5, 4)));
    REQUIRE(c.size() == 2);
    CHECK(c[1].row == 2);
    CHECK(c[1].col == 3);
  }
  {
    Grid<std::int32_t> labels(3, 3, 1);
    labels.at(0, 0) = labels.at(0, 1) = labels.at(1, 0) = 0;
    const auto lab = relabel_dense(labels, RgbImage(3, 3));
    CHECK(lab.regions[0].centroid_row == doctest::Approx(1.0 / 3.0));
    const auto c = region_patch_centers(lab);
    CHECK(c[0].row == 0);
    CHECK(c[0].col == 0);
  }
}

TEST_CASE("region class projection") {
  RgbImage img(40, 40);
  Grid<std::int32_t> labels(40, 40);
  for (int v = 0; v < 40; ++v)
    for (int u = 0; u < 40; ++u) labels.at(v, u) = (v / 20) * 2 + (u / 20);
  const SuperpixelLabeling lab = relabel_dense(labels, img);
  REQUIRE(lab.region_count() == 4);
  CHECK(project_region_classes(lab, {1, 1, 1, 1}).count_positive() == 1600);
  const Mask one = project_region_classes(lab, {0, 0, 1, 0});
  CHECK(one.count_positive() == 400);
  CHECK(project_region_classes(lab, region_majority(lab, one)) == one);
  CHECK_THROWS_AS(project_region_classes(lab, {1, 0, 1}), std::invalid_argument);
}

TEST_CASE("region majority is strict, ties negative") {
  Grid<std::int32_t> labels(4, 1, 0);
  const SuperpixelLabeling lab = relabel_dense(labels, RgbImage(4, 1));
  Mask m(4, 1);
  m.at(0, 0) = m.at(0, 1) = 1;
  CHECK(region_majority(lab, m)[0] == 0);
  m.at(0, 2) = 1;
  CHECK(region_majority(lab, m)[0] == 1);
}

TEST_CASE("label export and boundary drawing") {
  Grid<std::int32_t> labels(6, 2, 0);
  for (int u = 3; u < 6; ++u) labels.at(0, u) = labels.at(1, u) = 1;
  RgbImage img(6, 2, Rgb{1, 2, 3});
  const auto lab = relabel_dense(labels, img);
  const auto u16 = labels_to_u16(lab);
  CHECK(u16.at(0, 0) == 0);
  CHECK(u16.at(1, 5) == 1);
  const RgbImage b = draw_boundaries(img, lab);
  CHECK(b.at(0, 0) == Rgb{1, 2, 3});
  int marked = 0;
  for (const Rgb& p : b.data()) marked += p == Rgb{255, 0, 0};
  CHECK(marked > 0);
  CHECK(marked < 12);
}
