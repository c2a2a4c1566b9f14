#include <algorithm>
#include <cmath>
#include <optional>

#include "doctest.h"
#include "gpd/descriptor.hpp"
#include "gpd/random.hpp"
#include "gpd/synth.hpp"
#include "support.hpp"

using namespace gpd;

namespace {

// Straight from the definition: average the valid pixels of each block, reject
// blocks that leave the image or lack support, difference and normalize.
std::optional<double> oracle_block_mean(const DisparityMap& d, int v, int u, int b, double min_fraction) {
  const int h = b / 2;
  double sum = 0.0;
  int valid = 0;
  for (int dv = -h; dv <= h; ++dv) {
    for (int du = -h; du <= h; ++du) {
      if (!d.contains(v + dv, u + du)) return std::nullopt;
      const float x = d.at(v + dv, u + du);
      if (is_valid(x)) {
        sum += x;
        ++valid;
      }
    }
  }
  const int need = std::max(1, static_cast<int>(std::ceil(min_fraction * b * b - 1e-9)));
  if (valid < need) return std::nullopt;
  return sum / valid;
}

std::optional<double> oracle_texture(const DisparityMap& d, int v, int u, int b, double min_fraction) {
  const auto lo = oracle_block_mean(d, v - b, u, b, min_fraction);
  const auto hi = oracle_block_mean(d, v + b, u, b, min_fraction);
  if (!lo || !hi) return std::nullopt;
  return (*hi - *lo) / (2.0 * b);
}

DisparityMap affine_field(int w, int h, double a, double c, double e) {
  DisparityMap d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) d.at(v, u) = static_cast<float>(a * v + c * u + e);
  return d;
}

}  // namespace

TEST_CASE("texture map agrees with the brute-force oracle on sparse random fields") {
  Rng rng(21);
  for (int b : {1, 3, 5}) {
    for (double frac : {0.0, 0.5, 1.0}) {
      DisparityMap d(23, 19);
      for (float& x : d.data()) x = rng.uniform() < 0.3 ? kInvalid : static_cast<float>(rng.uniform(0.0, 60.0));
      DescriptorParams p;
      p.block_size = b;
      p.min_valid_fraction = frac;
      const TextureMap t = texture_map(d, p);
      REQUIRE(t.same_shape(d));
      for (int v = 0; v < d.height(); ++v) {
        for (int u = 0; u < d.width(); ++u) {
          const auto want = oracle_texture(d, v, u, b, frac);
          CAPTURE(b);
          CAPTURE(frac);
          CAPTURE(v);
          CAPTURE(u);
          if (!want) {
            CHECK_FALSE(is_valid(t.at(v, u)));
          } else {
            REQUIRE(is_valid(t.at(v, u)));
            CHECK(t.at(v, u) == doctest::Approx(*want).epsilon(1e-6).scale(1.0));
          }
        }
      }
    }
  }
}

TEST_CASE("constant field gives zero texture on the interior") {
  DisparityMap d(20, 20);
  std::fill(d.data().begin(), d.data().end(), 13.5f);
  for (int b : {1, 3}) {
    DescriptorParams p;
    p.block_size = b;
    const TextureMap t = texture_map(d, p);
    int valid = 0;
    for (float x : t.data()) {
      if (!is_valid(x)) continue;
      ++valid;
      CHECK(x == 0.0f);
    }
    CHECK(valid == (20 - 2 * (b + b / 2)) * (20 - 2 * (b / 2)));
  }
}

TEST_CASE("horizontal ground gives the row slope for b = 1 and b = 3") {
  const double slope = 0.54 / 1.65;
  const DisparityMap d = affine_field(40, 40, slope, 0.0, -slope * 13.0);
  for (int b : {1, 3}) {
    DescriptorParams p;
    p.block_size = b;
    const TextureMap t = texture_map(d, p);
    for (float x : t.data())
      if (is_valid(x)) CHECK(x == doctest::Approx(slope).epsilon(1e-5));
    const Mask bin = binarize(t, 0.1);
    for (int v = 0; v < 40; ++v)
      for (int u = 0; u < 40; ++u) CHECK(static_cast<bool>(bin.at(v, u)) == is_valid(t.at(v, u)));
  }
}

TEST_CASE("lateral wall (v-independent) gives zero texture") {
  const DisparityMap d = affine_field(30, 30, 0.0, 0.5, 4.0);
  const TextureMap t = texture_map(d, DescriptorParams{});
  for (float x : t.data())
    if (is_valid(x)) CHECK(x == 0.0f);
  CHECK(binarize(t, 0.1).count_positive() == 0);
}

TEST_CASE("affine fields: every odd block size returns the row coefficient") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = rng.uniform(-1.0, 1.0), c = rng.uniform(-0.5, 0.5);
    const DisparityMap d = affine_field(40, 50, a, c, 60.0);
    for (int b : {1, 3, 5, 7}) {
      DescriptorParams p;
      p.block_size = b;
      for (float x : texture_map(d, p).data())
        if (is_valid(x)) CHECK(x == doctest::Approx(a).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("b = 1 and b = 3 agree exactly on exactly representable affine fields") {
  const DisparityMap d = affine_field(40, 40, 0.375, -0.0625, 2.5);
  DescriptorParams p1, p3;
  p1.block_size = 1;
  const TextureMap t1 = texture_map(d, p1), t3 = texture_map(d, p3);
  int common = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!is_valid(t1.data()[i]) || !is_valid(t3.data()[i])) continue;
    ++common;
    CHECK(t1.data()[i] == t3.data()[i]);
  }
  CHECK(common > 0);
}

TEST_CASE("horizontal flip equivariance") {
  Rng rng(12);
  DisparityMap d(31, 22);
  for (float& x : d.data()) x = rng.uniform() < 0.2 ? kInvalid : static_cast<float>(rng.uniform(0.0, 30.0));
  DisparityMap flipped(31, 22);
  for (int v = 0; v < 22; ++v)
    for (int u = 0; u < 31; ++u) flipped.at(v, 30 - u) = d.at(v, u);
  const TextureMap t = texture_map(d, DescriptorParams{});
  const TextureMap tf = texture_map(flipped, DescriptorParams{});
  for (int v = 0; v < 22; ++v) {
    for (int u = 0; u < 31; ++u) {
      const float a = t.at(v, u), b = tf.at(v, 30 - u);
      REQUIRE(is_valid(a) == is_valid(b));
      if (is_valid(a)) CHECK(a == b);
    }
  }
}

TEST_CASE("border pixels are invalid") {
  const DisparityMap d = affine_field(12, 12, 0.3, 0.0, 1.0);
  const TextureMap t = texture_map(d, DescriptorParams{});
  for (int u = 0; u < 12; ++u) {
    for (int v : {0, 1, 2, 3, 8, 9, 10, 11}) CHECK_FALSE(is_valid(t.at(v, u)));
  }
  CHECK_FALSE(is_valid(t.at(5, 0)));
  CHECK(is_valid(t.at(5, 1)));
}

TEST_CASE("binarize thresholds strictly and treats invalid as negative") {
  TextureMap t(4, 1);
  t.at(0, 0) = 0.0f;
  t.at(0, 1) = 0.25f;
  t.at(0, 2) = 0.2500001f;
  t.at(0, 3) = kInvalid;
  const Mask m = binarize(t, 0.25);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(0, 1) == 0);
  CHECK(m.at(0, 2) == 1);
  CHECK(m.at(0, 3) == 0);
  CHECK(binarize(TextureMap(5, 5), 0.1).count_positive() == 0);
}

TEST_CASE("descriptor params validation") {
  DescriptorParams p;
  p.block_size = 2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.block_size = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.min_valid_fraction = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.binarize_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(texture_map(DisparityMap(10, 10), DescriptorParams{2, 0.5, 0.1}), std::invalid_argument);
}

TEST_CASE("visualization and network encodings") {
  TextureMap t(4, 1);
  t.at(0, 0) = -0.5f;
  t.at(0, 1) = 0.5f;
  t.at(0, 2) = 3.0f;
  t.at(0, 3) = kInvalid;
  const auto g = texture_to_gray8(t);
  CHECK(g.at(0, 0) == 0);
  CHECK(g.at(0, 1) == 128);
  CHECK(g.at(0, 2) == 255);
  CHECK(g.at(0, 3) == 0);
  CHECK(normalize_texture(-3.0f) == -1.0f);
  CHECK(normalize_texture(0.25f) == 0.25f);
  CHECK(normalize_texture(kInvalid) == 0.0f);
}

TEST_CASE("block averaging lowers texture variance under i.i.d. noise") {
  const DisparityMap clean = affine_field(120, 120, 0.3, 0.0, 10.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const DisparityMap noisy = test::add_noise(clean, 0.5, seed);
    double var[2];
    for (int k = 0; k < 2; ++k) {
      DescriptorParams p;
      p.block_size = k == 0 ? 1 : 3;
      const TextureMap t = texture_map(noisy, p);
      double s = 0, s2 = 0;
      int n = 0;
      for (float x : t.data()) {
        if (!is_valid(x)) continue;
        s += x;
        s2 += static_cast<double>(x) * x;
        ++n;
      }
      var[k] = s2 / n - (s / n) * (s / n);
    }
    // Predicted: σ²/2 for b = 1 and σ²/(2·81) for b = 3.
    CHECK(var[0] == doctest::Approx(0.125).epsilon(0.1));
    CHECK(var[1] < var[0] / 20);
  }
}
