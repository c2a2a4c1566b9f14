#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "gpd/models.hpp"
#include "gpd/nn/checkpoint.hpp"
#include "gpd/nn/gradcheck.hpp"
#include "gpd/nn/network.hpp"
#include "gpd/random.hpp"

using namespace gpd;
using namespace gpd::nn;

namespace {

template <class T>
Tensor<T> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  for (T& x : t.data) x = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <class T>
Network<T> single(LayerStack<T> head, Shape in) {
  Network<T> n;
  n.arch = "test";
  n.input_shapes = {in};
  n.branches = {{}};
  n.head = std::move(head);
  return n;
}

// Naive valid cross-correlation, written independently of the layer code.
Tensor<double> oracle_conv(const Conv2d<double>& c, const Tensor<double>& x) {
  const int oh = x.shape.h - c.kh + 1, ow = x.shape.w - c.kw + 1;
  Tensor<double> y(Shape{c.out_ch, oh, ow});
  for (int o = 0; o < c.out_ch; ++o)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double s = c.bias[o];
        for (int ic = 0; ic < c.in_ch; ++ic)
          for (int a = 0; a < c.kh; ++a)
            for (int b = 0; b < c.kw; ++b)
              s += c.weight[((static_cast<std::size_t>(o) * c.in_ch + ic) * c.kh + a) * c.kw + b] *
                   x.at(ic, i + a, j + b);
        y.at(o, i, j) = s;
      }
  return y;
}

}  // namespace

TEST_CASE("conv of ones with a ones kernel sums to 25") {
  Conv2d<double> c(1, 1, 5, 5);
  std::fill(c.weight.begin(), c.weight.end(), 1.0);
  Tensor<double> x(Shape{1, 5, 5}, 1.0), y;
  c.forward(x, y);
  CHECK(y.shape == Shape{1, 1, 1});
  CHECK(y.data[0] == 25.0);
}

TEST_CASE("conv forward matches a naive oracle") {
  Rng rng(3);
  Conv2d<double> c(3, 4, 3, 2);
  for (double& w : c.weight) w = rng.uniform(-1, 1);
  for (double& b : c.bias) b = rng.uniform(-1, 1);
  const Tensor<double> x = random_tensor<double>(Shape{3, 7, 6}, rng);
  Tensor<double> y;
  c.forward(x, y);
  const Tensor<double> want = oracle_conv(c, x);
  REQUIRE(y.shape == want.shape);
  for (std::size_t i = 0; i < y.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
}

TEST_CASE("relu, pool and softmax basics") {
  Tensor<double> x(Shape{3, 1, 1}, std::vector<double>{-1, 0, 2}), y;
  Relu{}.forward(x, y);
  CHECK(y.data == std::vector<double>{0, 0, 2});

  Tensor<double> p(Shape{1, 2, 2}, std::vector<double>{1, 2, 3, 4}), q;
  std::vector<std::uint32_t> arg;
  MaxPool2{}.forward(p, q, &arg);
  CHECK(q.data == std::vector<double>{4});
  CHECK(arg == std::vector<std::uint32_t>{3});

  Tensor<double> ties(Shape{1, 2, 2}, std::vector<double>{5, 5, 5, 5});
  MaxPool2{}.forward(ties, q, &arg);
  CHECK(arg == std::vector<std::uint32_t>{0});

  const std::vector<double> s{0.0, 0.0};
  const auto sm = softmax<double>(s);
  CHECK(sm[0] == 0.5);
  CHECK(sm[1] == 0.5);
  CHECK_THROWS_AS(MaxPool2{}.output_shape(Shape{1, 3, 4}), ShapeError);
}

TEST_CASE("softmax is positive and sums to one, even for large scores") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> s(2 + trial % 5);
    for (float& x : s) x = static_cast<float>(rng.uniform(-500, 500));
    const auto p = softmax<float>(s);
    double sum = 0;
    for (float v : p) {
      CHECK(v >= 0.0f);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::isfinite(cross_entropy<float>(s, 0)));
  }
}

TEST_CASE("identity fc net on zeros has loss ln 2") {
  Dense<double> d(2, 2);
  d.weight = {1, 0, 0, 1};
  auto net = single<double>({d}, Shape{2, 1, 1});
  const Tensor<double> x(Shape{2, 1, 1});
  CHECK(loss(net, {x}, 0) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(loss(net, {x}, 2), std::invalid_argument);
}

TEST_CASE("final bias gradient equals p - onehot") {
  Rng rng(6);
  auto net = build_ground_net(4, GroundNetConfig{16, 3, 4, 10}).cast<double>();
  const auto x = random_tensor<double>(Shape{1, 16, 16}, rng);
  auto g = Gradients<double>::zeros_like(net);
  ForwardTrace<double> trace;
  backward(net, {x}, 1, g, &trace);
  const auto p = softmax<double>(trace.output.data);
  const auto& db = g.values.back();
  REQUIRE(db.size() == 2);
  CHECK(db[0] == doctest::Approx(p[0]));
  CHECK(db[1] == doctest::Approx(p[1] - 1.0));
}

TEST_CASE("forward rejects wrong input shapes") {
  auto net = build_ground_net(1);
  CHECK_THROWS_AS(forward(net, {Tensor<float>(Shape{1, 31, 31})}), ShapeError);
  CHECK_THROWS_AS(forward(net, {Tensor<float>(Shape{2, 32, 32})}), ShapeError);
  CHECK_THROWS_AS(forward(net, std::vector<Tensor<float>>{}), ShapeError);
}

TEST_CASE("sgd update rule") {
  auto make = [] {
    Dense<float> d(1, 1);
    d.weight = {0.0f};
    return single<float>({d}, Shape{1, 1, 1});
  };
  {
    auto net = make();
    Gradients<float> g{{{1.0f}, {0.0f}}};
    Sgd<float>(0.1f, 0.0f).step(net, g, 1);
    CHECK(std::get<Dense<float>>(net.head[0]).weight[0] == doctest::Approx(-0.1f));
  }
  {
    auto net = make();
    Gradients<float> g{{{1.0f}, {1.0f}}};
    Sgd<float>(0.0f, 0.9f).step(net, g, 1);
    CHECK(std::get<Dense<float>>(net.head[0]).weight[0] == 0.0f);
    CHECK(std::get<Dense<float>>(net.head[0]).bias[0] == 0.0f);
  }
  {
    auto net = make();
    Gradients<float> g{{{1.0f}, {0.0f}}};
    Sgd<float> sgd(0.1f, 0.9f);
    sgd.step(net, g, 1);
    CHECK(std::get<Dense<float>>(net.head[0]).weight[0] == doctest::Approx(-0.1f));
    sgd.step(net, g, 1);
    CHECK(std::get<Dense<float>>(net.head[0]).weight[0] == doctest::Approx(-0.29f));
  }
  {
    // The gradient is averaged over the batch.
    auto net = make();
    Gradients<float> g{{{4.0f}, {0.0f}}};
    Sgd<float>(0.1f, 0.0f).step(net, g, 4);
    CHECK(std::get<Dense<float>>(net.head[0]).weight[0] == doctest::Approx(-0.1f));
  }
  {
    auto net = make();
    Gradients<float> bad{{{1.0f}}};
    CHECK_THROWS_AS(Sgd<float>(0.1f, 0.0f).step(net, bad, 1), ShapeError);
  }
}

TEST_CASE("conv and fc outputs are linear in bias-free parameters") {
  Rng rng(8);
  const auto x = random_tensor<double>(Shape{2, 5, 5}, rng);
  Conv2d<double> a(2, 3, 3, 3), b(2, 3, 3, 3), mix(2, 3, 3, 3);
  for (double& w : a.weight) w = rng.uniform(-1, 1);
  for (double& w : b.weight) w = rng.uniform(-1, 1);
  const double alpha = 0.7, beta = -1.3;
  for (std::size_t i = 0; i < mix.weight.size(); ++i) mix.weight[i] = alpha * a.weight[i] + beta * b.weight[i];
  Tensor<double> ya, yb, ym;
  a.forward(x, ya);
  b.forward(x, yb);
  mix.forward(x, ym);
  for (std::size_t i = 0; i < ym.data.size(); ++i)
    CHECK(ym.data[i] == doctest::Approx(alpha * ya.data[i] + beta * yb.data[i]).epsilon(1e-12));

  Dense<double> da(50, 4), db(50, 4), dm(50, 4);
  for (double& w : da.weight) w = rng.uniform(-1, 1);
  for (double& w : db.weight) w = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < dm.weight.size(); ++i) dm.weight[i] = alpha * da.weight[i] + beta * db.weight[i];
  da.forward(x, ya);
  db.forward(x, yb);
  dm.forward(x, ym);
  for (std::size_t i = 0; i < ym.data.size(); ++i)
    CHECK(ym.data[i] == doctest::Approx(alpha * ya.data[i] + beta * yb.data[i]).epsilon(1e-12));
}

TEST_CASE("grad check: linear softmax net") {
  Rng rng(9);
  Dense<float> d(6, 3);
  auto net = single<float>({d}, Shape{6, 1, 1});
  net.init(2);
  const auto r = grad_check(net.cast<double>(), {random_tensor<double>(Shape{6, 1, 1}, rng)}, 2);
  CHECK(r.max_rel_error < 1e-7);
  CHECK(r.checked == 21);
  CHECK(r.excluded.empty());
}

TEST_CASE("grad check: every layer kind in double precision") {
  Rng rng(10);
  Network<float> n;
  n.arch = "mixed";
  n.input_shapes = {{2, 8, 8}, {1, 8, 8}};
  n.branches = {{Conv2d<float>(2, 3, 3, 3), Relu{}, MaxPool2{}}, {Conv2d<float>(1, 2, 3, 3), Relu{}, MaxPool2{}}};
  n.head = {Dense<float>(5 * 3 * 3, 6), Relu{}, Dense<float>(6, 2)};
  n.init(3);
  const auto net = n.cast<double>();
  const auto r = grad_check(net, {random_tensor<double>(Shape{2, 8, 8}, rng), random_tensor<double>(Shape{1, 8, 8}, rng)}, 0);
  CHECK(r.max_rel_error < 1e-5);
  CHECK(r.checked + r.excluded.size() == net.parameter_count());
}

TEST_CASE("grad check reports a relu kink instead of failing") {
  Dense<double> d1(2, 2), d2(2, 2);
  d1.weight = {1, 0, 0, 1};
  d1.bias = {0, 0.5};
  d2.weight = {1, -1, 0.5, 2};
  auto net = single<double>({d1, Relu{}, d2}, Shape{2, 1, 1});
  // First unit's pre-activation is exactly 0.
  const Tensor<double> x(Shape{2, 1, 1}, std::vector<double>{0.0, 1.0});
  const auto r = grad_check(net, {x}, 1);
  CHECK_FALSE(r.excluded.empty());
  CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("grad check: full ground architecture on a 32x32 patch, sampled entries") {
  Rng rng(11);
  const auto net = build_ground_net(5).cast<double>();
  GradCheckOptions o;
  o.max_params_per_tensor = 16;
  o.sample_seed = 2;
  const auto r = grad_check(net, {random_tensor<double>(Shape{1, 32, 32}, rng)}, 1, o);
  CHECK(r.max_rel_error < 1e-5);
  CHECK(r.checked + r.excluded.size() == 7 * 16 + 2);  // 8 tensors, the last bias has 2 entries
}

TEST_CASE("relative error definition") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-10, 0.0) == doctest::Approx(1e-2));
}

TEST_CASE("training steps are bit-reproducible") {
  Rng rng(12);
  std::vector<Tensor<float>> xs;
  for (int i = 0; i < 8; ++i) xs.push_back(random_tensor<float>(Shape{1, 16, 16}, rng));
  auto run = [&xs] {
    auto net = build_ground_net(7, GroundNetConfig{16, 4, 4, 12});
    Sgd<float> sgd(0.05f, 0.9f);
    auto g = Gradients<float>::zeros_like(net);
    for (int step = 0; step < 5; ++step) {
      g.zero();
      for (std::size_t i = 0; i < xs.size(); ++i) backward(net, {xs[i]}, static_cast<int>(i % 2), g);
      sgd.step(net, g, xs.size());
    }
    std::ostringstream out;
    write_checkpoint(out, net);
    return out.str();
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (const auto& net : {build_ground_net(3), build_fusion_net(4, FusionNetConfig{14, 4, 3, 8}),
                          fcn_convert(build_ground_net(5, GroundNetConfig{16, 2, 2, 4}))}) {
    std::stringstream buf;
    write_checkpoint(buf, net);
    const auto back = read_checkpoint(buf);
    CHECK(back.arch == net.arch);
    CHECK(back.fully_convolutional == net.fully_convolutional);
    CHECK(back.input_shapes == net.input_shapes);
    CHECK(back.branches.size() == net.branches.size());
    CHECK(back.head.size() == net.head.size());
    const auto a = net.params(), b = back.params();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].name == b[k].name);
      REQUIRE(a[k].values.size() == b[k].values.size());
      CHECK(std::memcmp(a[k].values.data(), b[k].values.data(), a[k].values.size() * sizeof(float)) == 0);
    }
    std::ostringstream again;
    write_checkpoint(again, back);
    CHECK(again.str() == buf.str());
  }
}

TEST_CASE("checkpoint header layout") {
  std::ostringstream out;
  write_checkpoint(out, build_ground_net(1));
  const std::string s = out.str();
  CHECK(s.substr(0, 4) == "GPDN");
  CHECK(static_cast<unsigned char>(s[4]) == 1);  // version, little-endian
  CHECK(static_cast<unsigned char>(s[8]) == 9);  // 6 feature layers + 3 head layers
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::ostringstream out;
  write_checkpoint(out, build_ground_net(1, GroundNetConfig{16, 2, 2, 4}));
  const std::string good = out.str();
  {
    std::istringstream in("XXXX" + good.substr(4));
    CHECK_THROWS(read_checkpoint(in));
  }
  {
    std::istringstream in(good.substr(0, good.size() - 3));
    CHECK_THROWS(read_checkpoint(in));
  }
  {
    std::string bad = good;
    bad[4] = 7;
    std::istringstream in(bad);
    CHECK_THROWS(read_checkpoint(in));
  }
}
