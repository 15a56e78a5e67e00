#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "esd_pinn/mlp.hpp"

using esd::Layer;
using esd::Matrix;
using esd::Mlp;
using esd::Vector;

namespace {

// Straight loops over the stored matrices, no Eigen products.
std::vector<double> reference_forward(const Mlp<double>& net, double t) {
  std::vector<double> a{net.input_scaling().scale * t + net.input_scaling().shift};
  for (std::size_t v = 0; v < net.num_layers(); ++v) {
    const auto& l = net.layer(v);
    std::vector<double> z(l.weights.cols());
    for (Eigen::Index j = 0; j < l.weights.cols(); ++j) {
      double s = l.bias(j);
      for (Eigen::Index i = 0; i < l.weights.rows(); ++i) s += a[i] * l.weights(i, j);
      z[j] = v + 1 == net.num_layers() ? s : std::tanh(s);
    }
    a = z;
  }
  return a;
}

Mlp<double> zero_network(int width) {
  std::vector<Layer<double>> layers;
  layers.push_back({Matrix<double>::Zero(1, width), Vector<double>::Zero(width)});
  layers.push_back({Matrix<double>::Zero(width, 4), Vector<double>::Zero(4)});
  return Mlp<double>(std::move(layers));
}

}  // namespace

TEST_CASE("tanh activation") {
  CHECK(esd::tanh_activation(0.0) == 0.0);
  CHECK(std::abs(esd::tanh_activation(1.0) - 0.761594) < 1e-6);
  CHECK(std::abs(esd::tanh_activation(100.0) - 1.0) <= 1e-15);
  CHECK(std::abs(esd::tanh_activation(-800.0) + 1.0) <= 1e-15);

  for (double x = -30.0; x <= 30.0; x += 0.01) {
    CHECK(esd::tanh_activation(-x) == -esd::tanh_activation(x));
    const double y = esd::tanh_activation(x);
    CHECK(y >= -1.0);
    CHECK(y <= 1.0);
    if (std::abs(x) < 18.0) {  // below saturation of double precision
      CHECK(y > -1.0);
      CHECK(y < 1.0);
    }
  }
}

TEST_CASE("init_network shapes, bounds and determinism") {
  const auto big = esd::init_network<double>(16, 100, 1);
  REQUIRE(big.num_layers() == 17);
  CHECK(big.layer(0).shape() == esd::LayerShape{1, 100});
  for (int v = 1; v < 16; ++v) CHECK(big.layer(v).shape() == esd::LayerShape{100, 100});
  CHECK(big.layer(16).shape() == esd::LayerShape{100, 4});

  const auto a = esd::init_network<double>(1, 8, 7);
  const auto b = esd::init_network<double>(1, 8, 7);
  CHECK((esd::flatten(a).array() == esd::flatten(b).array()).all());
  CHECK_FALSE((esd::flatten(a).array() == esd::flatten(esd::init_network<double>(1, 8, 8)).array()).all());

  for (const auto& l : a.layers()) {
    const double bound = std::sqrt(6.0 / double(l.weights.rows() + l.weights.cols()));
    CHECK(l.weights.cwiseAbs().maxCoeff() <= bound);
    CHECK(l.bias.isZero(0.0));
  }

  CHECK_THROWS_AS(esd::init_network<double>(0, 8, 1), std::invalid_argument);
  CHECK_THROWS_AS(esd::init_network<double>(2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(esd::init_network<double>(-1, 8, 1), std::invalid_argument);
}

TEST_CASE("network construction rejects malformed layers") {
  using L = Layer<double>;
  CHECK_THROWS_AS(Mlp<double>({}), std::invalid_argument);
  CHECK_THROWS_AS(Mlp<double>({L{Matrix<double>::Zero(2, 4), Vector<double>::Zero(4)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Mlp<double>({L{Matrix<double>::Zero(1, 3), Vector<double>::Zero(3)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Mlp<double>({L{Matrix<double>::Zero(1, 5), Vector<double>::Zero(5)},
                               L{Matrix<double>::Zero(6, 4), Vector<double>::Zero(4)}}),
                  std::invalid_argument);
  Matrix<double> w = Matrix<double>::Zero(1, 4);
  w(0, 1) = std::nan("");
  CHECK_THROWS_AS(Mlp<double>({L{w, Vector<double>::Zero(4)}}), std::invalid_argument);
}

TEST_CASE("forward on crafted networks") {
  const auto zero = zero_network(5);
  for (double t : {-3.0, 0.0, 0.5, 42.0}) CHECK(esd::forward(zero, t).isZero(0.0));

  // Nonzero weights everywhere; at t = 0 every hidden activation is tanh(0) = 0.
  std::vector<Layer<double>> layers;
  layers.push_back({Matrix<double>::Constant(1, 4, 1.0), Vector<double>::Zero(4)});
  layers.push_back({Matrix<double>::Identity(4, 4), Vector<double>(Eigen::Vector4d(0.5, -1, 2, 3))});
  const Mlp<double> net(std::move(layers));
  const auto y = esd::forward(net, 0.0);
  CHECK(y(0) == 0.5);
  CHECK(y(1) == -1.0);
  CHECK(y(2) == 2.0);
  CHECK(y(3) == 3.0);
}

TEST_CASE("forward matches a loop-based evaluation") {
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const auto net = esd::init_network<double>(3, 12, seed);
    for (double t : {0.5, -1.25, 3.0}) {
      const auto y = esd::forward(net, t);
      const auto ref = reference_forward(net, t);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(y(k) - ref[k]) <= 1e-12);
    }
  }
  const auto scaled = esd::init_network<double>(2, 6, 4, esd::InputScaling::to_unit_interval(0, 100));
  const auto y = esd::forward(scaled, 37.0);
  const auto ref = reference_forward(scaled, 37.0);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(y(k) - ref[k]) <= 1e-12);
}

TEST_CASE("batched forward agrees with single-point forward") {
  const auto net = esd::init_network<double>(2, 10, 21);
  Vector<double> times = Vector<double>::LinSpaced(7, -1.0, 2.0);
  const auto rows = esd::forward_rows(net, times);
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const auto y = esd::forward(net, times(i));
    for (int k = 0; k < 4; ++k) CHECK(std::abs(rows(i, k) - y(k)) <= 1e-14);
  }
}

TEST_CASE("forward is continuous in t") {
  const auto net = esd::init_network<double>(2, 16, 5);
  const double t = 0.7;
  const double d6 = (esd::forward(net, t + 1e-6) - esd::forward(net, t)).norm() / 1e-6;
  const double d8 = (esd::forward(net, t + 1e-8) - esd::forward(net, t)).norm() / 1e-8;
  CHECK(d6 < 1e3);
  CHECK(std::abs(d6 - d8) <= 1e-3 * std::max(1.0, d6));
}

TEST_CASE("output layer is linear") {
  const auto net = esd::init_network<double>(2, 8, 17);
  auto layers = net.layers();
  layers.back().bias = Vector<double>::LinSpaced(4, -0.3, 0.6);
  const Mlp<double> base(layers);
  const double c = -2.5;
  layers.back().weights *= c;
  layers.back().bias *= c;
  const Mlp<double> scaled(layers);
  for (double t : {-1.0, 0.0, 0.4, 2.0}) {
    const auto a = esd::forward(base, t);
    const auto b = esd::forward(scaled, t);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(b(k) - c * a(k)) <= 1e-12);
  }
}

TEST_CASE("flatten / unflatten") {
  const auto small = esd::init_network<double>(1, 8, 3);
  CHECK(small.parameter_count() == 1 * 8 + 8 + 8 * 4 + 4);
  CHECK(esd::flatten(small).size() == 52);

  // Layout: first layer weights row-major, then its biases, then the next layer.
  const auto v = esd::flatten(small);
  CHECK(v(0) == small.layer(0).weights(0, 0));
  CHECK(v(7) == small.layer(0).weights(0, 7));
  CHECK(v(8) == small.layer(0).bias(0));
  CHECK(v(16) == small.layer(1).weights(0, 0));
  CHECK(v(17) == small.layer(1).weights(0, 1));
  CHECK(v(20) == small.layer(1).weights(1, 0));
  CHECK(v(48) == small.layer(1).bias(0));

  const auto deep = esd::init_network<double>(3, 9, 12, esd::InputScaling::to_unit_interval(0, 50));
  Vector<double> p = Vector<double>::LinSpaced(deep.parameter_count(), -1.0, 1.0);
  p(5) = 0.1 + 0.2;
  const auto rebuilt = esd::unflatten(deep, p);
  CHECK((esd::flatten(rebuilt).array() == p.array()).all());
  CHECK(rebuilt.input_scaling() == deep.input_scaling());
  CHECK((esd::flatten(esd::unflatten(deep, esd::flatten(deep))).array() == esd::flatten(deep).array()).all());

  CHECK_THROWS_AS(esd::unflatten(small, Vector<double>::Zero(51)), std::invalid_argument);
  CHECK_THROWS_AS(esd::unflatten(small, Vector<double>::Zero(53)), std::invalid_argument);
}
