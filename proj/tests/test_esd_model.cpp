#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/mlp.hpp"

using esd::State;

TEST_CASE("chaotic parameter set and initial state") {
  const auto p = esd::default_chaotic_params();
  CHECK(p.a1 == 0.09);
  CHECK(p.a2 == 0.15);
  CHECK(p.z1 == 0.06);
  CHECK(p.z2 == 0.082);
  CHECK(p.z3 == 0.07);
  CHECK(p.s1 == 0.2);
  CHECK(p.s2 == 0.5);
  CHECK(p.s3 == 0.4);
  CHECK(p.d1 == 0.1);
  CHECK(p.d2 == 0.06);
  CHECK(p.d3 == 0.08);
  CHECK(p.M == 1.8);
  CHECK(p.N == 1.0);
  CHECK(p.N < p.M);
  CHECK(esd::validate_params(p).ok());

  const auto y0 = esd::default_initial_state();
  CHECK(y0(0) == 0.82);
  CHECK(y0(1) == 0.29);
  CHECK(y0(2) == 0.48);
  CHECK(y0(3) == 0.1);
  CHECK(y0.allFinite());
  CHECK((y0.array() > 0).all());
}

TEST_CASE("validate_params reports each violation") {
  auto p = esd::default_chaotic_params();
  p.a1 = 0.0;
  auto v = esd::validate_params(p);
  REQUIRE_FALSE(v.ok());
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].find("a1") != std::string::npos);

  p = esd::default_chaotic_params();
  p.N = p.M = 1.8;
  v = esd::validate_params(p);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0] == "N < M");

  p = esd::default_chaotic_params();
  p.s2 = -1.0;
  p.d3 = std::numeric_limits<double>::quiet_NaN();
  CHECK(esd::validate_params(p).violations.size() == 2);
}

TEST_CASE("rhs at the initial conditions") {
  // Hand substitution:
  //   x1' = 0.09*0.82*(1 - 0.82/1.8) - 0.15*(0.29 + 0.48) - 0.08*0.1 = -0.08332
  //   x2' = -0.06*0.29 - 0.082*0.48 + 0.07*0.82*(1 - 0.34)     = -0.018876
  //   x3' = 0.2*0.48*(0.5*0.82 - 0.4)                           =  0.00096
  //   x4' = 0.1*0.82 - 0.06*0.1                                 =  0.076
  const auto p = esd::default_chaotic_params();
  const auto dx = esd::rhs(p, esd::default_initial_state());
  CHECK(std::abs(dx(0) + 0.083320) < 1e-6);
  CHECK(std::abs(dx(1) + 0.018876) < 1e-6);
  CHECK(std::abs(dx(2) - 0.00096) < 1e-6);
  CHECK(std::abs(dx(3) - 0.076) < 1e-6);

  const auto dx4 = esd::rhs(p, State<>(0.82, 0, 0, 0));
  CHECK(std::abs(dx4(3) - 0.082) < 1e-15);
}

TEST_CASE("origin is an equilibrium for any valid parameters") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    esd::EsdParameters p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng),
                         u(rng), u(rng), u(rng), u(rng), 3.0,    u(rng)};
    CHECK((esd::rhs(p, State<>::Zero()).array() == 0.0).all());
  }
}

TEST_CASE("rhs is exactly quadratic in the state") {
  const auto p = esd::default_chaotic_params();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const State<> x(n(rng), n(rng), n(rng), n(rng));
    const State<> dir(n(rng), n(rng), n(rng), n(rng));
    auto second = [&](double h) {
      return ((esd::rhs(p, State<>(x + h * dir)) - 2.0 * esd::rhs(p, x) +
               esd::rhs(p, State<>(x - h * dir))) /
              (h * h))
          .eval();
    };
    const auto a = second(0.5);
    const auto b = second(0.25);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(a(k) - b(k)) <= 1e-9 * std::max(1.0, std::abs(a(k))));
  }
}

TEST_CASE("structural zeros of the right-hand side") {
  const auto p = esd::default_chaotic_params();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const State<> x(u(rng), u(rng), 0.0, u(rng));
    CHECK(esd::rhs(p, x)(2) == 0.0);

    const State<> y(u(rng), u(rng), u(rng), u(rng));
    State<> perturbed = y;
    perturbed(1) += u(rng);
    perturbed(2) += u(rng);
    CHECK(esd::rhs(p, y)(3) == esd::rhs(p, perturbed)(3));
  }
}

TEST_CASE("rhs rejects non-finite states") {
  const auto p = esd::default_chaotic_params();
  State<> x = esd::default_initial_state();
  x(2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(esd::rhs(p, x), "non-finite state", std::domain_error);
}

TEST_CASE("row-wise rhs agrees with the single-state form") {
  const auto p = esd::default_chaotic_params();
  esd::OutputRows<double> rows(3, 4);
  rows << 0.82, 0.29, 0.48, 0.1, 0, 0, 0, 0, -1.5, 2.0, 0.3, 4.0;
  const auto d = esd::rhs_rows(p, rows);
  for (int i = 0; i < 3; ++i) {
    const State<> single = esd::rhs(p, State<>(rows.row(i).transpose()));
    for (int k = 0; k < 4; ++k) CHECK(std::abs(d(i, k) - single(k)) <= 1e-15 * std::max(1.0, std::abs(single(k))));
  }
}
