#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace esd {

/// Four-component state (demand, supply, imports, renewables).
template <typename Scalar = double>
using State = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar = double>
using StateDerivative = Eigen::Matrix<Scalar, 4, 1>;

/// Coefficients of the energy supply-demand system. All strictly positive, N < M.
struct EsdParameters {
  double a1 = 0.0;
  double a2 = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double M = 0.0;
  double N = 0.0;

  bool operator==(const EsdParameters&) const = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

/// Parameter set under which the system is chaotic.
EsdParameters default_chaotic_params();

/// (0.82, 0.29, 0.48, 0.1)
State<double> default_initial_state();

/// Checks strict positivity of every coefficient and N < M. Never throws.
ValidationResult validate_params(const EsdParameters& params);

/// Right-hand side of the ESD system at a single state.
///
///   x1' = a1 x1 (1 - x1/M) - a2 (x2 + x3) - d3 x4
///   x2' = -z1 x2 - z2 x3 + z3 x1 [N - (x1 - x3)]
///   x3' = s1 x3 (s2 x1 - s3)
///   x4' = d1 x1 - d2 x4
///
/// Throws std::domain_error("non-finite state") on NaN/Inf input.
template <typename Derived>
StateDerivative<typename Derived::Scalar> rhs(const EsdParameters& p,
                                              const Eigen::MatrixBase<Derived>& s) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 4);
  using Scalar = typename Derived::Scalar;
  if (!s.allFinite()) throw std::domain_error("non-finite state");
  const Scalar x1 = s(0), x2 = s(1), x3 = s(2), x4 = s(3);
  StateDerivative<Scalar> dx;
  dx(0) = p.a1 * x1 * (Scalar(1) - x1 / p.M) - p.a2 * (x2 + x3) - p.d3 * x4;
  dx(1) = -p.z1 * x2 - p.z2 * x3 + p.z3 * x1 * (p.N - (x1 - x3));
  dx(2) = p.s1 * x3 * (p.s2 * x1 - p.s3);
  dx(3) = p.d1 * x1 - p.d2 * x4;
  return dx;
}

/// Row-wise right-hand side: each row of `states` (n x 4) is one state.
/// Same arithmetic as rhs(), without the finiteness check.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 4> rhs_rows(
    const EsdParameters& p, const Eigen::MatrixBase<Derived>& states) {
  using Scalar = typename Derived::Scalar;
  const auto x1 = states.col(0).array();
  const auto x2 = states.col(1).array();
  const auto x3 = states.col(2).array();
  const auto x4 = states.col(3).array();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 4> dx(states.rows(), 4);
  dx.col(0) = (p.a1 * x1 * (Scalar(1) - x1 / p.M) - p.a2 * (x2 + x3) - p.d3 * x4).matrix();
  dx.col(1) = (-p.z1 * x2 - p.z2 * x3 + p.z3 * x1 * (p.N - (x1 - x3))).matrix();
  dx.col(2) = (p.s1 * x3 * (p.s2 * x1 - p.s3)).matrix();
  dx.col(3) = (p.d1 * x1 - p.d2 * x4).matrix();
  return dx;
}

}  // namespace esd
