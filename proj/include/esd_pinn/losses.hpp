#pragma once

#include <array>
#include <stdexcept>

#include <Eigen/Core>

#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/mlp.hpp"

namespace esd {

/// Equispaced times including both endpoints.
struct CollocationGrid {
  Vector<double> times;

  Eigen::Index size() const { return times.size(); }
};

/// t_i = a + i (b - a) / (n - 1), i = 0..n-1.
CollocationGrid make_grid(double a, double b, Eigen::Index n);

struct LossWeights {
  double alpha = 10.0;
  double beta = 1.0;
};

/// Known state at the initial time.
struct InitialCondition {
  double t_initial = 0.0;
  State<double> state = State<double>::Zero();
};

struct LossBreakdown {
  double eq1 = 0.0;
  double eq2 = 0.0;
  double eq3 = 0.0;
  double eq4 = 0.0;
  double initial = 0.0;
  double total = 0.0;

  std::array<double, 4> equations() const { return {eq1, eq2, eq3, eq4}; }
};

/// alpha * (eq1 + eq2 + eq3 + eq4) + beta * initial
inline double total_loss(const std::array<double, 4>& eq, double initial, const LossWeights& w) {
  return w.alpha * (eq[0] + eq[1] + eq[2] + eq[3]) + w.beta * initial;
}

template <typename Scalar>
struct TangentRows {
  OutputRows<Scalar> value;    // X(t_i)
  OutputRows<Scalar> tangent;  // dX/dt(t_i)
};

/// Forward pass carrying d/dt alongside every activation:
/// dz = da_prev * W, da = (1 - tanh(z)^2) * dz.
template <typename Scalar, typename Derived>
TangentRows<Scalar> forward_with_tangent_rows(const Mlp<Scalar>& net,
                                              const Eigen::MatrixBase<Derived>& times) {
  const auto& sc = net.input_scaling();
  const Eigen::Index n = times.size();
  Matrix<Scalar> a =
      (Scalar(sc.scale) * times.derived().template cast<Scalar>().array() + Scalar(sc.shift))
          .matrix();
  Matrix<Scalar> da = Matrix<Scalar>::Constant(n, 1, Scalar(sc.scale));
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t v = 0; v < last; ++v) {
    const auto& l = net.layer(v);
    Matrix<Scalar> z = a * l.weights;
    z.rowwise() += l.bias.transpose();
    const Matrix<Scalar> dz = da * l.weights;
    a = z.unaryExpr([](Scalar x) { return tanh_activation(x); });
    da = ((Scalar(1) - a.array().square()) * dz.array()).matrix();
  }
  const auto& out = net.layer(last);
  TangentRows<Scalar> r;
  r.value = a * out.weights;
  r.value.rowwise() += out.bias.transpose();
  r.tangent = da * out.weights;
  return r;
}

/// Mean squared residual of each equation over the grid, X' - f(X).
template <typename Scalar>
std::array<Scalar, 4> residual_losses(const Mlp<Scalar>& net, const EsdParameters& params,
                                      const CollocationGrid& grid) {
  if (grid.size() == 0) throw std::invalid_argument("empty collocation grid");
  const auto xt = forward_with_tangent_rows(net, grid.times);
  const OutputRows<Scalar> r = xt.tangent - rhs_rows(params, xt.value);
  std::array<Scalar, 4> out{};
  for (int k = 0; k < 4; ++k) out[k] = r.col(k).squaredNorm() / Scalar(grid.size());
  return out;
}

/// sum_i (X_i(t_initial) - x_i(t_initial))^2
template <typename Scalar>
Scalar initial_loss(const Mlp<Scalar>& net, const InitialCondition& ic) {
  const Eigen::Matrix<Scalar, 4, 1> x = forward(net, Scalar(ic.t_initial));
  return (x - ic.state.template cast<Scalar>()).squaredNorm();
}

}  // namespace esd
