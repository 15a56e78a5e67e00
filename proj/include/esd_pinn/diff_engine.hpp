#pragma once

// Exact derivatives of the network: d/dt of the outputs (forward tangent
// propagation) and gradients of the training losses with respect to every
// parameter (reverse accumulation through both the primal and the tangent
// passes). Finite-difference routines here are verification oracles only.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/losses.hpp"
#include "esd_pinn/mlp.hpp"

namespace esd {

template <typename Scalar = double>
struct TangentOutput {
  Eigen::Matrix<Scalar, 4, 1> value;
  Eigen::Matrix<Scalar, 4, 1> tangent;
};

template <typename Scalar = double>
using GradientVector = Vector<Scalar>;

template <typename Scalar>
TangentOutput<Scalar> forward_with_tangent(const Mlp<Scalar>& net, Scalar t) {
  Vector<Scalar> times(1);
  times(0) = t;
  const auto r = forward_with_tangent_rows(net, times);
  return {r.value.row(0).transpose(), r.tangent.row(0).transpose()};
}

enum class LossTerm { Eq1, Eq2, Eq3, Eq4, Initial, Total };

/// Which loss to differentiate, plus everything needed to evaluate it.
/// The differentiated quantity is `scale * term`.
struct LossSpec {
  LossTerm term = LossTerm::Total;
  EsdParameters params;
  LossWeights weights;
  InitialCondition initial;
  double scale = 1.0;

  /// Coefficient of each residual mean (eq1..eq4) and of the initial loss.
  std::array<double, 5> coefficients() const {
    switch (term) {
      case LossTerm::Eq1: return {scale, 0, 0, 0, 0};
      case LossTerm::Eq2: return {0, scale, 0, 0, 0};
      case LossTerm::Eq3: return {0, 0, scale, 0, 0};
      case LossTerm::Eq4: return {0, 0, 0, scale, 0};
      case LossTerm::Initial: return {0, 0, 0, 0, scale};
      case LossTerm::Total: break;
    }
    const double a = scale * weights.alpha;
    return {a, a, a, a, scale * weights.beta};
  }
};

template <typename Scalar = double>
struct LossGradient {
  Scalar loss = 0;
  GradientVector<Scalar> grad;
  LossBreakdown breakdown;  // every component, independent of the selected term
};

/// Points per work unit. Fixed so the reduction order never depends on the thread count.
inline constexpr Eigen::Index kChunkRows = 256;

namespace detail {

template <typename Scalar>
struct Tape {
  std::vector<Matrix<Scalar>> a_in;   // layer inputs
  std::vector<Matrix<Scalar>> da_in;  // their time derivatives
  std::vector<Matrix<Scalar>> act;    // tanh(z), hidden layers
  std::vector<Matrix<Scalar>> dz;     // da_prev * W, hidden layers
  OutputRows<Scalar> x;
  OutputRows<Scalar> xp;
};

template <typename Scalar, typename Derived>
Tape<Scalar> record(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& times) {
  const auto& sc = net.input_scaling();
  const std::size_t last = net.num_layers() - 1;
  Tape<Scalar> tape;
  tape.a_in.reserve(last + 1);
  tape.da_in.reserve(last + 1);
  tape.act.reserve(last);
  tape.dz.reserve(last);
  tape.a_in.push_back(
      (Scalar(sc.scale) * times.derived().template cast<Scalar>().array() + Scalar(sc.shift))
          .matrix());
  tape.da_in.push_back(Matrix<Scalar>::Constant(times.size(), 1, Scalar(sc.scale)));
  for (std::size_t v = 0; v < last; ++v) {
    const auto& l = net.layer(v);
    Matrix<Scalar> z = tape.a_in.back() * l.weights;
    z.rowwise() += l.bias.transpose();
    tape.dz.push_back(tape.da_in.back() * l.weights);
    tape.act.push_back(z.unaryExpr([](Scalar s) { return tanh_activation(s); }));
    const auto& a = tape.act.back();
    tape.a_in.push_back(a);
    tape.da_in.push_back(((Scalar(1) - a.array().square()) * tape.dz.back().array()).matrix());
  }
  const auto& out = net.layer(last);
  tape.x = tape.a_in.back() * out.weights;
  tape.x.rowwise() += out.bias.transpose();
  tape.xp = tape.da_in.back() * out.weights;
  return tape;
}

/// Adds d(loss)/d(params) to `grad` given adjoints of the outputs (g_x) and
/// of their time derivatives (g_xp).
template <typename Scalar>
void backpropagate(const Mlp<Scalar>& net, const Tape<Scalar>& tape, OutputRows<Scalar> g_x,
                   OutputRows<Scalar> g_xp, GradientVector<Scalar>& grad) {
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t n_layers = net.num_layers();
  std::vector<Eigen::Index> offset(n_layers);
  Eigen::Index k = 0;
  for (std::size_t v = 0; v < n_layers; ++v) {
    offset[v] = k;
    k += net.layer(v).weights.size() + net.layer(v).bias.size();
  }

  Matrix<Scalar> g_a = std::move(g_x);    // adjoint of layer output
  Matrix<Scalar> g_da = std::move(g_xp);  // adjoint of its time derivative
  for (std::size_t v = n_layers; v-- > 0;) {
    const auto& l = net.layer(v);
    Matrix<Scalar> g_z, g_dz;
    if (v + 1 == n_layers) {
      g_z = std::move(g_a);
      g_dz = std::move(g_da);
    } else {
      // da = (1 - a^2) dz, a = tanh(z)
      const auto a = tape.act[v].array();
      const auto slope = Scalar(1) - a.square();
      g_dz = (g_da.array() * slope).matrix();
      const auto g_act = g_a.array() - Scalar(2) * a * g_da.array() * tape.dz[v].array();
      g_z = (g_act * slope).matrix();
    }
    Eigen::Map<RowMajor> g_w(grad.data() + offset[v], l.weights.rows(), l.weights.cols());
    g_w.noalias() += tape.a_in[v].transpose() * g_z;
    g_w.noalias() += tape.da_in[v].transpose() * g_dz;
    grad.segment(offset[v] + l.weights.size(), l.bias.size()) += g_z.colwise().sum().transpose();
    if (v > 0) {
      g_a.noalias() = g_z * l.weights.transpose();
      g_da.noalias() = g_dz * l.weights.transpose();
    }
  }
}

/// Vector-Jacobian product of the residual r = X' - f(X) with respect to X:
/// returns -g_xp * df/dx row by row.
template <typename Scalar>
OutputRows<Scalar> residual_state_adjoint(const EsdParameters& p, const OutputRows<Scalar>& x,
                                          const OutputRows<Scalar>& g_xp) {
  const auto x1 = x.col(0).array();
  const auto x3 = x.col(2).array();
  const auto g1 = g_xp.col(0).array();
  const auto g2 = g_xp.col(1).array();
  const auto g3 = g_xp.col(2).array();
  const auto g4 = g_xp.col(3).array();
  OutputRows<Scalar> g(x.rows(), 4);
  g.col(0) = -(g1 * p.a1 * (Scalar(1) - Scalar(2) * x1 / p.M) +
               g2 * p.z3 * (p.N - Scalar(2) * x1 + x3) + g3 * (p.s1 * p.s2) * x3 + g4 * p.d1)
                  .matrix();
  g.col(1) = (g1 * p.a2 + g2 * p.z1).matrix();
  g.col(2) = (g1 * p.a2 + g2 * (p.z2 - p.z3 * x1) - g3 * p.s1 * (p.s2 * x1 - p.s3)).matrix();
  g.col(3) = (g1 * p.d3 + g4 * p.d2).matrix();
  return g;
}

template <typename Scalar>
struct ChunkResult {
  std::array<Scalar, 4> squared_residuals{};
  GradientVector<Scalar> grad;
};

template <typename Scalar>
ChunkResult<Scalar> residual_chunk(const Mlp<Scalar>& net, const Vector<double>& times,
                                   Eigen::Index begin, Eigen::Index count,
                                   const LossSpec& spec, Eigen::Index n_total, bool need_grad) {
  const auto tape = record(net, times.segment(begin, count));
  const OutputRows<Scalar> r = tape.xp - rhs_rows(spec.params, tape.x);
  ChunkResult<Scalar> out;
  for (int k = 0; k < 4; ++k) out.squared_residuals[k] = r.col(k).squaredNorm();
  const auto c = spec.coefficients();
  if (!need_grad || (c[0] == 0 && c[1] == 0 && c[2] == 0 && c[3] == 0)) return out;
  OutputRows<Scalar> g_xp(count, 4);
  for (int k = 0; k < 4; ++k) g_xp.col(k) = Scalar(2 * c[k] / double(n_total)) * r.col(k);
  OutputRows<Scalar> g_x = residual_state_adjoint(spec.params, tape.x, g_xp);
  out.grad = GradientVector<Scalar>::Zero(net.parameter_count());
  backpropagate(net, tape, std::move(g_x), std::move(g_xp), out.grad);
  return out;
}

template <typename Scalar>
LossGradient<Scalar> evaluate(const Mlp<Scalar>& net, const CollocationGrid& batch,
                              const LossSpec& spec, bool need_grad, int threads) {
  if (batch.size() == 0) throw std::invalid_argument("empty collocation batch");
  const Eigen::Index n = batch.size();
  const Eigen::Index n_chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<ChunkResult<Scalar>> chunks(n_chunks);
  auto run = [&](Eigen::Index first, Eigen::Index stride) {
    for (Eigen::Index c = first; c < n_chunks; c += stride) {
      const Eigen::Index begin = c * kChunkRows;
      chunks[c] = residual_chunk(net, batch.times, begin, std::min(kChunkRows, n - begin), spec,
                                 n, need_grad);
    }
  };
  const Eigen::Index workers = std::clamp<Eigen::Index>(threads, 1, n_chunks);
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (Eigen::Index w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
  }

  LossGradient<Scalar> result;
  result.grad = GradientVector<Scalar>::Zero(net.parameter_count());
  std::array<Scalar, 4> sums{};
  for (const auto& chunk : chunks) {  // fixed order
    for (int k = 0; k < 4; ++k) sums[k] += chunk.squared_residuals[k];
    if (chunk.grad.size() != 0) result.grad += chunk.grad;
  }

  const auto c = spec.coefficients();
  const auto ic_tape = record(net, Vector<double>::Constant(1, spec.initial.t_initial));
  const OutputRows<Scalar> ic_err =
      ic_tape.x - spec.initial.state.template cast<Scalar>().transpose();
  const Scalar init = ic_err.squaredNorm();
  if (need_grad && c[4] != 0) {
    backpropagate(net, ic_tape, OutputRows<Scalar>(Scalar(2 * c[4]) * ic_err),
                  OutputRows<Scalar>(OutputRows<Scalar>::Zero(1, 4)), result.grad);
  }

  auto& b = result.breakdown;
  b.eq1 = double(sums[0] / Scalar(n));
  b.eq2 = double(sums[1] / Scalar(n));
  b.eq3 = double(sums[2] / Scalar(n));
  b.eq4 = double(sums[3] / Scalar(n));
  b.initial = double(init);
  b.total = total_loss(b.equations(), b.initial, spec.weights);
  result.loss = Scalar(c[0] * b.eq1 + c[1] * b.eq2 + c[2] * b.eq3 + c[3] * b.eq4 + c[4] * b.initial);
  return result;
}

}  // namespace detail

/// Loss value and its exact gradient with respect to flatten(net).
/// Per-chunk contributions may run on up to `threads` threads; the reduction
/// order is fixed, so results are bit-identical for any thread count.
template <typename Scalar>
LossGradient<Scalar> loss_gradient(const Mlp<Scalar>& net, const CollocationGrid& batch,
                                   const LossSpec& spec, int threads = 1) {
  return detail::evaluate(net, batch, spec, true, threads);
}

/// The selected loss computed directly from the loss definitions (no tape).
template <typename Scalar>
Scalar evaluate_loss(const Mlp<Scalar>& net, const CollocationGrid& batch, const LossSpec& spec) {
  const auto eq = residual_losses(net, spec.params, batch);
  const Scalar init = initial_loss(net, spec.initial);
  const auto c = spec.coefficients();
  return c[0] * eq[0] + c[1] * eq[1] + c[2] * eq[2] + c[3] * eq[3] + c[4] * init;
}

/// Central-difference gradient of any scalar function of a parameter vector.
template <typename Fn>
Vector<double> central_difference_gradient(Fn&& loss, const Vector<double>& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Vector<double> g(p.size());
  Vector<double> q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    q(i) = p(i) + h;
    const double up = loss(q);
    q(i) = p(i) - h;
    const double down = loss(q);
    q(i) = p(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// (L(p + h e_i) - L(p - h e_i)) / 2h for every parameter.
inline GradientVector<double> finite_diff_gradient(const Mlp<double>& net,
                                                   const CollocationGrid& batch,
                                                   const LossSpec& spec, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (batch.size() == 0) throw std::invalid_argument("empty collocation batch");
  return central_difference_gradient(
      [&](const Vector<double>& q) { return evaluate_loss(unflatten(net, q), batch, spec); },
      flatten(net), h);
}

/// (forward(t + h) - forward(t - h)) / 2h
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> finite_diff_tangent(const Mlp<Scalar>& net, Scalar t, Scalar h) {
  if (!(h > Scalar(0))) throw std::invalid_argument("finite-difference step must be positive");
  return (forward(net, t + h) - forward(net, t - h)) / (Scalar(2) * h);
}

}  // namespace esd
