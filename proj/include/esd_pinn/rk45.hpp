#pragma once

// Dormand-Prince 5(4) embedded pair with adaptive step control and the
// pair's quartic dense output. Steps are never forced onto output times;
// output values come from the interpolant of the step that contains them.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/solution_table.hpp"

namespace esd {

struct ToleranceSpec {
  double atol = 1e-6;
  double rtol = 1e-3;

  void validate() const {
    if (!(atol > 0.0) || !(rtol > 0.0) || !std::isfinite(atol) || !std::isfinite(rtol))
      throw std::invalid_argument("tolerances must be positive and finite");
  }
};

template <typename Scalar = double>
using StageMatrix = Eigen::Matrix<Scalar, 7, 4>;

/// One accepted step, with the stage derivatives needed for dense output.
template <typename Scalar = double>
struct StepRecord {
  Scalar t_start = 0;
  Scalar t_end = 0;
  State<Scalar> y_start;
  State<Scalar> y_end;
  StageMatrix<Scalar> k_stages;
};

template <typename Scalar = double>
struct StepResult {
  State<Scalar> y5;
  State<Scalar> err_est;  // |y5 - y4|
  StageMatrix<Scalar> stages;
};

namespace dopri5 {

inline constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};

inline constexpr double a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};

// Fifth-order weights (same as the last row of a).
inline constexpr double b[7] = {35.0 / 384,     0.0,         500.0 / 1113, 125.0 / 192,
                                -2187.0 / 6784, 11.0 / 84,   0.0};

// b5 - b4
inline constexpr double e[7] = {71.0 / 57600,     0.0,         -71.0 / 16695, 71.0 / 1920,
                                -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

// Dense output: y(t0 + x h) = y0 + h * sum_i k_i * sum_j p[i][j] x^(j+1)
inline constexpr double p[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933,
     87487479700.0 / 32700410799},
    {0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
     701980252875.0 / 199316789632},
    {0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423}};

inline constexpr double kMaxFactor = 5.0;
inline constexpr double kMinFactor = 0.2;
inline constexpr double kSafety = 0.9;

}  // namespace dopri5

/// Callable f(t, y) returning dy/dt.
template <typename F, typename Scalar = double>
concept OdeSystem = std::invocable<F&, Scalar, const State<Scalar>&>;

/// One embedded step from (t, y) with step h, given k1 = f(t, y).
template <typename Scalar, OdeSystem<Scalar> System>
StepResult<Scalar> step_with_first_stage(System&& f, const State<Scalar>& y, Scalar t, Scalar h,
                                         const State<Scalar>& k1) {
  StepResult<Scalar> r;
  r.stages.row(0) = k1.transpose();
  for (int s = 1; s < 7; ++s) {
    State<Scalar> dy = State<Scalar>::Zero();
    for (int j = 0; j < s; ++j) dy += Scalar(dopri5::a[s][j]) * r.stages.row(j).transpose();
    const State<Scalar> ys = y + h * dy;
    if (s == 6) r.y5 = ys;
    r.stages.row(s) = f(t + Scalar(dopri5::c[s]) * h, ys).transpose();
  }
  State<Scalar> err = State<Scalar>::Zero();
  for (int s = 0; s < 7; ++s) err += Scalar(dopri5::e[s]) * r.stages.row(s).transpose();
  r.err_est = (h * err).cwiseAbs();
  return r;
}

template <typename Scalar, OdeSystem<Scalar> System>
StepResult<Scalar> step(System&& f, const State<Scalar>& y, Scalar t, Scalar h) {
  if (!(h > Scalar(0))) throw std::invalid_argument("step size must be positive");
  return step_with_first_stage(f, y, t, h, State<Scalar>(f(t, y)));
}

/// One step of the ESD system.
template <typename Scalar>
StepResult<Scalar> step(const EsdParameters& params, const State<Scalar>& y, Scalar t, Scalar h) {
  return step([&](Scalar, const State<Scalar>& s) { return rhs(params, s); }, y, t, h);
}

/// Quartic dense-output interpolant of an accepted step.
template <typename Scalar>
State<Scalar> interpolate(const StepRecord<Scalar>& rec, Scalar t) {
  if (!(t >= rec.t_start && t <= rec.t_end)) {
    std::ostringstream msg;
    msg << "interpolation time " << t << " outside step [" << rec.t_start << ", " << rec.t_end
        << "]";
    throw std::out_of_range(msg.str());
  }
  const Scalar h = rec.t_end - rec.t_start;
  const Scalar x = (t - rec.t_start) / h;
  const Scalar powers[4] = {x, x * x, x * x * x, x * x * x * x};
  State<Scalar> dy = State<Scalar>::Zero();
  for (int i = 0; i < 7; ++i) {
    Scalar w = 0;
    for (int j = 0; j < 4; ++j) w += Scalar(dopri5::p[i][j]) * powers[j];
    dy += w * rec.k_stages.row(i).transpose();
  }
  return rec.y_start + h * dy;
}

namespace detail {

template <typename Scalar>
Scalar rms(const State<Scalar>& v) {
  return std::sqrt(v.squaredNorm() / Scalar(4));
}

/// Automatic initial step from the local derivative magnitude (Hairer, Norsett, Wanner).
template <typename System, typename Scalar>
Scalar initial_step(System& f, Scalar t0, const State<Scalar>& y0, const State<Scalar>& f0,
                    Scalar span, const ToleranceSpec& tol) {
  const State<Scalar> scale = (Scalar(tol.atol) + Scalar(tol.rtol) * y0.array().abs()).matrix();
  const Scalar d0 = rms<Scalar>(y0.cwiseQuotient(scale));
  const Scalar d1 = rms<Scalar>(f0.cwiseQuotient(scale));
  const Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
  const State<Scalar> y1 = y0 + h0 * f0;
  const State<Scalar> f1 = f(t0 + h0, y1);
  const Scalar d2 = rms<Scalar>((f1 - f0).cwiseQuotient(scale)) / h0;
  const Scalar h1 = (d1 <= Scalar(1e-15) && d2 <= Scalar(1e-15))
                        ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                        : std::pow(Scalar(0.01) / std::max(d1, d2), Scalar(1) / Scalar(5));
  return std::min({Scalar(100) * h0, h1, span});
}

[[noreturn]] inline void integration_failure(double t, const char* why) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "integration failure at t=" << t << ": " << why;
  throw std::runtime_error(msg.str());
}

}  // namespace detail

/// Integrates y' = f(t, y) over [a, b] and samples the solution at `grid`.
/// Each accepted step satisfies rms(err / (atol + rtol max(|y|, |y_new|))) <= 1.
/// Called for every accepted step with its record and scaled error norm.
using StepObserver = std::function<void(const StepRecord<double>&, double)>;

template <OdeSystem System>
SolutionTable integrate(System&& f, const State<double>& y0, double a, double b,
                        const ToleranceSpec& tol, const Vector<double>& grid,
                        const StepObserver& on_accept = {}) {
  if (!(a < b)) throw std::invalid_argument("t_span must satisfy a < b");
  tol.validate();
  if (!y0.allFinite()) throw std::invalid_argument("initial state is not finite");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(grid(i) >= a && grid(i) <= b)) throw std::invalid_argument("grid time outside t_span");
    if (i > 0 && !(grid(i) > grid(i - 1)))
      throw std::invalid_argument("grid must be strictly increasing");
  }

  SolutionTable out;
  out.times = grid;
  out.states.resize(grid.size(), 4);
  Eigen::Index next = 0;

  const double min_step = 1e-14 * (b - a);
  double t = a;
  State<double> y = y0;
  State<double> k1 = f(t, y);
  double h = detail::initial_step(f, t, y, k1, b - a, tol);
  bool rejected_last = false;

  while (next < grid.size() && t < b) {
    h = std::min(h, b - t);
    if (h < min_step) detail::integration_failure(t, "step size underflow");
    StepResult<double> r;
    try {
      r = step_with_first_stage(f, y, t, h, k1);
    } catch (const std::domain_error&) {
      detail::integration_failure(t, "non-finite state");
    }
    const State<double> scale =
        (tol.atol + tol.rtol * y.array().abs().max(r.y5.array().abs())).matrix();
    const double err_norm = detail::rms<double>(r.err_est.cwiseQuotient(scale));

    if (!(err_norm <= 1.0)) {
      const double factor = std::isfinite(err_norm)
                                ? std::max(dopri5::kMinFactor,
                                           dopri5::kSafety * std::pow(err_norm, -0.2))
                                : dopri5::kMinFactor;
      h *= factor;
      rejected_last = true;
      continue;
    }

    const double t_new = (h == b - t) ? b : t + h;
    StepRecord<double> rec{t, t_new, y, r.y5, r.stages};
    if (on_accept) on_accept(rec, err_norm);
    while (next < grid.size() && grid(next) <= t_new) {
      out.states.row(next) = interpolate(rec, grid(next)).transpose();
      ++next;
    }

    double factor = err_norm == 0.0
                        ? dopri5::kMaxFactor
                        : std::clamp(dopri5::kSafety * std::pow(err_norm, -0.2),
                                     dopri5::kMinFactor, dopri5::kMaxFactor);
    if (rejected_last) factor = std::min(factor, 1.0);
    rejected_last = false;

    t = t_new;
    y = r.y5;
    k1 = r.stages.row(6).transpose();  // first-same-as-last
    h *= factor;
  }
  if (!out.states.allFinite()) detail::integration_failure(t, "non-finite state");
  return out;
}

/// RK45 solution of the ESD system.
inline SolutionTable integrate(const EsdParameters& params, const State<double>& y0, double a,
                               double b, const ToleranceSpec& tol, const Vector<double>& grid,
                               const StepObserver& on_accept = {}) {
  return integrate([&](double, const State<double>& s) { return rhs(params, s); }, y0, a, b, tol,
                   grid, on_accept);
}

}  // namespace esd
