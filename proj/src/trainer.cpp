#include "esd_pinn/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>
#include <tuple>

namespace esd {

void TrainingConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (const auto v = validate_params(params); !v.ok()) {
    std::string msg = "esd_params:";
    for (const auto& s : v.violations) msg += " " + s + ";";
    fail(msg);
  }
  if (!(t_begin < t_end)) fail("t_span: requires a < b");
  if (n_points < 2) fail("n_points: must be >= 2");
  if (hidden_layers < 1) fail("hidden_layers: must be >= 1");
  if (hidden_width < 1) fail("hidden_width: must be >= 1");
  if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0)) fail("alpha/beta: must be >= 0");
  if (weights.alpha == 0.0 && weights.beta == 0.0) fail("alpha/beta: not both zero");
  if (!(lr_initial > 0.0)) fail("lr_initial: must be > 0");
  if (!(lr_floor > 0.0) || lr_floor > lr_initial) fail("lr_floor: must be in (0, lr_initial]");
  if (max_epochs < 1) fail("max_epochs: must be >= 1");
  if (!(epsilon_stop > 0.0)) fail("epsilon_stop: must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) fail("adam.beta1: must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("adam.beta2: must be in [0, 1)");
  if (!(adam.eps > 0.0)) fail("adam.eps: must be > 0");
  if (checkpoint_every < 0) fail("checkpoint_every: must be >= 0");
  if (!std::isfinite(t_initial)) fail("t_initial: must be finite");
  if (!initial_state.allFinite()) fail("initial_state: must be finite");
}

InputScaling TrainingConfig::resolved_input_scaling() const {
  const bool on = input_scaling == InputScalingMode::On ||
                  (input_scaling == InputScalingMode::Auto && t_end - t_begin > 10.0);
  return on ? InputScaling::to_unit_interval(t_begin, t_end) : InputScaling{};
}

LossSpec TrainingConfig::total_loss_spec() const {
  LossSpec spec;
  spec.term = LossTerm::Total;
  spec.params = params;
  spec.weights = weights;
  spec.initial = initial_condition();
  return spec;
}

std::pair<OptimizerState, ParameterVector<double>> adam_step(OptimizerState opt,
                                                             ParameterVector<double> params,
                                                             const GradientVector<double>& grad,
                                                             double lr, const AdamSettings& cfg) {
  if (params.size() != grad.size() || opt.m.size() != params.size() ||
      opt.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  ++opt.step;
  opt.m = cfg.beta1 * opt.m + (1.0 - cfg.beta1) * grad;
  opt.v = cfg.beta2 * opt.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double m_corr = 1.0 - std::pow(cfg.beta1, double(opt.step));
  const double v_corr = 1.0 - std::pow(cfg.beta2, double(opt.step));
  params.array() -= lr * (opt.m.array() / m_corr) / ((opt.v.array() / v_corr).sqrt() + cfg.eps);
  return {std::move(opt), std::move(params)};
}

ParameterVector<double> gradient_descent_step(ParameterVector<double> params,
                                              const GradientVector<double>& grad, double lr) {
  if (params.size() != grad.size())
    throw std::invalid_argument("gradient_descent_step: length mismatch");
  params -= lr * grad;
  return params;
}

double lr_schedule(long epoch, const TrainingConfig& cfg) {
  if (epoch >= cfg.max_epochs) return cfg.lr_floor;
  const double decay = std::pow(cfg.lr_floor / cfg.lr_initial, double(epoch) / double(cfg.max_epochs));
  return std::max(cfg.lr_floor, cfg.lr_initial * decay);
}

TrainingState fresh_training_state(const TrainingConfig& cfg) {
  auto net = init_network<double>(cfg.hidden_layers, cfg.hidden_width, cfg.seed,
                                  cfg.resolved_input_scaling());
  const auto n = net.parameter_count();
  return TrainingState{std::move(net), OptimizerState::zeros(n), 0, Vector<double>(),
                       std::numeric_limits<double>::infinity(), 0};
}

TrainingResult train(const TrainingConfig& cfg, const TrainingCallbacks& callbacks) {
  cfg.validate();
  return train(cfg, fresh_training_state(cfg), callbacks);
}

namespace {

void check_finite(const LossBreakdown& b, long epoch) {
  const std::pair<const char*, double> parts[] = {{"eq1", b.eq1},         {"eq2", b.eq2},
                                                  {"eq3", b.eq3},         {"eq4", b.eq4},
                                                  {"initial", b.initial}, {"total", b.total}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << " (component " << name << ")";
      throw TrainingError(msg.str());
    }
  }
}

}  // namespace

TrainingResult train(const TrainingConfig& cfg, TrainingState state,
                     const TrainingCallbacks& callbacks) {
  cfg.validate();
  if (state.optimizer.m.size() != state.network.parameter_count())
    throw std::invalid_argument("optimizer state does not match network");

  const CollocationGrid grid = make_grid(cfg.t_begin, cfg.t_end, cfg.n_points);
  const LossSpec spec = cfg.total_loss_spec();
  TrainingHistory history;
  bool converged = false;
  Vector<double> params = flatten(state.network);

  for (long epoch = state.next_epoch; epoch < cfg.max_epochs; ++epoch) {
    const auto lg = loss_gradient(state.network, grid, spec, cfg.threads);
    check_finite(lg.breakdown, epoch);
    if (!lg.grad.allFinite()) {
      throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch) +
                          " (component total)");
    }
    const double lr = lr_schedule(epoch, cfg);
    const EpochRecord record{epoch, lg.breakdown, lr};
    history.records.push_back(record);

    if (lg.breakdown.total < state.best_loss) {
      state.best_loss = lg.breakdown.total;
      state.best_epoch = epoch;
      state.best_parameters = params;
    }
    state.next_epoch = epoch + 1;
    if (lg.breakdown.total <= cfg.epsilon_stop) {
      converged = true;
      if (callbacks.on_epoch) callbacks.on_epoch(record, state);
      break;
    }

    if (cfg.optimizer == OptimizerKind::Adam) {
      std::tie(state.optimizer, params) =
          adam_step(std::move(state.optimizer), std::move(params), lg.grad, lr, cfg.adam);
    } else {
      params = gradient_descent_step(std::move(params), lg.grad, lr);
      ++state.optimizer.step;
    }
    state.network = unflatten(state.network, params);
    if (callbacks.on_epoch) callbacks.on_epoch(record, state);
  }

  const Mlp<double> best = state.best_parameters.size() == params.size()
                               ? unflatten(state.network, state.best_parameters)
                               : state.network;
  TrainedModel model{best, state.network, state.best_loss, state.best_epoch, converged};
  return {std::move(model), std::move(history), std::move(state)};
}

SolutionTable predict(const TrainedModel& model, const Vector<double>& times) {
  SolutionTable table;
  table.times = times;
  table.states = forward_rows(model.network, times);
  return table;
}

}  // namespace esd
