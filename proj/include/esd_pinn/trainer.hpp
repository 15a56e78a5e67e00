#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "esd_pinn/diff_engine.hpp"
#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/losses.hpp"
#include "esd_pinn/mlp.hpp"
#include "esd_pinn/solution_table.hpp"

namespace esd {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class OptimizerKind { Adam, GradientDescent };

enum class InputScalingMode { Auto, On, Off };

struct TrainingConfig {
  EsdParameters params = default_chaotic_params();
  double t_begin = 0.0;
  double t_end = 100.0;
  Eigen::Index n_points = 20000;
  int hidden_layers = 16;
  int hidden_width = 100;
  std::uint64_t seed = 42;
  InputScalingMode input_scaling = InputScalingMode::Auto;
  LossWeights weights{10.0, 1.0};
  double lr_initial = 8e-5;
  double lr_floor = 1e-6;
  long max_epochs = 175000;
  double epsilon_stop = 1e-7;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamSettings adam;
  long checkpoint_every = 1000;
  double t_initial = 0.0;
  State<double> initial_state = default_initial_state();
  int threads = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  InitialCondition initial_condition() const { return {t_initial, initial_state}; }
  InputScaling resolved_input_scaling() const;
  LossSpec total_loss_spec() const;
};

struct OptimizerState {
  Vector<double> m;
  Vector<double> v;
  long step = 0;

  static OptimizerState zeros(Eigen::Index n) {
    return {Vector<double>::Zero(n), Vector<double>::Zero(n), 0};
  }
};

struct EpochRecord {
  long epoch = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
};

struct TrainedModel {
  Mlp<double> network;        // lowest-loss parameters seen
  Mlp<double> final_network;  // parameters after the last update
  double best_loss = 0.0;
  long best_epoch = 0;
  bool converged = false;     // stopped on epsilon_stop
};

/// Everything needed to continue a run bit-exactly.
struct TrainingState {
  Mlp<double> network;
  OptimizerState optimizer;
  long next_epoch = 0;
  Vector<double> best_parameters;
  double best_loss = 0.0;
  long best_epoch = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam update.
std::pair<OptimizerState, ParameterVector<double>> adam_step(OptimizerState opt,
                                                             ParameterVector<double> params,
                                                             const GradientVector<double>& grad,
                                                             double lr, const AdamSettings& cfg);

/// Plain gradient descent, p <- p - lr * g.
ParameterVector<double> gradient_descent_step(ParameterVector<double> params,
                                              const GradientVector<double>& grad, double lr);

/// max(lr_floor, lr_initial * gamma^epoch), gamma chosen so the floor is hit at max_epochs.
double lr_schedule(long epoch, const TrainingConfig& cfg);

TrainingState fresh_training_state(const TrainingConfig& cfg);

struct TrainingCallbacks {
  /// Called after each epoch's update with the record and the post-update state.
  std::function<void(const EpochRecord&, const TrainingState&)> on_epoch;
};

struct TrainingResult {
  TrainedModel model;
  TrainingHistory history;
  TrainingState state;
};

/// Full-batch training over the collocation grid: each epoch evaluates the
/// loss breakdown and exact gradient, records them, and applies one update.
/// Stops once the total loss reaches epsilon_stop or after max_epochs.
TrainingResult train(const TrainingConfig& cfg, const TrainingCallbacks& callbacks = {});

/// Continues from `state` (next_epoch onward).
TrainingResult train(const TrainingConfig& cfg, TrainingState state,
                     const TrainingCallbacks& callbacks = {});

/// Network values at arbitrary times.
SolutionTable predict(const TrainedModel& model, const Vector<double>& times);

}  // namespace esd
