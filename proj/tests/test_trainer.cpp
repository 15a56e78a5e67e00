#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <optional>

#include "esd_pinn/trainer.hpp"

using namespace esd;

namespace {

// One hidden unit with zero weights; the output bias is the constant value.
Mlp<double> constant_net(const State<>& c) {
  std::vector<Layer<double>> layers;
  layers.push_back({Matrix<double>::Zero(1, 1), Vector<double>::Zero(1)});
  layers.push_back({Matrix<double>::Zero(1, 4), c});
  return Mlp<double>(std::move(layers));
}

Mlp<double> zero_net() { return constant_net(State<>::Zero()); }

TrainingConfig tiny_config() {
  TrainingConfig cfg;
  cfg.t_begin = 0.0;
  cfg.t_end = 2.0;
  cfg.n_points = 16;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 6;
  cfg.seed = 7;
  cfg.max_epochs = 40;
  cfg.lr_initial = 1e-3;
  cfg.lr_floor = 1e-4;
  return cfg;
}

}  // namespace

TEST_CASE("make_grid") {
  const auto g = make_grid(0.0, 1.0, 5).times;
  REQUIRE(g.size() == 5);
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(g(i) == expected[i]);

  const auto two = make_grid(0.0, 1.0, 2).times;
  CHECK(two(0) == 0.0);
  CHECK(two(1) == 1.0);

  const auto big = make_grid(0.0, 100.0, 20000).times;
  CHECK(big(0) == 0.0);
  CHECK(big(19999) == 100.0);
  CHECK(big(1) - big(0) == doctest::Approx(100.0 / 19999).epsilon(1e-12));

  CHECK_THROWS_AS(make_grid(0.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("residual losses of crafted networks") {
  const auto p = default_chaotic_params();
  const auto grid = make_grid(0.0, 10.0, 33);

  const auto zero = residual_losses(zero_net(), p, grid);
  for (double v : zero) CHECK(v == 0.0);

  // X' = 0, so each loss is rhs_k(c)^2 (values from hand substitution).
  const auto c = residual_losses(constant_net(default_initial_state()), p, grid);
  CHECK(c[0] == doctest::Approx(0.0069422224).epsilon(1e-9));
  CHECK(c[1] == doctest::Approx(0.000356303376).epsilon(1e-9));
  CHECK(c[2] == doctest::Approx(9.216e-07).epsilon(1e-9));
  CHECK(c[3] == doctest::Approx(0.005776).epsilon(1e-9));

  CHECK_THROWS_AS(residual_losses(zero_net(), p, CollocationGrid{}), std::invalid_argument);
}

TEST_CASE("duplicated grid point gives the same mean") {
  const auto net = init_network<double>(2, 5, 3);
  const auto p = default_chaotic_params();
  CollocationGrid one{Vector<double>::Constant(1, 0.7)};
  CollocationGrid two{Vector<double>::Constant(2, 0.7)};
  const auto a = residual_losses(net, p, one);
  const auto b = residual_losses(net, p, two);
  for (int k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-15));
}

TEST_CASE("initial loss") {
  const InitialCondition ic{0.0, default_initial_state()};
  // 0.82^2 + 0.29^2 + 0.48^2 + 0.1^2
  CHECK(initial_loss(zero_net(), ic) == doctest::Approx(0.9969).epsilon(1e-12));
  CHECK(initial_loss(constant_net(default_initial_state()), ic) == 0.0);

  const State<> dev(0.01, -0.02, 0.03, 0.005);
  const double once = initial_loss(constant_net(ic.state + dev), ic);
  const double twice = initial_loss(constant_net(ic.state + 2.0 * dev), ic);
  CHECK(twice == doctest::Approx(4.0 * once).epsilon(1e-12));
}

TEST_CASE("total loss") {
  const LossWeights w{10.0, 1.0};
  CHECK(total_loss({0.1, 0.2, 0.3, 0.4}, 0.5, w) == doctest::Approx(10.5).epsilon(1e-15));
  CHECK(total_loss({0, 0, 0, 0}, 0.0, w) == 0.0);
  CHECK(total_loss({0.1, 0.2, 0.3, 0.4}, 0.5, LossWeights{0.0, 1.0}) == 0.5);
}

TEST_CASE("adam step") {
  const AdamSettings defaults;
  Vector<double> p = Vector<double>::Zero(1);
  Vector<double> g = Vector<double>::Ones(1);
  auto [opt, q] = adam_step(OptimizerState::zeros(1), p, g, 1e-3, defaults);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  CHECK(q(0) == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(std::abs(q(0) + 1e-3) <= 1e-6);
  CHECK(opt.step == 1);

  Vector<double> r = Vector<double>::LinSpaced(5, -1.0, 1.0);
  OptimizerState s = OptimizerState::zeros(5);
  for (int i = 0; i < 10; ++i) {
    auto [s2, r2] = adam_step(s, r, Vector<double>::Zero(5), 1e-2, defaults);
    CHECK((r2.array() == r.array()).all());
    s = s2;
  }

  // From zero parameters the new values are the updates themselves.
  const Vector<double> start = Vector<double>::Zero(4);
  const Vector<double> grad(Eigen::Vector4d(0.3, -1.2, 4.0, 1e-5));
  const auto plus = adam_step(OptimizerState::zeros(4), start, grad, 1e-2, defaults).second;
  const auto minus = adam_step(OptimizerState::zeros(4), start, -grad, 1e-2, defaults).second;
  CHECK((plus.array() == -minus.array()).all());

  CHECK_THROWS_AS(adam_step(OptimizerState::zeros(3), start, grad, 1e-2, defaults),
                  std::invalid_argument);
}

TEST_CASE("learning rate schedule") {
  TrainingConfig cfg;
  CHECK(lr_schedule(0, cfg) == 8e-5);
  CHECK(lr_schedule(cfg.max_epochs, cfg) == doctest::Approx(1e-6).epsilon(1e-12));
  double prev = lr_schedule(0, cfg);
  for (long e = 1; e <= cfg.max_epochs; e += 97) {
    const double lr = lr_schedule(e, cfg);
    CHECK(lr <= prev);
    CHECK(lr >= cfg.lr_floor);
    prev = lr;
  }
}

TEST_CASE("config validation") {
  TrainingConfig cfg = tiny_config();
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.t_end = cfg.t_begin;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.params.N = 5.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("one epoch is one update and one record") {
  TrainingConfig cfg = tiny_config();
  cfg.max_epochs = 1;
  int calls = 0;
  TrainingCallbacks cb;
  cb.on_epoch = [&](const EpochRecord&, const TrainingState&) { ++calls; };
  const auto r = train(cfg, cb);
  CHECK(r.history.records.size() == 1);
  CHECK(calls == 1);
  CHECK(r.state.next_epoch == 1);
  CHECK(r.state.optimizer.step == 1);
  CHECK(flatten(r.model.final_network) != flatten(fresh_training_state(cfg).network));
}

TEST_CASE("histories are bit-identical and the total is consistent") {
  const TrainingConfig cfg = tiny_config();
  const auto a = train(cfg);
  const auto b = train(cfg);
  REQUIRE(a.history.records.size() == b.history.records.size());
  for (std::size_t i = 0; i < a.history.records.size(); ++i) {
    const auto& x = a.history.records[i].loss;
    const auto& y = b.history.records[i].loss;
    CHECK(x.total == y.total);
    CHECK(x.initial == y.initial);
    CHECK(a.history.records[i].epoch == long(i));
    CHECK(std::abs(x.total - total_loss(x.equations(), x.initial, cfg.weights)) <=
          1e-12 * std::max(1.0, x.total));
    for (double v : {x.eq1, x.eq2, x.eq3, x.eq4, x.initial}) CHECK(v >= 0.0);
  }
  CHECK(flatten(a.model.network) == flatten(b.model.network));
}

TEST_CASE("training continued from a state matches an uninterrupted run") {
  const TrainingConfig cfg = tiny_config();
  std::optional<TrainingState> snapshot;
  TrainingCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r, const TrainingState& s) {
    if (r.epoch == 14) snapshot = s;
  };
  const auto whole = train(cfg, cb);
  REQUIRE(snapshot);
  CHECK(snapshot->next_epoch == 15);
  const auto rest = train(cfg, *snapshot);
  CHECK(rest.history.records.front().epoch == 15);
  CHECK(rest.history.records.size() + 15 == whole.history.records.size());
  CHECK(flatten(rest.model.final_network) == flatten(whole.model.final_network));
  CHECK(rest.history.records.back().loss.total == whole.history.records.back().loss.total);
  CHECK(rest.model.best_loss == whole.model.best_loss);
}

TEST_CASE("initial condition alone is fitted when alpha is zero") {
  TrainingConfig cfg = tiny_config();
  cfg.weights = {0.0, 1.0};
  cfg.hidden_width = 4;
  cfg.max_epochs = 5000;
  cfg.lr_initial = 1e-2;
  cfg.lr_floor = 1e-4;
  cfg.epsilon_stop = 1e-13;
  const auto r = train(cfg);
  const double fit = initial_loss(r.model.network, cfg.initial_condition());
  CHECK(fit < 1e-10);
  CHECK(r.history.records.size() <= 5000);

  // Prediction at t_initial lies within sqrt(initial loss) of the initial state.
  Vector<double> t0 = Vector<double>::Constant(1, cfg.t_initial);
  const auto table = predict(r.model, t0);
  CHECK((table.states.row(0).transpose() - cfg.initial_state).norm() <= std::sqrt(fit) + 1e-15);
}

TEST_CASE("predict evaluates the network off the collocation grid") {
  const auto r = train(tiny_config());
  const Vector<double> times = Vector<double>::LinSpaced(7, 0.013, 1.987);
  const auto table = predict(r.model, times);
  CHECK(table.states.rows() == 7);
  CHECK(table.states.cols() == 4);
  CHECK(table.states.allFinite());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const State<> direct = forward(r.model.network, times(i));
    CHECK((table.states.row(i).transpose() - direct).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("non-finite loss aborts with the epoch and component") {
  TrainingConfig cfg = tiny_config();
  cfg.initial_state = State<>::Constant(1e200);
  CHECK_THROWS_WITH_AS(train(cfg), "non-finite loss at epoch 0 (component initial)",
                       TrainingError);
}
