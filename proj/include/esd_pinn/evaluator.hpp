#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "esd_pinn/esd_model.hpp"
#include "esd_pinn/mlp.hpp"
#include "esd_pinn/solution_table.hpp"

namespace esd {

/// Agreement of a candidate series with a reference series.
struct Metrics {
  std::optional<double> r_squared;  // empty when the reference has zero variance
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

using ResidualRow = std::array<double, 4>;

struct ReportMeta {
  Eigen::Index grid_size = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::string reference_method = "rk45";
  std::string candidate_method = "pinn";
  std::string config_hash;
};

struct ComparisonReport {
  ReportMeta meta;
  std::vector<std::pair<std::string, ResidualRow>> residual_mse;  // method -> eq1..eq4
  std::array<Metrics, 4> metrics;                                 // x1..x4
};

/// dx/dt at every row: central differences inside, second-order one-sided
/// three-point formulas at both ends. Requires N >= 3 and uniform spacing.
OutputRows<double> finite_diff_derivatives(const SolutionTable& table);

/// Per equation, mean over the grid of (finite-difference derivative - rhs)^2.
ResidualRow residual_mse(const SolutionTable& table, const EsdParameters& params);

/// Same as residual_mse but with the network's exact time derivative.
ResidualRow tangent_residual_mse(const Mlp<double>& net, const EsdParameters& params,
                                 const Vector<double>& times);

/// R^2, MAE, MSE, RMSE per component; `reference` supplies y and y-bar.
std::array<Metrics, 4> compare_metrics(const SolutionTable& reference,
                                       const SolutionTable& candidate);

/// Throws std::invalid_argument naming the first differing time.
void require_same_grid(const SolutionTable& a, const SolutionTable& b);

ComparisonReport build_report(const SolutionTable& reference, const SolutionTable& candidate,
                              const EsdParameters& params, ReportMeta meta);

nlohmann::json report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::json& doc);

/// Aligned text tables, 10 significant digits.
std::string render_report(const ComparisonReport& report);

}  // namespace esd
