#include "esd_pinn/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "esd_pinn/losses.hpp"

namespace esd {

namespace {

constexpr double kSpacingTolerance = 1e-9;  // relative

std::string fmt10(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

OutputRows<double> finite_diff_derivatives(const SolutionTable& table) {
  const Eigen::Index n = table.size();
  if (n < 3) throw std::invalid_argument("finite differences need at least 3 rows");
  if (table.states.rows() != n) throw std::invalid_argument("row count does not match times");
  const double h = (table.times(n - 1) - table.times(0)) / double(n - 1);
  if (!(h > 0.0)) throw std::invalid_argument("times must be increasing");
  for (Eigen::Index i = 1; i < n; ++i) {
    const double step = table.times(i) - table.times(i - 1);
    if (std::abs(step - h) > kSpacingTolerance * h) {
      throw std::invalid_argument("non-uniform grid at row " + std::to_string(i) + " (t=" +
                                  fmt17(table.times(i)) + ")");
    }
  }
  const auto& y = table.states;
  OutputRows<double> d(n, 4);
  d.row(0) = (-3.0 * y.row(0) + 4.0 * y.row(1) - y.row(2)) / (2.0 * h);
  d.middleRows(1, n - 2) = (y.bottomRows(n - 2) - y.topRows(n - 2)) / (2.0 * h);
  d.row(n - 1) = (3.0 * y.row(n - 1) - 4.0 * y.row(n - 2) + y.row(n - 3)) / (2.0 * h);
  return d;
}

ResidualRow residual_mse(const SolutionTable& table, const EsdParameters& params) {
  const OutputRows<double> r = finite_diff_derivatives(table) - rhs_rows(params, table.states);
  ResidualRow out{};
  for (int k = 0; k < 4; ++k) out[k] = r.col(k).squaredNorm() / double(table.size());
  return out;
}

ResidualRow tangent_residual_mse(const Mlp<double>& net, const EsdParameters& params,
                                 const Vector<double>& times) {
  const auto eq = residual_losses(net, params, CollocationGrid{times});
  return {eq[0], eq[1], eq[2], eq[3]};
}

void require_same_grid(const SolutionTable& a, const SolutionTable& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a.times(i) != b.times(i)) {
      throw std::invalid_argument("grid mismatch at row " + std::to_string(i + 1) + ": t=" +
                                  fmt17(a.times(i)) + " vs t=" + fmt17(b.times(i)));
    }
  }
  if (a.size() != b.size()) {
    throw std::invalid_argument("grid mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " rows");
  }
}

std::array<Metrics, 4> compare_metrics(const SolutionTable& reference,
                                       const SolutionTable& candidate) {
  require_same_grid(reference, candidate);
  const Eigen::Index n = reference.size();
  if (n == 0) throw std::invalid_argument("cannot compare empty tables");
  std::array<Metrics, 4> out;
  for (int k = 0; k < 4; ++k) {
    const auto y = reference.states.col(k).array();
    const auto diff = y - candidate.states.col(k).array();
    const double ss_res = diff.square().sum();
    const double ss_tot = (y - y.mean()).square().sum();
    Metrics& m = out[k];
    m.mae = diff.abs().sum() / double(n);
    m.mse = ss_res / double(n);
    m.rmse = std::sqrt(m.mse);
    if (ss_tot > 0.0) m.r_squared = 1.0 - ss_res / ss_tot;
  }
  return out;
}

ComparisonReport build_report(const SolutionTable& reference, const SolutionTable& candidate,
                              const EsdParameters& params, ReportMeta meta) {
  require_same_grid(reference, candidate);
  ComparisonReport report;
  meta.grid_size = reference.size();
  if (reference.size() > 0) {
    meta.t_begin = reference.times(0);
    meta.t_end = reference.times(reference.size() - 1);
  }
  report.residual_mse.emplace_back(meta.reference_method, residual_mse(reference, params));
  report.residual_mse.emplace_back(meta.candidate_method, residual_mse(candidate, params));
  report.metrics = compare_metrics(reference, candidate);
  report.meta = std::move(meta);
  return report;
}

nlohmann::json report_to_json(const ComparisonReport& report) {
  nlohmann::json doc;
  doc["meta"] = {{"grid_size", report.meta.grid_size},
                 {"t_span", {report.meta.t_begin, report.meta.t_end}},
                 {"reference_method", report.meta.reference_method},
                 {"candidate_method", report.meta.candidate_method},
                 {"config_hash", report.meta.config_hash}};
  nlohmann::json residuals = nlohmann::json::object();
  for (const auto& [method, row] : report.residual_mse) {
    residuals[method] = {{"eq1", row[0]}, {"eq2", row[1]}, {"eq3", row[2]}, {"eq4", row[3]}};
  }
  doc["residual_mse"] = residuals;
  nlohmann::json metrics = nlohmann::json::object();
  for (int k = 0; k < 4; ++k) {
    const auto& m = report.metrics[k];
    metrics["x" + std::to_string(k + 1)] = {
        {"r2", m.r_squared ? nlohmann::json(*m.r_squared) : nlohmann::json(nullptr)},
        {"mae", m.mae},
        {"mse", m.mse},
        {"rmse", m.rmse}};
  }
  doc["metrics"] = metrics;
  return doc;
}

ComparisonReport report_from_json(const nlohmann::json& doc) {
  ComparisonReport report;
  const auto& meta = doc.at("meta");
  report.meta.grid_size = meta.at("grid_size").get<Eigen::Index>();
  report.meta.t_begin = meta.at("t_span").at(0).get<double>();
  report.meta.t_end = meta.at("t_span").at(1).get<double>();
  report.meta.reference_method = meta.at("reference_method").get<std::string>();
  report.meta.candidate_method = meta.at("candidate_method").get<std::string>();
  report.meta.config_hash = meta.at("config_hash").get<std::string>();

  // nlohmann::json objects iterate in key order; keep the reference method first.
  const auto& residuals = doc.at("residual_mse");
  auto read_row = [](const nlohmann::json& r) {
    return ResidualRow{r.at("eq1").get<double>(), r.at("eq2").get<double>(),
                       r.at("eq3").get<double>(), r.at("eq4").get<double>()};
  };
  for (const auto& method : {report.meta.reference_method, report.meta.candidate_method}) {
    if (residuals.contains(method)) report.residual_mse.emplace_back(method, read_row(residuals.at(method)));
  }
  for (const auto& [method, row] : residuals.items()) {
    if (method != report.meta.reference_method && method != report.meta.candidate_method)
      report.residual_mse.emplace_back(method, read_row(row));
  }

  for (int k = 0; k < 4; ++k) {
    const auto& m = doc.at("metrics").at("x" + std::to_string(k + 1));
    Metrics& out = report.metrics[k];
    if (!m.at("r2").is_null()) out.r_squared = m.at("r2").get<double>();
    out.mae = m.at("mae").get<double>();
    out.mse = m.at("mse").get<double>();
    out.rmse = m.at("rmse").get<double>();
  }
  return report;
}

std::string render_report(const ComparisonReport& report) {
  std::ostringstream os;
  char line[256];
  os << "Residual MSE (finite-difference derivative vs right-hand side), N = "
     << report.meta.grid_size << ", t in [" << fmt10(report.meta.t_begin) << ", "
     << fmt10(report.meta.t_end) << "]\n";
  std::snprintf(line, sizeof line, "%-12s %18s %18s %18s %18s\n", "method", "eq1",
                "eq2", "eq3", "eq4");
  os << line;
  for (const auto& [method, row] : report.residual_mse) {
    std::snprintf(line, sizeof line, "%-12s %18s %18s %18s %18s\n", method.c_str(),
                  fmt10(row[0]).c_str(), fmt10(row[1]).c_str(), fmt10(row[2]).c_str(),
                  fmt10(row[3]).c_str());
    os << line;
  }
  os << "\nDirect comparison (" << report.meta.reference_method << " reference, "
     << report.meta.candidate_method << " candidate)\n";
  std::snprintf(line, sizeof line, "%-8s %18s %18s %18s %18s\n", "metric", "x1", "x2", "x3",
                "x4");
  os << line;
  auto row = [&](const char* name, auto get) {
    std::snprintf(line, sizeof line, "%-8s %18s %18s %18s %18s\n", name,
                  get(report.metrics[0]).c_str(), get(report.metrics[1]).c_str(),
                  get(report.metrics[2]).c_str(), get(report.metrics[3]).c_str());
    os << line;
  };
  row("R2", [](const Metrics& m) { return m.r_squared ? fmt10(*m.r_squared) : std::string("undefined"); });
  row("MAE", [](const Metrics& m) { return fmt10(m.mae); });
  row("MSE", [](const Metrics& m) { return fmt10(m.mse); });
  row("RMSE", [](const Metrics& m) { return fmt10(m.rmse); });
  return os.str();
}

}  // namespace esd
