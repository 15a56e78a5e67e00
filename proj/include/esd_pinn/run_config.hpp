#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "esd_pinn/rk45.hpp"
#include "esd_pinn/trainer.hpp"

namespace esd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File names inside the output directory.
struct OutputPaths {
  std::filesystem::path dir = "runs/default";
  std::string rk45_csv = "rk45.csv";
  std::string pinn_csv = "pinn.csv";
  std::string history_csv = "history.csv";
  std::string checkpoint = "checkpoint.json";
  std::string report = "report.json";

  std::filesystem::path rk45_path() const { return dir / rk45_csv; }
  std::filesystem::path pinn_path() const { return dir / pinn_csv; }
  std::filesystem::path history_path() const { return dir / history_csv; }
  std::filesystem::path checkpoint_path() const { return dir / checkpoint; }
  std::filesystem::path report_path() const { return dir / report; }
};

/// One experiment: system, solver settings, training settings, outputs.
/// Defaults reproduce the full-scale setup (16 x 100 network, N = 20000, t in [0, 100]).
struct RunConfig {
  TrainingConfig training;
  ToleranceSpec rk45;
  OutputPaths output;
  long log_every = 1000;
  bool exact_tangent_residual = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses a run-config document. Missing keys keep their defaults; unknown
/// keys and malformed values are rejected with the JSON path of the field.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json run_config_to_json(const RunConfig& cfg);

nlohmann::json esd_params_to_json(const EsdParameters& params);
EsdParameters esd_params_from_json(const nlohmann::json& doc);

/// Worker threads from ESD_PINN_THREADS (unset or 0 = hardware concurrency).
int threads_from_environment();

}  // namespace esd
