#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "esd_pinn/evaluator.hpp"
#include "esd_pinn/run_config.hpp"

namespace esd::cli {

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  std::optional<std::uint64_t> seed;             // overrides network.seed
  std::optional<int> threads;                    // overrides ESD_PINN_THREADS
  bool resume = false;
  bool dry_run = false;
};

/// Config with command-line overrides applied. Throws ConfigError.
RunConfig resolve_config(const CommandOptions& opts);

/// Digest of everything in the config that influences results (outputs excluded).
std::string config_hash(const RunConfig& cfg);

/// Each command returns a process exit status and reports to `out` / `err`.
int cmd_integrate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const std::filesystem::path& rk_csv, const std::filesystem::path& pinn_csv,
                 const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_full_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace esd::cli
