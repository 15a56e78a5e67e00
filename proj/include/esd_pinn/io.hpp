#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "esd_pinn/mlp.hpp"
#include "esd_pinn/solution_table.hpp"
#include "esd_pinn/trainer.hpp"

namespace esd {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `t,x1,x2,x3,x4` header, one row per time, 17 significant digits.
std::string format_table_csv(const SolutionTable& table);
void write_table_csv(const std::filesystem::path& path, const SolutionTable& table);

/// Throws FormatError naming the offending line on malformed input.
SolutionTable parse_table_csv(const std::string& text);
SolutionTable read_table_csv(const std::filesystem::path& path);

inline constexpr const char* kHistoryHeader =
    "epoch,loss_eq1,loss_eq2,loss_eq3,loss_eq4,loss_initial,loss_total,lr";

std::string format_history_row(const EpochRecord& record);

/// Parses the history CSV body (header required).
TrainingHistory parse_history_csv(const std::string& text);

/// Network shapes, input scaling, seed and the flat parameter vector.
nlohmann::json network_to_json(const Mlp<double>& net, std::uint64_t seed);
Mlp<double> network_from_json(const nlohmann::json& doc);

/// Network checkpoint plus optimizer state, epoch counter and best parameters.
nlohmann::json checkpoint_to_json(const TrainingState& state, std::uint64_t seed,
                                  OptimizerKind optimizer);
TrainingState checkpoint_from_json(const nlohmann::json& doc);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// 64-bit FNV-1a digest, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace esd
