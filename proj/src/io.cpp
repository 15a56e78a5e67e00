#include "esd_pinn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace esd {

namespace {

constexpr const char* kTableHeader = "t,x1,x2,x3,x4";
constexpr const char* kCheckpointFormat = "esd-pinn-checkpoint";
constexpr int kCheckpointVersion = 1;

void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, n);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse number '" +
                      std::string(field) + "'");
  }
  return v;
}

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text,
                                                   std::string_view header,
                                                   std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) {
        throw FormatError("line " + std::to_string(line_no) + ": expected header '" +
                          std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " fields, found " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
  }
  if (!seen_header) throw FormatError("missing header '" + std::string(header) + "'");
  return rows;
}

nlohmann::json vector_to_json(const Vector<double>& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector<double> vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector<double>>(values.data(), Eigen::Index(values.size()));
}

}  // namespace

std::string format_table_csv(const SolutionTable& table) {
  table.validate();
  std::string out = kTableHeader;
  out += '\n';
  out.reserve(out.size() + std::size_t(table.size()) * 5 * 25);
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    append_number(out, table.times(i));
    for (int k = 0; k < 4; ++k) {
      out += ',';
      append_number(out, table.states(i, k));
    }
    out += '\n';
  }
  return out;
}

void write_table_csv(const std::filesystem::path& path, const SolutionTable& table) {
  write_text_file(path, format_table_csv(table));
}

SolutionTable parse_table_csv(const std::string& text) {
  const auto rows = parse_numeric_csv(text, kTableHeader, 5);
  SolutionTable table;
  table.times.resize(Eigen::Index(rows.size()));
  table.states.resize(Eigen::Index(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.times(Eigen::Index(i)) = rows[i][0];
    for (int k = 0; k < 4; ++k) table.states(Eigen::Index(i), k) = rows[i][k + 1];
  }
  try {
    table.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return table;
}

SolutionTable read_table_csv(const std::filesystem::path& path) {
  try {
    return parse_table_csv(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_history_row(const EpochRecord& r) {
  std::string out = std::to_string(r.epoch);
  for (double v : {r.loss.eq1, r.loss.eq2, r.loss.eq3, r.loss.eq4, r.loss.initial, r.loss.total,
                   r.lr}) {
    out += ',';
    append_number(out, v);
  }
  out += '\n';
  return out;
}

TrainingHistory parse_history_csv(const std::string& text) {
  const auto rows = parse_numeric_csv(text, kHistoryHeader, 8);
  TrainingHistory h;
  for (const auto& row : rows) {
    EpochRecord r;
    r.epoch = static_cast<long>(row[0]);
    r.loss = {row[1], row[2], row[3], row[4], row[5], row[6]};
    r.lr = row[7];
    h.records.push_back(r);
  }
  return h;
}

nlohmann::json network_to_json(const Mlp<double>& net, std::uint64_t seed) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : net.shapes()) layers.push_back({{"fan_in", s.fan_in}, {"fan_out", s.fan_out}});
  return {{"layers", layers},
          {"seed", seed},
          {"input_scaling",
           {{"scale", net.input_scaling().scale}, {"shift", net.input_scaling().shift}}},
          {"parameters", vector_to_json(flatten(net))}};
}

Mlp<double> network_from_json(const nlohmann::json& doc) {
  std::vector<Layer<double>> layers;
  for (const auto& l : doc.at("layers")) {
    const int fan_in = l.at("fan_in").get<int>();
    const int fan_out = l.at("fan_out").get<int>();
    if (fan_in < 1 || fan_out < 1) throw FormatError("checkpoint: invalid layer shape");
    layers.push_back({Matrix<double>::Zero(fan_in, fan_out), Vector<double>::Zero(fan_out)});
  }
  InputScaling scaling;
  if (doc.contains("input_scaling")) {
    scaling.scale = doc.at("input_scaling").at("scale").get<double>();
    scaling.shift = doc.at("input_scaling").at("shift").get<double>();
  }
  try {
    const Mlp<double> shape(std::move(layers), scaling);
    return unflatten(shape, vector_from_json(doc.at("parameters")));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

nlohmann::json checkpoint_to_json(const TrainingState& state, std::uint64_t seed,
                                  OptimizerKind optimizer) {
  nlohmann::json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["network"] = network_to_json(state.network, seed);
  doc["optimizer"] = {{"kind", optimizer == OptimizerKind::Adam ? "adam" : "gd"},
                      {"step", state.optimizer.step},
                      {"m", vector_to_json(state.optimizer.m)},
                      {"v", vector_to_json(state.optimizer.v)}};
  doc["next_epoch"] = state.next_epoch;
  doc["best"] = {{"epoch", state.best_epoch},
                 {"loss", std::isfinite(state.best_loss) ? nlohmann::json(state.best_loss)
                                                         : nlohmann::json(nullptr)},
                 {"parameters", vector_to_json(state.best_parameters)}};
  return doc;
}

TrainingState checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat)
      throw FormatError("checkpoint: unexpected format tag");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw FormatError("checkpoint: unsupported version");
    auto net = network_from_json(doc.at("network"));
    const auto n = net.parameter_count();
    OptimizerState opt;
    opt.step = doc.at("optimizer").at("step").get<long>();
    opt.m = vector_from_json(doc.at("optimizer").at("m"));
    opt.v = vector_from_json(doc.at("optimizer").at("v"));
    if (opt.m.size() != n || opt.v.size() != n)
      throw FormatError("checkpoint: optimizer state length does not match network");
    const auto& best = doc.at("best");
    Vector<double> best_params = vector_from_json(best.at("parameters"));
    if (best_params.size() != 0 && best_params.size() != n)
      throw FormatError("checkpoint: best parameter length does not match network");
    const double best_loss = best.at("loss").is_null()
                                 ? std::numeric_limits<double>::infinity()
                                 : best.at("loss").get<double>();
    return TrainingState{std::move(net),         std::move(opt), doc.at("next_epoch").get<long>(),
                         std::move(best_params), best_loss,      best.at("epoch").get<long>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace esd
