#include "esd_pinn/run_config.hpp"

#include <cstdlib>
#include <set>
#include <thread>

#include "esd_pinn/io.hpp"

namespace esd {

namespace {

using nlohmann::json;

const char* const kParamNames[] = {"a1", "a2", "z1", "z2", "z3", "s1", "s2",
                                   "s3", "d1", "d2", "d3", "M",  "N"};

double* param_field(EsdParameters& p, const std::string& name) {
  if (name == "a1") return &p.a1;
  if (name == "a2") return &p.a2;
  if (name == "z1") return &p.z1;
  if (name == "z2") return &p.z2;
  if (name == "z3") return &p.z3;
  if (name == "s1") return &p.s1;
  if (name == "s2") return &p.s2;
  if (name == "s3") return &p.s3;
  if (name == "d1") return &p.d1;
  if (name == "d2") return &p.d2;
  if (name == "d3") return &p.d3;
  if (name == "M") return &p.M;
  if (name == "N") return &p.N;
  return nullptr;
}

/// Walks one JSON object, tracking which keys were consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = at(key);
    try {
      if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected true/false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
      }
      out = v.get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(path(key) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key) && !key.starts_with("_"))
        throw ConfigError(path(key) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Vec>
void read_array(Section& s, const std::string& key, Vec& out, std::size_t n) {
  if (!s.has(key)) return;
  const json& v = s.at(key);
  if (!v.is_array() || v.size() != n)
    throw ConfigError(s.path(key) + ": expected an array of " + std::to_string(n) + " numbers");
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number())
      throw ConfigError(s.path(key) + "[" + std::to_string(i) + "]: expected a number");
    out[i] = v[i].get<double>();
  }
}

}  // namespace

nlohmann::json esd_params_to_json(const EsdParameters& p) {
  json doc = json::object();
  EsdParameters copy = p;
  for (const char* name : kParamNames) doc[name] = *param_field(copy, name);
  return doc;
}

EsdParameters esd_params_from_json(const nlohmann::json& doc) {
  EsdParameters p = default_chaotic_params();
  Section s(doc, "esd_params");
  for (const char* name : kParamNames) s.read(name, *param_field(p, name));
  s.reject_unknown();
  return p;
}

void RunConfig::validate() const {
  try {
    training.validate();
    rk45.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (output.dir.empty()) throw ConfigError("output.dir: must not be empty");
  if (log_every < 0) throw ConfigError("training.log_every: must be >= 0");
}

RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig cfg;
  TrainingConfig& t = cfg.training;
  Section root(doc, "$");

  if (root.has("esd_params")) t.params = esd_params_from_json(root.at("esd_params"));
  read_array(root, "initial_state", t.initial_state, 4);
  std::array<double, 2> span{t.t_begin, t.t_end};
  read_array(root, "t_span", span, 2);
  t.t_begin = span[0];
  t.t_end = span[1];
  root.read("n_points", t.n_points);

  if (root.has("network")) {
    Section s(root.at("network"), "$.network");
    s.read("hidden_layers", t.hidden_layers);
    s.read("hidden_width", t.hidden_width);
    s.read("seed", t.seed);
    if (s.has("input_scaling")) {
      const json& v = s.at("input_scaling");
      if (v.is_boolean()) {
        t.input_scaling = v.get<bool>() ? InputScalingMode::On : InputScalingMode::Off;
      } else if (v == "auto") {
        t.input_scaling = InputScalingMode::Auto;
      } else {
        throw ConfigError("$.network.input_scaling: expected true, false or \"auto\"");
      }
    }
    s.reject_unknown();
  }

  if (root.has("training")) {
    Section s(root.at("training"), "$.training");
    s.read("alpha", t.weights.alpha);
    s.read("beta", t.weights.beta);
    s.read("lr_initial", t.lr_initial);
    s.read("lr_floor", t.lr_floor);
    s.read("max_epochs", t.max_epochs);
    s.read("epsilon_stop", t.epsilon_stop);
    s.read("checkpoint_every", t.checkpoint_every);
    s.read("log_every", cfg.log_every);
    s.read("t_initial", t.t_initial);
    if (s.has("optimizer")) {
      std::string kind;
      s.read("optimizer", kind);
      if (kind == "adam") {
        t.optimizer = OptimizerKind::Adam;
      } else if (kind == "gd") {
        t.optimizer = OptimizerKind::GradientDescent;
      } else {
        throw ConfigError("$.training.optimizer: expected \"adam\" or \"gd\"");
      }
    }
    if (s.has("adam")) {
      Section a(s.at("adam"), "$.training.adam");
      a.read("beta1", t.adam.beta1);
      a.read("beta2", t.adam.beta2);
      a.read("eps", t.adam.eps);
      a.reject_unknown();
    }
    s.reject_unknown();
  }

  if (root.has("rk45")) {
    Section s(root.at("rk45"), "$.rk45");
    s.read("atol", cfg.rk45.atol);
    s.read("rtol", cfg.rk45.rtol);
    s.reject_unknown();
  }

  if (root.has("evaluation")) {
    Section s(root.at("evaluation"), "$.evaluation");
    s.read("exact_tangent_residual", cfg.exact_tangent_residual);
    s.reject_unknown();
  }

  if (root.has("output")) {
    Section s(root.at("output"), "$.output");
    std::string dir = cfg.output.dir.string();
    s.read("dir", dir);
    cfg.output.dir = dir;
    s.read("rk45_csv", cfg.output.rk45_csv);
    s.read("pinn_csv", cfg.output.pinn_csv);
    s.read("history_csv", cfg.output.history_csv);
    s.read("checkpoint", cfg.output.checkpoint);
    s.read("report", cfg.output.report);
    s.reject_unknown();
  }
  root.reject_unknown();
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_run_config(doc);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_run_config_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  const TrainingConfig& t = cfg.training;
  json scaling = t.input_scaling == InputScalingMode::Auto ? json("auto")
                                                           : json(t.input_scaling == InputScalingMode::On);
  return {
      {"esd_params", esd_params_to_json(t.params)},
      {"initial_state",
       {t.initial_state(0), t.initial_state(1), t.initial_state(2), t.initial_state(3)}},
      {"t_span", {t.t_begin, t.t_end}},
      {"n_points", t.n_points},
      {"network",
       {{"hidden_layers", t.hidden_layers},
        {"hidden_width", t.hidden_width},
        {"seed", t.seed},
        {"input_scaling", scaling}}},
      {"training",
       {{"alpha", t.weights.alpha},
        {"beta", t.weights.beta},
        {"lr_initial", t.lr_initial},
        {"lr_floor", t.lr_floor},
        {"max_epochs", t.max_epochs},
        {"epsilon_stop", t.epsilon_stop},
        {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "gd"},
        {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}},
        {"checkpoint_every", t.checkpoint_every},
        {"log_every", cfg.log_every},
        {"t_initial", t.t_initial}}},
      {"rk45", {{"atol", cfg.rk45.atol}, {"rtol", cfg.rk45.rtol}}},
      {"evaluation", {{"exact_tangent_residual", cfg.exact_tangent_residual}}},
      {"output",
       {{"dir", cfg.output.dir.string()},
        {"rk45_csv", cfg.output.rk45_csv},
        {"pinn_csv", cfg.output.pinn_csv},
        {"history_csv", cfg.output.history_csv},
        {"checkpoint", cfg.output.checkpoint},
        {"report", cfg.output.report}}},
  };
}

int threads_from_environment() {
  const char* env = std::getenv("ESD_PINN_THREADS");
  int n = 0;
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw ConfigError("ESD_PINN_THREADS: expected a non-negative integer");
    n = static_cast<int>(v);
  }
  if (n == 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

}  // namespace esd
