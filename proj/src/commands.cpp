#include "esd_pinn/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "esd_pinn/io.hpp"
#include "esd_pinn/losses.hpp"
#include "esd_pinn/rk45.hpp"
#include "esd_pinn/trainer.hpp"

namespace esd::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 10) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Vector<double> output_grid(const RunConfig& cfg) {
  return make_grid(cfg.training.t_begin, cfg.training.t_end, cfg.training.n_points).times;
}

void write_integration(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  const auto& t = cfg.training;
  const SolutionTable table =
      integrate(t.params, t.initial_state, t.t_begin, t.t_end, cfg.rk45, output_grid(cfg));
  write_table_csv(cfg.output.rk45_path(), table);
  out << "rk45: " << table.size() << " grid points on [" << fmt(t.t_begin) << ", "
      << fmt(t.t_end) << "], wall time " << fmt(seconds_since(start), 4) << " s -> "
      << cfg.output.rk45_path().string() << "\n";
}

/// Drops history rows at or beyond `next_epoch` (written after the last checkpoint).
void truncate_history(const std::filesystem::path& path, long next_epoch) {
  const TrainingHistory existing = parse_history_csv(read_text_file(path));
  std::string text = std::string(kHistoryHeader) + "\n";
  long expected = 0;
  for (const auto& r : existing.records) {
    if (r.epoch >= next_epoch) break;
    if (r.epoch != expected)
      throw FormatError(path.string() + ": history is not contiguous at epoch " +
                        std::to_string(r.epoch));
    text += format_history_row(r);
    ++expected;
  }
  if (expected != next_epoch)
    throw FormatError(path.string() + ": history ends at epoch " + std::to_string(expected - 1) +
                      " but checkpoint resumes at " + std::to_string(next_epoch));
  write_text_file(path, text);
}

TrainingResult run_training(const RunConfig& cfg, bool resume, std::ostream& out) {
  const auto& t = cfg.training;
  TrainingState state = fresh_training_state(t);
  const auto history_path = cfg.output.history_path();
  const auto checkpoint_path = cfg.output.checkpoint_path();

  if (resume) {
    state = checkpoint_from_json(nlohmann::json::parse(read_text_file(checkpoint_path)));
    const auto fresh_shapes = fresh_training_state(t).network.shapes();
    if (state.network.shapes() != fresh_shapes)
      throw FormatError(checkpoint_path.string() + ": network shape does not match config");
    truncate_history(history_path, state.next_epoch);
    out << "resuming at epoch " << state.next_epoch << "\n";
  } else {
    write_text_file(history_path, std::string(kHistoryHeader) + "\n");
  }

  std::ofstream history(history_path, std::ios::binary | std::ios::app);
  if (!history) throw std::runtime_error("cannot open " + history_path.string());
  std::string pending;
  auto save = [&](const TrainingState& s) {
    history << pending;
    history.flush();
    pending.clear();
    write_text_file(checkpoint_path, checkpoint_to_json(s, t.seed, t.optimizer).dump() + "\n");
  };

  TrainingCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochRecord& r, const TrainingState& s) {
    pending += format_history_row(r);
    if (cfg.log_every > 0 && r.epoch % cfg.log_every == 0) {
      out << "epoch " << r.epoch << "  total " << fmt(r.loss.total, 6) << "  initial "
          << fmt(r.loss.initial, 6) << "  lr " << fmt(r.lr, 6) << "\n";
      out.flush();
    }
    if (t.checkpoint_every > 0 && (r.epoch + 1) % t.checkpoint_every == 0) save(s);
  };

  TrainingResult result = train(t, std::move(state), callbacks);
  save(result.state);
  return result;
}

void write_prediction(const RunConfig& cfg, const TrainedModel& model) {
  write_table_csv(cfg.output.pinn_path(), predict(model, output_grid(cfg)));
}

ComparisonReport evaluate_files(const RunConfig& cfg, const std::filesystem::path& rk_csv,
                                const std::filesystem::path& pinn_csv) {
  const SolutionTable rk = read_table_csv(rk_csv);
  const SolutionTable pinn = read_table_csv(pinn_csv);
  ReportMeta meta;
  meta.config_hash = config_hash(cfg);
  ComparisonReport report = build_report(rk, pinn, cfg.training.params, meta);
  if (cfg.exact_tangent_residual && std::filesystem::exists(cfg.output.checkpoint_path())) {
    const TrainingState s =
        checkpoint_from_json(nlohmann::json::parse(read_text_file(cfg.output.checkpoint_path())));
    const Mlp<double> net = s.best_parameters.size() == s.network.parameter_count()
                                ? unflatten(s.network, s.best_parameters)
                                : s.network;
    report.residual_mse.emplace_back("pinn_exact_tangent",
                                     tangent_residual_mse(net, cfg.training.params, pinn.times));
  }
  write_text_file(cfg.output.report_path(), report_to_json(report).dump(2) + "\n");
  return report;
}

/// Runs `body`, mapping exceptions onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("no config given (use --config PATH)");
  RunConfig cfg = load_run_config(opts.config_path);
  if (opts.out_dir) cfg.output.dir = *opts.out_dir;
  if (opts.seed) cfg.training.seed = *opts.seed;
  cfg.training.threads = opts.threads ? *opts.threads : threads_from_environment();
  if (cfg.training.threads < 1) cfg.training.threads = threads_from_environment();
  cfg.validate();
  return cfg;
}

std::string config_hash(const RunConfig& cfg) {
  nlohmann::json doc = run_config_to_json(cfg);
  doc.erase("output");
  return fnv1a_hex(doc.dump());
}

int cmd_integrate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    if (opts.dry_run) {
      out << "config ok: " << opts.config_path.string() << "\n";
      return kExitOk;
    }
    write_integration(cfg, out);
    return kExitOk;
  });
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    if (opts.dry_run) {
      out << "config ok: " << opts.config_path.string() << "\n";
      return kExitOk;
    }
    const auto start = Clock::now();
    const TrainingResult result = run_training(cfg, opts.resume, out);
    write_prediction(cfg, result.model);
    out << "training: " << result.state.next_epoch << " epochs"
        << (result.model.converged ? " (reached epsilon_stop)" : "") << ", final total loss "
        << fmt(result.history.records.empty() ? result.model.best_loss
                                              : result.history.records.back().loss.total)
        << ", best " << fmt(result.model.best_loss) << " at epoch " << result.model.best_epoch
        << ", wall time " << fmt(seconds_since(start), 4) << " s\n";
    return kExitOk;
  });
}

int cmd_evaluate(const std::filesystem::path& rk_csv, const std::filesystem::path& pinn_csv,
                 const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    if (opts.dry_run) {
      out << "config ok: " << opts.config_path.string() << "\n";
      return kExitOk;
    }
    const ComparisonReport report = evaluate_files(cfg, rk_csv, pinn_csv);
    out << render_report(report);
    return kExitOk;
  });
}

int cmd_full_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    if (opts.dry_run) {
      out << "config ok: " << opts.config_path.string() << "\n";
      return kExitOk;
    }
    write_integration(cfg, out);
    const TrainingResult result = run_training(cfg, opts.resume, out);
    write_prediction(cfg, result.model);
    out << "training: " << result.state.next_epoch << " epochs, best total loss "
        << fmt(result.model.best_loss) << "\n";
    const ComparisonReport report =
        evaluate_files(cfg, cfg.output.rk45_path(), cfg.output.pinn_path());
    out << render_report(report);
    out << "summary: R2";
    for (int k = 0; k < 4; ++k) {
      const auto& r2 = report.metrics[k].r_squared;
      out << " x" << k + 1 << "=" << (r2 ? fmt(*r2) : std::string("undefined"));
    }
    out << "\n";
    return kExitOk;
  });
}

}  // namespace esd::cli
