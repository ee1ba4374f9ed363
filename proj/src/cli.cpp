#include "bodse/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "bodse/baseline_ga.hpp"
#include "bodse/bo_loop.hpp"
#include "bodse/config.hpp"
#include "bodse/error.hpp"

namespace bodse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

// Installs the SIGINT handler for the lifetime of a run.
class InterruptGuard {
 public:
  InterruptGuard() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_interrupt);
  }
  ~InterruptGuard() { std::signal(SIGINT, previous_); }
  InterruptGuard(const InterruptGuard&) = delete;
  InterruptGuard& operator=(const InterruptGuard&) = delete;

 private:
  void (*previous_)(int) = SIG_DFL;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

fs::path timestamped_dir() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "run-%Y%m%d-%H%M%S", &tm);
  fs::path dir = fs::path("runs") / buf;
  for (int i = 1; fs::exists(dir); ++i) dir = fs::path("runs") / (std::string(buf) + "-" + std::to_string(i));
  return dir;
}

fs::path output_dir(const RunOptions& options, const ExperimentConfig& config) {
  if (options.out) return *options.out;
  if (config.output) return *config.output;
  return timestamped_dir();
}

// Appends each line to a file and flushes so partial runs stay readable.
class LogWriter {
 public:
  explicit LogWriter(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }
  void operator()(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct Loaded {
  ExperimentConfig config;
  json resolved;
};

std::optional<Loaded> load(const RunOptions& options, std::ostream& err) {
  try {
    Loaded l{load_config(options.config_path), {}};
    if (options.seed) l.config.set_seed(*options.seed);
    l.resolved = resolved_json(l.config);
    return l;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
}

void write_incumbent(const ExperimentLog& log, const fs::path& dir) {
  try {
    write_file(dir / "incumbent.csv", incumbent_csv(incumbent_curve(log)));
  } catch (const EmptyLog&) {
    write_file(dir / "incumbent.csv", "iteration,best\n");
  }
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  auto loaded = load(options, err);
  if (!loaded) return kConfigError;
  const ExperimentConfig& config = loaded->config;
  if (options.dry_run) {
    out << loaded->resolved.dump(2) << "\n";
    return kOk;
  }

  const fs::path dir = output_dir(options, config);
  try {
    fs::create_directories(dir);
    write_file(dir / "config.resolved.json", loaded->resolved.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }

  InterruptGuard guard;
  LogWriter writer(dir / "log.jsonl");
  RunHooks hooks;
  hooks.on_line = std::ref(writer);
  hooks.stop_requested = [] { return g_interrupted.load(); };
  hooks.config = loaded->resolved;

  try {
    auto evaluator = make_evaluator(config.evaluator, dir);
    ExperimentLog log = config.engine == Engine::bo ? run(config.space, *evaluator, config.bo, hooks)
                                                    : ga_run(config.space, *evaluator, config.bo.objective, config.ga, hooks);
    write_incumbent(log, dir);
    const auto curve = incumbent_curve(log);
    out << "completed " << log.records.size() << " evaluations (" << log.ok_count() << " ok); best "
        << format_double(curve.back().second) << "\n";
    out << "outputs written to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kRuntimeError;
  }
  if (g_interrupted.load()) {
    err << "interrupted; partial log kept in " << dir.string() << "\n";
    return kInterrupted;
  }
  return kOk;
}

int cmd_sweep(const RunOptions& options, std::ostream& out, std::ostream& err) {
  auto loaded = load(options, err);
  if (!loaded) return kConfigError;
  const ExperimentConfig& config = loaded->config;
  if (config.sweep.empty()) {
    err << "config error: sweep: required for the sweep command\n";
    return kConfigError;
  }
  if (config.engine != Engine::bo) {
    err << "config error: engine: weight sweeps run the bo engine\n";
    return kConfigError;
  }
  if (options.dry_run) {
    out << loaded->resolved.dump(2) << "\n";
    return kOk;
  }

  const fs::path dir = output_dir(options, config);
  try {
    fs::create_directories(dir);
    write_file(dir / "config.resolved.json", loaded->resolved.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }

  InterruptGuard guard;
  std::vector<std::unique_ptr<LogWriter>> writers;
  auto run_dir = [&](std::size_t i) { return dir / ("run_" + std::to_string(i)); };
  auto make_hooks = [&](std::size_t i) {
    fs::create_directories(run_dir(i));
    writers.push_back(std::make_unique<LogWriter>(run_dir(i) / "log.jsonl"));
    RunHooks hooks;
    hooks.on_line = std::ref(*writers.back());
    hooks.stop_requested = [] { return g_interrupted.load(); };
    hooks.config = loaded->resolved;
    hooks.config["sweep_index"] = i;
    return hooks;
  };
  auto make = [&](std::size_t i) { return make_evaluator(config.evaluator, run_dir(i)); };

  try {
    const auto specs = weight_sweep(config.sweep, config.bo.objective);
    const SweepResult result = multi_run_pareto(config.space, make, config.bo, specs, make_hooks);
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      if (result.runs[i].log)
        write_incumbent(*result.runs[i].log, run_dir(i));
      else
        err << "sweep entry " << i << " failed: " << result.runs[i].error << "\n";
    }
    const auto metrics = config.bo.objective.metrics;
    write_file(dir / "pareto.csv", pareto_csv(result.front, config.space, {metrics.begin(), metrics.end()}));
    out << "sweep of " << specs.size() << " runs finished; " << result.front.size() << " Pareto points written to "
        << (dir / "pareto.csv").string() << "\n";
    if (g_interrupted.load()) return kInterrupted;
    return result.failed_runs() > 0 ? kPartialFailure : kOk;
  } catch (const std::exception& e) {
    err << "sweep failed: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentLog log;
  std::optional<ExperimentLog> other;
  try {
    log = read_log(options.log_path);
    if (options.compare) other = read_log(*options.compare);
  } catch (const Error& e) {
    err << "log error: " << e.what() << "\n";
    return kConfigError;
  }
  const fs::path dir = options.out ? fs::path(*options.out) : fs::path(options.log_path).parent_path();

  out << "log: " << options.log_path << "\n";
  out << "engine: " << log.header.value("engine", std::string("?")) << "\n";
  out << "evaluations: " << log.records.size() << " (ok " << log.ok_count() << ", failed "
      << log.records.size() - log.ok_count() << ")\n";

  const IterationRecord* best = nullptr;
  for (const auto& r : log.records)
    if (r.evaluation.ok() && r.target && (!best || *r.target < *best->target)) best = &r;
  if (best) {
    out << "best: record " << best->index << ", target " << format_double(*best->target) << "\n";
    out << "  params:";
    for (const auto& [k, v] : best->evaluation.raw_params) out << " " << k << "=" << format_double(v);
    out << "\n  metrics:";
    for (const auto& [k, v] : best->evaluation.metrics) out << " " << k << "=" << format_double(v);
    out << "\n";
  } else {
    out << "best: none (no successful evaluation)\n";
  }

  bool have_trace = false;
  for (const auto& r : log.records) {
    if (!r.hyperparams) continue;
    if (!have_trace) out << "hyperparameters (record: log signal variance | log lengthscales | log noise variance):\n";
    have_trace = true;
    out << "  " << std::setw(4) << r.index << ": " << format_double(r.hyperparams->log_signal_variance) << " |";
    for (double l : r.hyperparams->log_lengthscales) out << " " << format_double(l);
    out << " | " << format_double(r.hyperparams->log_noise_variance) << "\n";
  }

  Timing total;
  for (const auto& r : log.records) {
    total.propose += r.timing.propose;
    total.evaluate += r.timing.evaluate;
    total.refit += r.timing.refit;
  }
  out << "timing totals (s): propose " << total.propose << ", evaluate " << total.evaluate << ", refit "
      << total.refit << "\n";

  try {
    if (!dir.empty()) fs::create_directories(dir);
    const fs::path base = dir.empty() ? fs::path(".") : dir;
    write_incumbent(log, base);
    out << "wrote " << (base / "incumbent.csv").string() << "\n";
    if (other) {
      write_file(base / "compare.csv", compare_csv(log, *other));
      out << "wrote " << (base / "compare.csv").string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

std::string pareto_csv(const std::vector<ParetoPoint>& front, const ParameterSpace& space,
                       const std::vector<std::string>& preferred_metrics) {
  std::vector<std::string> metrics;
  if (!front.empty()) {
    for (const auto& m : preferred_metrics)
      if (front.front().metrics.contains(m)) metrics.push_back(m);
    for (const auto& [m, v] : front.front().metrics)
      if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
  } else {
    metrics = preferred_metrics;
  }
  std::string csv;
  std::vector<std::string> columns = metrics;
  for (const auto& p : space.params()) columns.push_back(p.name);
  for (std::size_t i = 0; i < columns.size(); ++i) csv += (i ? "," : "") + columns[i];
  csv += "\n";
  for (const auto& point : front) {
    bool first = true;
    for (const auto& m : metrics) {
      csv += (first ? "" : ",") + format_double(point.metrics.at(m));
      first = false;
    }
    for (const auto& p : space.params()) csv += "," + format_double(point.params.at(p.name));
    csv += "\n";
  }
  return csv;
}

std::string compare_csv(const ExperimentLog& a, const ExperimentLog& b) {
  auto running = [](const ExperimentLog& log) {
    std::vector<std::optional<double>> best(log.records.size());
    std::optional<double> current;
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      const auto& r = log.records[i];
      if (r.evaluation.ok() && r.target && (!current || *r.target < *current)) current = r.target;
      best[i] = current;
    }
    return best;
  };
  const auto ca = running(a);
  const auto cb = running(b);
  std::string csv = "iteration,best,best_compare\n";
  for (std::size_t i = 0; i < std::max(ca.size(), cb.size()); ++i) {
    csv += std::to_string(i) + ",";
    if (i < ca.size() && ca[i]) csv += format_double(*ca[i]);
    csv += ",";
    if (i < cb.size() && cb[i]) csv += format_double(*cb[i]);
    csv += "\n";
  }
  return csv;
}

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-optimization design space exploration"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the configured engine on one objective");
  run_cmd->add_option("config", run_opts.config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", run_opts.out, "Output directory");
  auto* run_seed = run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_flag("--dry-run", run_opts.dry_run, "Validate and print the resolved config");

  RunOptions sweep_opts;
  std::uint64_t sweep_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one BO procedure per scalarization weight pair");
  sweep_cmd->add_option("config", sweep_opts.config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--out", sweep_opts.out, "Output directory");
  auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "Override the config seed");
  sweep_cmd->add_flag("--dry-run", sweep_opts.dry_run, "Validate and print the resolved config");

  ReportOptions report_opts;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run log");
  report_cmd->add_option("log", report_opts.log_path, "log.jsonl of a run")->required();
  report_cmd->add_option("--compare", report_opts.compare, "Second log for a two-curve CSV");
  report_cmd->add_option("--out", report_opts.out, "Directory for CSV outputs (default: the log's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  if (*run_cmd) {
    if (*run_seed) run_opts.seed = seed;
    return cmd_run(run_opts, std::cout, std::cerr);
  }
  if (*sweep_cmd) {
    if (*sweep_seed_opt) sweep_opts.seed = sweep_seed;
    return cmd_sweep(sweep_opts, std::cout, std::cerr);
  }
  return cmd_report(report_opts, std::cout, std::cerr);
}

}  // namespace bodse::cli
