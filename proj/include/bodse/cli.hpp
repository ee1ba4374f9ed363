#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bodse/experiment_log.hpp"
#include "bodse/objective.hpp"
#include "bodse/param_space.hpp"

namespace bodse::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kConfigError = 2,
  kRuntimeError = 3,
  kPartialFailure = 4,
  kInterrupted = 130,
};

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

struct ReportOptions {
  std::string log_path;
  std::optional<std::string> compare;
  std::optional<std::string> out;
};

/// Writes log.jsonl, incumbent.csv and config.resolved.json under the output
/// directory.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
/// One run_<i>/ directory per weight pair plus a merged pareto.csv.
int cmd_sweep(const RunOptions& options, std::ostream& out, std::ostream& err);
/// Prints a summary and writes incumbent.csv (and compare.csv with --compare).
int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

/// Metric columns (preferred order first, then the rest by name) followed by
/// parameter columns in space order.
std::string pareto_csv(const std::vector<ParetoPoint>& front, const ParameterSpace& space,
                       const std::vector<std::string>& preferred_metrics = {});

/// `iteration,best,best_compare`: running minima of two logs per record
/// index, one row per record of the longer log.
std::string compare_csv(const ExperimentLog& a, const ExperimentLog& b);

int main(int argc, char** argv);

}  // namespace bodse::cli
