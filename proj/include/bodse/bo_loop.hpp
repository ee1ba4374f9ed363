#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bodse/acquisition.hpp"
#include "bodse/evaluators.hpp"
#include "bodse/experiment_log.hpp"
#include "bodse/gp.hpp"
#include "bodse/objective.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

struct BoConfig {
  std::size_t init_samples = 5;
  /// BO iterations after the initial batch.
  std::size_t max_iterations = 30;
  AcquisitionSpec acquisition{};
  /// When false, zeta is recomputed each iteration with default_zeta.
  bool zeta_given = false;
  ObjectiveSpec objective{};
  std::uint64_t seed = 0;
  std::size_t refit_restarts = 5;
  ProposeOptions propose{};
  FitOptions fit{};
};

/// Streaming and interruption hooks shared by the BO and GA engines.
struct RunHooks {
  /// Called with every log line as soon as it is final.
  LineSink on_line;
  /// Polled between evaluations; returning true ends the run early.
  std::function<bool()> stop_requested;
  /// Merged into the log header under "config".
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json to_json(const ParameterSpace& space);
ParameterSpace space_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AcquisitionSpec& spec, bool zeta_given);
nlohmann::json to_json(const ObjectiveSpec& spec);
nlohmann::json to_json(const BoConfig& config);

/// Throws InvalidConfig when the evaluator cannot supply a metric the
/// objective reads.
void check_objective_metrics(const ObjectiveSpec& objective, const Evaluator& evaluator);

/// Initial seeded-uniform batch, then max_iterations rounds of
/// propose / evaluate / refit. Failed evaluations consume budget but never
/// enter the GP or the incumbent. Throws AllInitFailed; SpaceExhausted
/// propagates.
ExperimentLog run(const ParameterSpace& space, Evaluator& evaluator, const BoConfig& config,
                  const RunHooks& hooks = {});

struct SweepEntryResult {
  std::optional<ExperimentLog> log;
  std::string error;
};

struct SweepResult {
  std::vector<ParetoPoint> front;
  std::vector<SweepEntryResult> runs;
  std::size_t failed_runs() const;
};

using EvaluatorFactory = std::function<std::unique_ptr<Evaluator>(std::size_t run_index)>;
using HooksFactory = std::function<RunHooks(std::size_t run_index)>;

/// One BO run per objective (seed = base seed + index), merged ok
/// evaluations filtered to their Pareto front on raw metrics. Runs that throw
/// are reported in SweepResult::runs; throws the first error if all fail.
SweepResult multi_run_pareto(const ParameterSpace& space, const EvaluatorFactory& make_evaluator,
                             const BoConfig& base, const std::vector<ObjectiveSpec>& sweep,
                             const HooksFactory& make_hooks = {});

/// Ok evaluations of `log` as Pareto candidates.
std::vector<ParetoPoint> pareto_candidates(const ExperimentLog& log);

}  // namespace bodse
