#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bodse/bo_loop.hpp"
#include "bodse/evaluators.hpp"
#include "bodse/experiment_log.hpp"
#include "bodse/objective.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

struct GaConfig {
  static constexpr std::size_t kEvaluationCap = 1'000'000;

  std::size_t population = 5;
  std::size_t generations = 7;
  std::size_t tournament_k = 2;
  double crossover_rate = 0.9;
  /// Gaussian mutation in normalized coordinates.
  double mutation_stddev = 0.1;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;
  /// Truncates the last generation when set.
  std::optional<std::size_t> max_evaluations;

  /// Throws InvalidConfig on violated invariants.
  void validate() const;
  std::size_t total_evaluations() const;
};

nlohmann::json to_json(const GaConfig& config);

/// Population 5 with enough generations to spend exactly
/// init_samples + max_iterations evaluations.
GaConfig budget_match(const BoConfig& bo_config);

struct GaResult {
  ExperimentLog log;
  /// Population after the last generation, normalized.
  std::vector<ParamVector> final_population;
};

/// Generational GA: tournament selection, blend crossover over the parents'
/// interval widened by 10% each side, Gaussian mutation, clamping to the unit
/// cube, and elitism. Each generation evaluates `population` offspring; the
/// next population keeps the `elitism` best parents unchanged plus the best
/// offspring. Throws AllInitFailed when the first generation has no ok
/// evaluation.
GaResult run_ga(const ParameterSpace& space, Evaluator& evaluator, const ObjectiveSpec& objective,
                const GaConfig& config, const RunHooks& hooks = {});

inline ExperimentLog ga_run(const ParameterSpace& space, Evaluator& evaluator, const ObjectiveSpec& objective,
                            const GaConfig& config, const RunHooks& hooks = {}) {
  return run_ga(space, evaluator, objective, config, hooks).log;
}

}  // namespace bodse
