#include "bodse/baseline_ga.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kGaStream = 0x6761;
constexpr double kBlendExtension = 0.1;

struct Individual {
  ParamVector x;
  double fitness = std::numeric_limits<double>::infinity();
};

// Stable ascending order by fitness; failed individuals sort last.
std::vector<std::size_t> ranking(const std::vector<Individual>& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
  return order;
}

const Individual& tournament(const std::vector<Individual>& pop, std::size_t k, Rng& rng) {
  std::size_t best = rng.index(pop.size());
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = rng.index(pop.size());
    if (pop[c].fitness < pop[best].fitness || (pop[c].fitness == pop[best].fitness && c < best)) best = c;
  }
  return pop[best];
}

}  // namespace

void GaConfig::validate() const {
  if (population < 2) throw InvalidConfig("ga.population must be >= 2");
  if (generations < 1) throw InvalidConfig("ga.generations must be >= 1");
  if (tournament_k < 1 || tournament_k > population) throw InvalidConfig("ga.tournament_k must be in [1, population]");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw InvalidConfig("ga.crossover_rate must be in [0, 1]");
  if (!(mutation_stddev >= 0.0)) throw InvalidConfig("ga.mutation_stddev must be >= 0");
  if (elitism >= population) throw InvalidConfig("ga.elitism must be < population");
  if (max_evaluations && *max_evaluations < 1) throw InvalidConfig("ga.max_evaluations must be >= 1");
  if (population > kEvaluationCap / generations) throw InvalidConfig("ga population x generations exceeds the evaluation cap");
}

std::size_t GaConfig::total_evaluations() const {
  const std::size_t full = population * generations;
  return max_evaluations ? std::min(full, *max_evaluations) : full;
}

json to_json(const GaConfig& c) {
  return {{"population", c.population},
          {"generations", c.generations},
          {"tournament_k", c.tournament_k},
          {"crossover_rate", c.crossover_rate},
          {"mutation_stddev", c.mutation_stddev},
          {"elitism", c.elitism},
          {"seed", c.seed},
          {"max_evaluations", c.max_evaluations ? json(*c.max_evaluations) : json(nullptr)}};
}

GaConfig budget_match(const BoConfig& bo_config) {
  const std::size_t total = bo_config.init_samples + bo_config.max_iterations;
  GaConfig ga;
  ga.population = 5;
  ga.generations = std::max<std::size_t>(1, (total + ga.population - 1) / ga.population);
  ga.max_evaluations = total;
  ga.seed = bo_config.seed;
  return ga;
}

GaResult run_ga(const ParameterSpace& space, Evaluator& evaluator, const ObjectiveSpec& objective_in,
                const GaConfig& config, const RunHooks& hooks) {
  config.validate();
  check_objective_metrics(objective_in, evaluator);

  auto emit = [&](const json& line) {
    if (hooks.on_line) hooks.on_line(line.dump());
  };
  auto stop = [&] { return hooks.stop_requested && hooks.stop_requested(); };

  GaResult result;
  ExperimentLog& log = result.log;
  log.header = {{"engine", "ga"},
                {"space", to_json(space)},
                {"ga", to_json(config)},
                {"objective", to_json(objective_in)},
                {"config", hooks.config}};
  emit(header_line(log));

  const std::size_t budget = config.total_evaluations();
  ObjectiveSpec objective = objective_in;
  std::optional<double> incumbent;
  Rng rng(derive_seed(config.seed, kGaStream));

  auto evaluate = [&](const ParamVector& x, std::size_t generation) {
    IterationRecord r;
    r.index = log.records.size();
    r.phase = "ga";
    r.generation = generation;
    r.x = x;
    r.seed = config.seed;
    const auto start = Clock::now();
    r.evaluation = evaluator.evaluate(space.decode(x), r.index);
    r.timing.evaluate = std::chrono::duration<double>(Clock::now() - start).count();
    log.records.push_back(std::move(r));
  };
  auto score = [&](IterationRecord& r) -> double {
    if (r.evaluation.ok()) {
      r.target = objective_value(r.evaluation.metrics, objective);
      if (!incumbent || *r.target < *incumbent) incumbent = r.target;
    }
    r.incumbent = incumbent;
    return r.target.value_or(std::numeric_limits<double>::infinity());
  };

  // Generation 0: uniform population; scaling references come from it.
  std::vector<Individual> population;
  const auto initial = space.sample_uniform(config.population, derive_seed(config.seed, kGaStream, 1));
  for (const auto& x : initial) {
    if (log.records.size() >= budget || stop()) break;
    evaluate(x, 0);
  }
  std::vector<MetricVector> ok_metrics;
  for (const auto& r : log.records)
    if (r.evaluation.ok()) ok_metrics.push_back(r.evaluation.metrics);
  if (ok_metrics.empty()) {
    for (const auto& r : log.records) emit(to_json(r));
    throw AllInitFailed("no evaluation of the initial population succeeded");
  }
  if (objective.scaling != Scaling::none) {
    objective.references = resolve_references(ok_metrics, objective);
    log.references = objective.references;
  }
  for (auto& r : log.records) {
    population.push_back({r.x, score(r)});
    emit(to_json(r));
  }
  if (log.references) emit(scaling_line(*log.references));

  for (std::size_t gen = 1; gen < config.generations && log.records.size() < budget && !stop(); ++gen) {
    std::vector<Individual> offspring;
    for (std::size_t i = 0; i < config.population && log.records.size() < budget && !stop(); ++i) {
      const Individual& a = tournament(population, config.tournament_k, rng);
      ParamVector child = a.x;
      if (rng.uniform() < config.crossover_rate) {
        const Individual& b = tournament(population, config.tournament_k, rng);
        for (std::size_t d = 0; d < child.size(); ++d) {
          const double lo = std::min(a.x[d], b.x[d]);
          const double hi = std::max(a.x[d], b.x[d]);
          const double ext = kBlendExtension * (hi - lo);
          child[d] = std::clamp(rng.uniform(lo - ext, hi + ext), 0.0, 1.0);
        }
      }
      if (config.mutation_stddev > 0.0)
        for (auto& c : child) c = std::clamp(c + config.mutation_stddev * rng.normal(), 0.0, 1.0);
      evaluate(child, gen);
      auto& r = log.records.back();
      offspring.push_back({child, score(r)});
      emit(to_json(r));
    }

    const auto parents_rank = ranking(population);
    const auto child_rank = ranking(offspring);
    std::vector<Individual> next;
    for (std::size_t e = 0; e < config.elitism && e < parents_rank.size(); ++e)
      next.push_back(population[parents_rank[e]]);
    for (std::size_t c = 0; next.size() < config.population && c < child_rank.size(); ++c)
      next.push_back(offspring[child_rank[c]]);
    // A truncated last generation may leave slots; refill with remaining parents.
    for (std::size_t e = config.elitism; next.size() < config.population && e < parents_rank.size(); ++e)
      next.push_back(population[parents_rank[e]]);
    population = std::move(next);
  }

  for (const auto& ind : population) result.final_population.push_back(ind.x);
  return result;
}

}  // namespace bodse
