#include "bodse/bo_loop.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

enum Stream : std::uint64_t { kInitStream = 1, kProposeStream = 2, kReproposeStream = 3, kFitStream = 4 };

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Training data of ok evaluations, in the snapped coordinates of the space.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t dim) : dim_(dim) {}

  void add(const ParamVector& x, double target) {
    xs_.push_back(x);
    ys_.push_back(target);
  }

  Eigen::MatrixXd X() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs_.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < xs_.size(); ++i)
      for (std::size_t d = 0; d < dim_; ++d) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = xs_[i][d];
    return m;
  }

  Eigen::VectorXd y() const { return Eigen::Map<const Eigen::VectorXd>(ys_.data(), static_cast<Eigen::Index>(ys_.size())); }
  const std::vector<double>& targets() const { return ys_; }
  std::size_t size() const { return ys_.size(); }

 private:
  std::size_t dim_;
  std::vector<ParamVector> xs_;
  std::vector<double> ys_;
};

}  // namespace

json to_json(const ParameterSpace& space) {
  json arr = json::array();
  for (const auto& p : space.params())
    arr.push_back({{"name", p.name}, {"kind", to_string(p.kind)}, {"min", p.lower}, {"max", p.upper}});
  return arr;
}

ParameterSpace space_from_json(const json& j) {
  std::vector<ParamDef> defs;
  for (const auto& item : j)
    defs.push_back({item.at("name").get<std::string>(), param_kind_from_string(item.at("kind").get<std::string>()),
                    item.at("min").get<double>(), item.at("max").get<double>()});
  return ParameterSpace(std::move(defs));
}

json to_json(const AcquisitionSpec& spec, bool zeta_given) {
  json j = {{"kind", to_string(spec.kind)}, {"kappa", spec.kappa}};
  if (zeta_given)
    j["zeta"] = spec.zeta;
  else
    j["zeta"] = "auto: 0.01*max(std(targets),1e-3)";
  return j;
}

json to_json(const ObjectiveSpec& spec) {
  json j = {{"mode", to_string(spec.mode)},
            {"metrics", spec.metrics},
            {"alpha1", spec.alpha1},
            {"alpha2", spec.alpha2},
            {"scaling", to_string(spec.scaling)},
            {"references", spec.references}};
  if (spec.mode == ObjectiveMode::single) j["metric"] = spec.metric;
  return j;
}

json to_json(const BoConfig& c) {
  return {{"init_samples", c.init_samples},
          {"max_iterations", c.max_iterations},
          {"refit_restarts", c.refit_restarts},
          {"seed", c.seed},
          {"acquisition", to_json(c.acquisition, c.zeta_given)},
          {"objective", to_json(c.objective)},
          {"propose",
           {{"random_starts", c.propose.random_starts},
            {"refined_starts", c.propose.refined_starts},
            {"sweeps", c.propose.sweeps},
            {"coordinate_tolerance", c.propose.coordinate_tolerance},
            {"perturbation", c.propose.perturbation},
            {"perturbation_tries", c.propose.perturbation_tries}}},
          {"fit",
           {{"max_iterations", c.fit.max_iterations},
            {"gradient_tolerance", c.fit.gradient_tolerance},
            {"jitter", "1e-10..1e-4 x mean(diag)"}}}};
}

void check_objective_metrics(const ObjectiveSpec& objective, const Evaluator& evaluator) {
  const auto available = evaluator.metric_names();
  for (const auto& m : objective.used_metrics())
    if (std::find(available.begin(), available.end(), m) == available.end())
      throw InvalidConfig("objective metric '" + m + "' is not produced by the evaluator");
}

ExperimentLog run(const ParameterSpace& space, Evaluator& evaluator, const BoConfig& config, const RunHooks& hooks) {
  if (config.init_samples < 1) throw InvalidConfig("init_samples must be >= 1");
  if (config.max_iterations < 1) throw InvalidConfig("max_iterations must be >= 1");
  if (config.refit_restarts < 1) throw InvalidConfig("refit_restarts must be >= 1");
  check_objective_metrics(config.objective, evaluator);

  auto emit = [&](const json& line) {
    if (hooks.on_line) hooks.on_line(line.dump());
  };
  auto stop = [&] { return hooks.stop_requested && hooks.stop_requested(); };

  ExperimentLog log;
  log.header = {{"engine", "bo"}, {"space", to_json(space)}, {"bo", to_json(config)}, {"config", hooks.config}};
  emit(header_line(log));

  ObjectiveSpec objective = config.objective;
  History history;
  TrainingSet data(space.dim());
  std::optional<double> incumbent;
  FitOptions fit = config.fit;
  fit.restarts = config.refit_restarts;

  // Initial batch. Targets need the scaling references, which come from this
  // batch, so its records are emitted only once all of it is evaluated.
  const auto init_points = space.sample_uniform(config.init_samples, derive_seed(config.seed, kInitStream));
  for (std::size_t k = 0; k < init_points.size(); ++k) {
    IterationRecord r;
    r.index = k;
    r.phase = "init";
    r.x = init_points[k];
    r.seed = derive_seed(config.seed, kInitStream);
    const auto start = Clock::now();
    r.evaluation = evaluator.evaluate(space.decode(r.x), k);
    r.timing.evaluate = seconds_since(start);
    history.insert(space.decode_values(r.x));
    log.records.push_back(std::move(r));
    if (stop()) break;
  }

  std::vector<MetricVector> ok_metrics;
  for (const auto& r : log.records)
    if (r.evaluation.ok()) ok_metrics.push_back(r.evaluation.metrics);
  if (ok_metrics.empty()) {
    for (const auto& r : log.records) emit(to_json(r));
    throw AllInitFailed("no evaluation of the initial batch succeeded");
  }
  if (objective.scaling != Scaling::none) {
    objective.references = resolve_references(ok_metrics, objective);
    log.references = objective.references;
  }

  for (auto& r : log.records) {
    if (r.evaluation.ok()) {
      r.target = objective_value(r.evaluation.metrics, objective);
      data.add(space.snap(r.x), *r.target);
      if (!incumbent || *r.target < *incumbent) incumbent = r.target;
    }
    r.incumbent = incumbent;
  }

  auto refit = [&](std::size_t round) {
    return fit_surrogate(data.X(), data.y(), derive_seed(config.seed, kFitStream, round), fit);
  };
  const auto fit_start = Clock::now();
  Surrogate surrogate = refit(0);
  const double init_fit_time = seconds_since(fit_start);
  if (!log.records.empty()) {
    log.records.back().hyperparams = surrogate.model().params();
    log.records.back().timing.refit = init_fit_time;
  }
  for (const auto& r : log.records) emit(to_json(r));
  if (log.references) emit(scaling_line(*log.references));

  for (std::size_t it = 0; it < config.max_iterations && !stop(); ++it) {
    IterationRecord r;
    r.index = log.records.size();
    r.phase = "bo";
    r.seed = derive_seed(config.seed, kProposeStream, it);

    AcquisitionSpec acq = config.acquisition;
    if (!config.zeta_given) acq.zeta = default_zeta(data.targets());
    r.tradeoff = (acq.kind == AcquisitionKind::lcb || acq.kind == AcquisitionKind::ucb) ? acq.kappa : acq.zeta;

    auto start = Clock::now();
    Proposal proposal = propose(surrogate, acq, Incumbent{*incumbent}, space, history, r.seed, config.propose);
    if (history.contains(space.decode_values(proposal.x))) {
      r.seed = derive_seed(config.seed, kReproposeStream, it);
      proposal = propose(surrogate, acq, Incumbent{*incumbent}, space, history, r.seed, config.propose);
      if (history.contains(space.decode_values(proposal.x))) {
        r.degenerate = true;
        std::cerr << "warning: iteration " << r.index << " re-proposed an evaluated point\n";
      }
    }
    r.timing.propose = seconds_since(start);
    r.x = proposal.x;
    r.acquisition_value = proposal.value;
    r.perturbed = proposal.perturbed;

    start = Clock::now();
    r.evaluation = evaluator.evaluate(space.decode(r.x), r.index);
    r.timing.evaluate = seconds_since(start);
    history.insert(space.decode_values(r.x));

    if (r.evaluation.ok()) {
      r.target = objective_value(r.evaluation.metrics, objective);
      data.add(space.snap(r.x), *r.target);
      if (*r.target < *incumbent) incumbent = r.target;
      start = Clock::now();
      surrogate = refit(it + 1);
      r.timing.refit = seconds_since(start);
    }
    r.incumbent = incumbent;
    r.hyperparams = surrogate.model().params();
    emit(to_json(r));
    log.records.push_back(std::move(r));
  }
  return log;
}

std::size_t SweepResult::failed_runs() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return !r.log; }));
}

std::vector<ParetoPoint> pareto_candidates(const ExperimentLog& log) {
  std::vector<ParetoPoint> points;
  for (const auto& r : log.records)
    if (r.evaluation.ok()) points.push_back({r.evaluation.raw_params, r.evaluation.metrics});
  return points;
}

SweepResult multi_run_pareto(const ParameterSpace& space, const EvaluatorFactory& make_evaluator,
                             const BoConfig& base, const std::vector<ObjectiveSpec>& sweep,
                             const HooksFactory& make_hooks) {
  if (sweep.empty()) throw EmptySweep("sweep needs at least one objective");
  for (const auto& spec : sweep)
    if (spec.mode != ObjectiveMode::scalarized) throw ModeMismatch("every sweep objective must be scalarized");

  SweepResult result;
  std::vector<ParetoPoint> merged;
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    BoConfig config = base;
    config.objective = sweep[i];
    config.seed = base.seed + i;
    SweepEntryResult entry;
    try {
      auto evaluator = make_evaluator(i);
      entry.log = run(space, *evaluator, config, make_hooks ? make_hooks(i) : RunHooks{});
      auto points = pareto_candidates(*entry.log);
      merged.insert(merged.end(), points.begin(), points.end());
    } catch (const std::exception& e) {
      if (!first_error) first_error = std::current_exception();
      entry.error = e.what();
    }
    result.runs.push_back(std::move(entry));
  }
  if (result.failed_runs() == sweep.size()) std::rethrow_exception(first_error);
  result.front = pareto_filter(merged);
  return result;
}

}  // namespace bodse
