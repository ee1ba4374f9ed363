#include "bodse/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bodse/error.hpp"

namespace bodse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InvalidConfig(path + ": " + message);
}

// Typed, path-aware access to one JSON object; rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!allowed.contains(k)) fail(at(k), "unknown key");
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number()) fail(at(key), "expected a number");
    return j_.at(key).get<double>();
  }

  double nonnegative(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) fail(at(key), "must be >= 0");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum))
      fail(at(key), "expected an integer >= " + std::to_string(minimum));
    return v.get<std::size_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) fail(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

 private:
  const json& j_;
  std::string path_;
};

template <typename F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidConfig& e) {
    // Errors from nested sections already carry their own path.
    if (std::string(e.what()).starts_with(path)) throw;
    fail(path, e.what());
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

ParameterSpace parse_space(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "table1") fail("space", "unknown built-in space (expected \"table1\")");
    return ParameterSpace::table1();
  }
  if (!j.is_array()) fail("space", "expected \"table1\" or an array of parameter objects");
  std::vector<ParamDef> defs;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Section p(j[i], "space[" + std::to_string(i) + "]");
    p.allow_only({"name", "kind", "min", "max"});
    for (const char* key : {"name", "kind", "min", "max"})
      if (!p.has(key)) fail(p.at(key), "required");
    ParamDef def;
    def.name = p.text("name", "");
    def.kind = with_path(p.at("kind"), [&] { return param_kind_from_string(p.text("kind", "")); });
    def.lower = p.number("min", 0.0);
    def.upper = p.number("max", 0.0);
    defs.push_back(std::move(def));
  }
  return with_path("space", [&] { return ParameterSpace(std::move(defs)); });
}

std::string read_text(const fs::path& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(key, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvaluatorConfig parse_evaluator(const json& j, const fs::path& base_dir) {
  const Section s(j, "evaluator");
  if (!s.has("type")) fail(s.at("type"), "required (synthetic|ppa-surface|external)");
  const std::string type = s.text("type", "");
  EvaluatorConfig c;
  if (type == "synthetic") {
    s.allow_only({"type", "benchmark"});
    c.type = EvaluatorType::synthetic;
    c.benchmark = s.text("benchmark", "");
    with_path(s.at("benchmark"), [&] { return &benchmark(c.benchmark); });
  } else if (type == "ppa-surface") {
    s.allow_only({"type", "noise", "noise_seed"});
    c.type = EvaluatorType::ppa_surface;
    c.ppa.noise = s.flag("noise", true);
    c.ppa.seed = s.count("noise_seed", 0, 0);
  } else if (type == "external") {
    s.allow_only({"type", "template", "template_text", "command", "parse_rules", "timeout"});
    c.type = EvaluatorType::external;
    if (s.has("template") == s.has("template_text"))
      fail(s.at("template"), "give exactly one of template (a file path) or template_text");
    if (s.has("template")) {
      c.template_path = s.text("template", "");
      const fs::path p = fs::path(c.template_path).is_absolute() ? fs::path(c.template_path) : base_dir / c.template_path;
      c.tmpl.text = read_text(p, s.at("template"));
      c.template_path = p.string();
    } else {
      c.tmpl.text = s.text("template_text", "");
    }
    if (!s.has("command") || !s.raw("command").is_array() || s.raw("command").empty())
      fail(s.at("command"), "expected a nonempty array of strings");
    for (const auto& arg : s.raw("command")) {
      if (!arg.is_string()) fail(s.at("command"), "expected a nonempty array of strings");
      c.command.push_back(arg.get<std::string>());
    }
    if (!s.has("parse_rules") || !s.raw("parse_rules").is_array() || s.raw("parse_rules").empty())
      fail(s.at("parse_rules"), "expected a nonempty array of {metric, prefix}");
    const auto& rules = s.raw("parse_rules");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const Section r(rules[i], s.at("parse_rules") + "[" + std::to_string(i) + "]");
      r.allow_only({"metric", "prefix"});
      ParseRule rule{r.text("metric", ""), r.text("prefix", "")};
      if (rule.metric.empty()) fail(r.at("metric"), "required");
      if (rule.prefix.empty()) fail(r.at("prefix"), "required");
      c.tmpl.rules.push_back(std::move(rule));
    }
    c.timeout = s.number("timeout", kDefaultTimeoutSeconds);
    if (!(c.timeout > 0.0)) fail(s.at("timeout"), "must be > 0");
  } else {
    fail(s.at("type"), "unknown evaluator type '" + type + "' (expected synthetic|ppa-surface|external)");
  }
  return c;
}

ObjectiveSpec default_objective(const EvaluatorConfig& ev) {
  if (ev.type == EvaluatorType::synthetic) return ObjectiveSpec::single_metric("value");
  return ObjectiveSpec::scalarized(1.0, 1.0, Scaling::scale_down);
}

ObjectiveSpec parse_objective(const json* j, const EvaluatorConfig& ev) {
  ObjectiveSpec spec = default_objective(ev);
  if (!j) return spec;
  const Section s(*j, "objective");
  s.allow_only({"mode", "metric", "metrics", "alpha1", "alpha2", "scaling", "references"});
  spec.mode = with_path(s.at("mode"), [&] { return objective_mode_from_string(s.text("mode", to_string(spec.mode))); });
  if (spec.mode == ObjectiveMode::single) {
    spec.metric = s.text("metric", spec.metric.empty() ? std::string("area") : spec.metric);
    if (spec.metric.empty()) fail(s.at("metric"), "required in single mode");
  } else if (s.has("metric")) {
    fail(s.at("metric"), "only valid in single mode");
  }
  if (s.has("metrics")) {
    const auto& m = s.raw("metrics");
    if (!m.is_array() || m.size() != 3) fail(s.at("metrics"), "expected three metric names");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!m[i].is_string()) fail(s.at("metrics"), "expected three metric names");
      spec.metrics[i] = m[i].get<std::string>();
    }
  }
  spec.alpha1 = s.nonnegative("alpha1", spec.alpha1);
  spec.alpha2 = s.nonnegative("alpha2", spec.alpha2);
  spec.scaling = with_path(s.at("scaling"), [&] { return scaling_from_string(s.text("scaling", to_string(spec.scaling))); });
  spec.references.clear();
  if (s.has("references")) {
    const Section refs(s.raw("references"), s.at("references"));
    for (const auto& [name, value] : s.raw("references").items()) {
      if (!value.is_number() || !(value.get<double>() > 0.0)) fail(refs.at(name), "reference must be a positive number");
      spec.references[name] = value.get<double>();
    }
  }
  return spec;
}

std::vector<std::pair<double, double>> parse_sweep(const json& j) {
  std::vector<std::pair<double, double>> weights;
  auto weight = [](const json& v, const std::string& path) {
    if (!v.is_number() || !(v.get<double>() >= 0.0)) fail(path, "weights must be numbers >= 0");
    return v.get<double>();
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string path = "sweep[" + std::to_string(i) + "]";
      if (!j[i].is_array() || j[i].size() != 2) fail(path, "expected an [alpha1, alpha2] pair");
      weights.emplace_back(weight(j[i][0], path), weight(j[i][1], path));
    }
  } else {
    const Section s(j, "sweep");
    s.allow_only({"alpha1", "alpha2"});
    for (const char* key : {"alpha1", "alpha2"})
      if (!s.has(key) || !s.raw(key).is_array() || s.raw(key).empty()) fail(s.at(key), "expected a nonempty array");
    for (const auto& a1 : s.raw("alpha1"))
      for (const auto& a2 : s.raw("alpha2")) weights.emplace_back(weight(a1, "sweep.alpha1"), weight(a2, "sweep.alpha2"));
  }
  if (weights.empty()) fail("sweep", "needs at least one weight pair");
  return weights;
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  bo.seed = s;
  ga.seed = s;
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  const Section root(doc, "");
  root.allow_only({"space", "evaluator", "engine", "bo", "ga", "acquisition", "objective", "sweep", "output", "seed"});
  ExperimentConfig c;

  if (!root.has("evaluator")) fail("evaluator", "required");
  c.evaluator = parse_evaluator(root.raw("evaluator"), base_dir);

  if (c.evaluator.type == EvaluatorType::synthetic) {
    c.space = benchmark(c.evaluator.benchmark).space;
    if (root.has("space") && !(parse_space(root.raw("space")) == c.space))
      fail("space", "must be omitted or match the benchmark's own space");
  } else if (c.evaluator.type == EvaluatorType::ppa_surface) {
    if (root.has("space") && !(parse_space(root.raw("space")) == ParameterSpace::table1()))
      fail("space", "the ppa-surface evaluator only supports the table1 space");
  } else if (root.has("space")) {
    c.space = parse_space(root.raw("space"));
  }

  const std::string engine = root.text("engine", "bo");
  if (engine == "bo")
    c.engine = Engine::bo;
  else if (engine == "ga")
    c.engine = Engine::ga;
  else
    fail("engine", "expected \"bo\" or \"ga\"");

  c.seed = root.count("seed", 0, 0);

  if (root.has("bo")) {
    const Section s(root.raw("bo"), "bo");
    s.allow_only({"init_samples", "max_iterations", "refit_restarts"});
    c.bo.init_samples = s.count("init_samples", 5, 1);
    c.bo.max_iterations = s.count("max_iterations", 30, 1);
    c.bo.refit_restarts = s.count("refit_restarts", 5, 1);
  }

  if (root.has("acquisition")) {
    const Section s(root.raw("acquisition"), "acquisition");
    s.allow_only({"kind", "kappa", "zeta"});
    c.bo.acquisition.kind =
        with_path(s.at("kind"), [&] { return acquisition_kind_from_string(s.text("kind", "lcb")); });
    c.bo.acquisition.kappa = s.nonnegative("kappa", 2.0);
    // A string value (as written in resolved snapshots) selects the automatic rule.
    c.bo.zeta_given = s.has("zeta") && !s.raw("zeta").is_string();
    if (c.bo.zeta_given) c.bo.acquisition.zeta = s.nonnegative("zeta", 0.0);
  }

  c.bo.objective = parse_objective(root.has("objective") ? &root.raw("objective") : nullptr, c.evaluator);

  c.ga = budget_match(c.bo);
  if (root.has("ga")) {
    const Section s(root.raw("ga"), "ga");
    s.allow_only({"population", "generations", "tournament_k", "crossover_rate", "mutation_stddev", "elitism",
                  "max_evaluations"});
    c.ga.population = s.count("population", c.ga.population, 2);
    c.ga.generations = s.count("generations", c.ga.generations, 1);
    c.ga.tournament_k = s.count("tournament_k", c.ga.tournament_k, 1);
    c.ga.crossover_rate = s.number("crossover_rate", c.ga.crossover_rate);
    c.ga.mutation_stddev = s.number("mutation_stddev", c.ga.mutation_stddev);
    c.ga.elitism = s.count("elitism", c.ga.elitism, 0);
    if (s.has("max_evaluations") && s.raw("max_evaluations").is_null())
      c.ga.max_evaluations.reset();
    else if (s.has("max_evaluations"))
      c.ga.max_evaluations = s.count("max_evaluations", 1, 1);
    else if (s.has("population") || s.has("generations"))
      c.ga.max_evaluations.reset();
    with_path("ga", [&] {
      c.ga.validate();
      return 0;
    });
  }
  c.set_seed(c.seed);

  if (root.has("sweep")) {
    c.sweep = parse_sweep(root.raw("sweep"));
    if (c.bo.objective.mode != ObjectiveMode::scalarized) fail("objective.mode", "a sweep needs a scalarized objective");
  }
  if (root.has("output") && !root.raw("output").is_null()) c.output = root.text("output", "");

  // Cross-checks between sections.
  const auto make_probe = [&]() -> std::unique_ptr<Evaluator> {
    if (c.evaluator.type == EvaluatorType::synthetic) return std::make_unique<SyntheticEvaluator>(c.evaluator.benchmark);
    if (c.evaluator.type == EvaluatorType::ppa_surface) return std::make_unique<PpaSurfaceEvaluator>(c.evaluator.ppa);
    return nullptr;
  };
  std::vector<std::string> produced;
  if (auto probe = make_probe())
    produced = probe->metric_names();
  else
    for (const auto& r : c.evaluator.tmpl.rules) produced.push_back(r.metric);
  for (const auto& m : c.bo.objective.used_metrics())
    if (std::find(produced.begin(), produced.end(), m) == produced.end())
      fail("objective", "metric '" + m + "' is not produced by the evaluator");
  for (const auto& [name, v] : c.bo.objective.references)
    if (std::find(produced.begin(), produced.end(), name) == produced.end())
      fail("objective.references." + name, "not a metric of the evaluator");
  if (c.evaluator.type == EvaluatorType::external)
    with_path("evaluator.template", [&] {
      validate_template(c.evaluator.tmpl, c.space, {});
      return 0;
    });
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig(path.string() + ": cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

json resolved_json(const ExperimentConfig& c) {
  json ev;
  switch (c.evaluator.type) {
    case EvaluatorType::synthetic:
      ev = {{"type", "synthetic"}, {"benchmark", c.evaluator.benchmark}};
      break;
    case EvaluatorType::ppa_surface:
      ev = {{"type", "ppa-surface"}, {"noise", c.evaluator.ppa.noise}, {"noise_seed", c.evaluator.ppa.seed}};
      break;
    case EvaluatorType::external: {
      json rules = json::array();
      for (const auto& r : c.evaluator.tmpl.rules) rules.push_back({{"metric", r.metric}, {"prefix", r.prefix}});
      ev = {{"type", "external"}, {"command", c.evaluator.command}, {"parse_rules", rules}, {"timeout", c.evaluator.timeout}};
      if (c.evaluator.template_path.empty())
        ev["template_text"] = c.evaluator.tmpl.text;
      else
        ev["template"] = c.evaluator.template_path;
      break;
    }
  }
  json j = {{"seed", c.seed},
            {"engine", c.engine == Engine::bo ? "bo" : "ga"},
            {"space", to_json(c.space)},
            {"evaluator", ev},
            {"bo",
             {{"init_samples", c.bo.init_samples},
              {"max_iterations", c.bo.max_iterations},
              {"refit_restarts", c.bo.refit_restarts}}},
            {"acquisition", to_json(c.bo.acquisition, c.bo.zeta_given)},
            {"objective", to_json(c.bo.objective)},
            {"ga", to_json(c.ga)},
            {"output", c.output ? json(*c.output) : json(nullptr)}};
  j["ga"].erase("seed");
  if (!c.sweep.empty()) {
    json sweep = json::array();
    for (const auto& [a1, a2] : c.sweep) sweep.push_back({a1, a2});
    j["sweep"] = sweep;
  }
  return j;
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& config, const fs::path& workdir) {
  switch (config.type) {
    case EvaluatorType::synthetic: return std::make_unique<SyntheticEvaluator>(config.benchmark);
    case EvaluatorType::ppa_surface: return std::make_unique<PpaSurfaceEvaluator>(config.ppa);
    case EvaluatorType::external:
      return std::make_unique<ExternalEvaluator>(config.tmpl, config.command, workdir, config.timeout);
  }
  throw InvalidConfig("evaluator: unsupported type");
}

}  // namespace bodse
