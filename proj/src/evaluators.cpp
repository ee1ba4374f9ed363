#include "bodse/evaluators.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

const char* to_string(EvalStatus status) { return status == EvalStatus::ok ? "ok" : "failed"; }

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::none: return "none";
    case FailureKind::spawn_failure: return "spawn_failure";
    case FailureKind::timeout: return "timeout";
    case FailureKind::parse_failure: return "parse_failure";
  }
  return "?";
}

FailureKind failure_kind_from_string(const std::string& s) {
  if (s == "none") return FailureKind::none;
  if (s == "spawn_failure") return FailureKind::spawn_failure;
  if (s == "timeout") return FailureKind::timeout;
  if (s == "parse_failure") return FailureKind::parse_failure;
  throw InvalidConfig("unknown failure kind '" + s + "'");
}

Evaluation Evaluation::failed(RawAssignment raw, FailureKind kind, std::string reason, double wall_time) {
  Evaluation e;
  e.raw_params = std::move(raw);
  e.status = EvalStatus::failed;
  e.failure = kind;
  e.reason = std::move(reason);
  e.wall_time = wall_time;
  return e;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<ParamDef> unit_box(std::size_t d) {
  std::vector<ParamDef> defs;
  for (std::size_t i = 0; i < d; ++i) defs.push_back({"x" + std::to_string(i + 1), ParamKind::continuous, 0.0, 1.0});
  return defs;
}

const std::vector<Benchmark>& registry() {
  static const std::vector<Benchmark> benchmarks{
      {"sphere-d6", ParameterSpace(unit_box(6)), 0.0},
      {"rosenbrock-d2",
       ParameterSpace({{"x1", ParamKind::continuous, -2.0, 2.0}, {"x2", ParamKind::continuous, -2.0, 2.0}}),
       0.0},
      {"mixed-step-d3",
       ParameterSpace({{"x1", ParamKind::continuous, 0.0, 1.0},
                       {"x2", ParamKind::continuous, 0.0, 1.0},
                       {"n", ParamKind::integer, 0.0, 4.0}}),
       0.0},
  };
  return benchmarks;
}

double sphere(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += (x - 0.5) * (x - 0.5);
  return s;
}

double rosenbrock(std::span<const double> v) {
  const double a = 1.0 - v[0];
  const double b = v[1] - v[0] * v[0];
  return a * a + 100.0 * b * b;
}

// Plateau of width 0.4 around x1 = 0.5, smooth bowl in x2, integer penalty.
double mixed_step(std::span<const double> v) {
  const double step = std::floor(5.0 * std::abs(v[0] - 0.5)) / 5.0;
  const double bowl = (v[1] - 0.25) * (v[1] - 0.25);
  return step + bowl + 0.1 * std::abs(v[2] - 2.0);
}

}  // namespace

std::vector<std::string> benchmark_ids() {
  std::vector<std::string> ids;
  for (const auto& b : registry()) ids.push_back(b.id);
  return ids;
}

const Benchmark& benchmark(const std::string& id) {
  for (const auto& b : registry())
    if (b.id == id) return b;
  throw UnknownBenchmark("unknown benchmark '" + id + "'");
}

Evaluation eval_synthetic(const std::string& id, const RawAssignment& raw) {
  const auto start = Clock::now();
  const Benchmark& b = benchmark(id);
  b.space.encode(raw);  // validates names and bounds
  const auto values = b.space.ordered_values(raw);
  double value = 0.0;
  if (id == "sphere-d6")
    value = sphere(values);
  else if (id == "rosenbrock-d2")
    value = rosenbrock(values);
  else
    value = mixed_step(values);
  Evaluation e;
  e.raw_params = raw;
  e.metrics = {{"value", value}};
  e.wall_time = seconds_since(start);
  return e;
}

Evaluation eval_synthetic(const std::string& id, std::span<const double> x) {
  return eval_synthetic(id, benchmark(id).space.decode(x));
}

SyntheticEvaluator::SyntheticEvaluator(std::string id) : benchmark_(&benchmark(id)) {}

Evaluation SyntheticEvaluator::evaluate(const RawAssignment& raw, std::size_t) {
  return eval_synthetic(benchmark_->id, raw);
}

MetricVector ppa_nominal(const RawAssignment& raw) {
  const ParameterSpace space = ParameterSpace::table1();
  space.encode(raw);
  const double t = 2.0 - raw.at("clock_period");
  const double m = (0.5 - raw.at("max_delay")) / 0.4;
  const double l = (raw.at("pin_load") - 0.002) / 0.004;
  const double o = (raw.at("output_delay") - 0.1) / 0.4;
  const double cu = raw.at("core_utilization");
  const double u = (cu - 0.5) / 0.5;
  const double r = raw.at("core_aspect_ratio");

  const double delay = 320.0 + 45.0 * (1.0 - t) + 20.0 * (1.0 - m) + 15.0 * l + 10.0 * o * (1.0 - 0.5 * t) +
                       60.0 * std::exp(-(1.0 - cu) / 0.03) + 5.0 * (r - 1.0);
  const double energy = 5600.0 + 1400.0 * t + 600.0 * t * t + 500.0 * m + 900.0 * l + 300.0 * o +
                        400.0 * (1.0 - u) + 80.0 * (r - 1.0);
  const double area = 1650.0 + 350.0 * t + 250.0 * m + 150.0 * t * m + 120.0 * l + 60.0 * o +
                      700.0 * (1.0 - u) + 40.0 * (r - 1.0);
  return {{"area", area}, {"energy", energy}, {"delay", delay}};
}

Evaluation eval_ppa_surface(const RawAssignment& raw, const PpaSurfaceOptions& options) {
  const auto start = Clock::now();
  MetricVector metrics = ppa_nominal(raw);
  if (options.noise) {
    std::uint64_t h = mix64(options.seed);
    for (const auto& [name, value] : raw) h = mix64(h ^ std::bit_cast<std::uint64_t>(value));
    Rng rng(h);
    // Fixed draw order: area, delay, energy (map order).
    for (auto& [name, value] : metrics) value += kPpaNoiseFraction * value * rng.normal();
  }
  Evaluation e;
  e.raw_params = raw;
  e.metrics = std::move(metrics);
  e.wall_time = seconds_since(start);
  return e;
}

Evaluation eval_ppa_surface(std::span<const double> x, const PpaSurfaceOptions& options) {
  return eval_ppa_surface(ParameterSpace::table1().decode(x), options);
}

Evaluation PpaSurfaceEvaluator::evaluate(const RawAssignment& raw, std::size_t) {
  return eval_ppa_surface(raw, options_);
}

}  // namespace bodse
