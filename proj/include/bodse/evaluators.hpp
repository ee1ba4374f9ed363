#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bodse/objective.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

enum class EvalStatus { ok, failed };
enum class FailureKind { none, spawn_failure, timeout, parse_failure };

const char* to_string(EvalStatus status);
const char* to_string(FailureKind kind);
FailureKind failure_kind_from_string(const std::string& s);

/// Outcome of one black-box evaluation. `metrics` is empty unless ok.
struct Evaluation {
  RawAssignment raw_params;
  MetricVector metrics;
  double wall_time = 0.0;
  EvalStatus status = EvalStatus::ok;
  FailureKind failure = FailureKind::none;
  std::string reason;

  bool ok() const { return status == EvalStatus::ok; }
  static Evaluation failed(RawAssignment raw, FailureKind kind, std::string reason, double wall_time = 0.0);
};

/// Uniform black-box interface. `index` numbers evaluations within a run.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const RawAssignment& raw, std::size_t index) = 0;
  virtual std::vector<std::string> metric_names() const = 0;
  /// True when repeated calls with the same inputs give bit-identical metrics.
  virtual bool deterministic() const { return true; }
};

// ---------------------------------------------------------------------------
// Synthetic benchmarks

struct Benchmark {
  std::string id;
  ParameterSpace space;
  /// Registered global minimum of the metric "value".
  double optimum = 0.0;
};

/// sphere-d6, rosenbrock-d2, mixed-step-d3.
std::vector<std::string> benchmark_ids();
/// Throws UnknownBenchmark.
const Benchmark& benchmark(const std::string& id);

/// Evaluates benchmark `id` at a raw assignment of its space.
Evaluation eval_synthetic(const std::string& id, const RawAssignment& raw);
/// Decodes `x` in the benchmark's space first.
Evaluation eval_synthetic(const std::string& id, std::span<const double> x);

class SyntheticEvaluator final : public Evaluator {
 public:
  explicit SyntheticEvaluator(std::string id);
  Evaluation evaluate(const RawAssignment& raw, std::size_t index) override;
  std::vector<std::string> metric_names() const override { return {"value"}; }
  const Benchmark& info() const { return *benchmark_; }

 private:
  const Benchmark* benchmark_;
};

// ---------------------------------------------------------------------------
// Synthetic PPA response surface over the six-parameter tool space.
//
// With clock tightness t = 2 - clock_period, delay-budget tightness
// m = (0.5 - max_delay) / 0.4, load l = (pin_load - 0.002) / 0.004,
// output budget o = (output_delay - 0.1) / 0.4, utilization
// u = (core_utilization - 0.5) / 0.5 and aspect ratio r:
//
//   delay  = 320 + 45(1-t) + 20(1-m) + 15 l + 10 o (1 - t/2)
//            + 60 exp(-(1 - core_utilization) / 0.03) + 5 (r - 1)
//   energy = 5600 + 1400 t + 600 t^2 + 500 m + 900 l + 300 o
//            + 400 (1 - u) + 80 (r - 1)
//   area   = 1650 + 350 t + 250 m + 150 t m + 120 l + 60 o
//            + 700 (1 - u) + 40 (r - 1)
//
// Tightening timing lowers delay and raises energy and area; utilization
// shrinks area and energy until the congestion cliff in delay near 1.0.
// Noise is Gaussian with standard deviation 0.5% of each nominal value.

struct PpaSurfaceOptions {
  bool noise = true;
  std::uint64_t seed = 0;
};

constexpr double kPpaNoiseFraction = 0.005;

/// Nominal (noise-free) metrics at a raw Table-I assignment.
MetricVector ppa_nominal(const RawAssignment& raw);
/// Noise is seeded by (raw values, seed), so equal inputs give equal outputs.
Evaluation eval_ppa_surface(const RawAssignment& raw, const PpaSurfaceOptions& options);
Evaluation eval_ppa_surface(std::span<const double> x, const PpaSurfaceOptions& options);

class PpaSurfaceEvaluator final : public Evaluator {
 public:
  explicit PpaSurfaceEvaluator(PpaSurfaceOptions options = {}) : options_(options) {}
  Evaluation evaluate(const RawAssignment& raw, std::size_t index) override;
  std::vector<std::string> metric_names() const override { return {"area", "energy", "delay"}; }
  const PpaSurfaceOptions& options() const { return options_; }

 private:
  PpaSurfaceOptions options_;
};

// ---------------------------------------------------------------------------
// External command

struct ParseRule {
  std::string metric;
  /// A line matches when, after left-trim, it starts with this prefix; the
  /// first numeric token after the prefix is the value.
  std::string prefix;
};

struct ScriptTemplate {
  std::string text;
  std::vector<ParseRule> rules;
};

/// Names of the `{{name}}` placeholders in order of first appearance.
std::vector<std::string> placeholders(const std::string& text);

/// Checks placeholders against the space and that every metric has a rule.
/// Throws UnresolvedPlaceholder / UnknownMetric.
void validate_template(const ScriptTemplate& tmpl, const ParameterSpace& space,
                       const std::vector<std::string>& required_metrics);

/// Formats integral values bare and others with 6 significant digits.
std::string format_value(double value);

/// Substitutes every `{{name}}`. Throws UnresolvedPlaceholder.
std::string render_script(const ScriptTemplate& tmpl, const RawAssignment& raw);
std::string render_text(const std::string& text, const RawAssignment& raw);

/// Applies `rules` to `output` line by line; first match per metric wins.
/// Returns nullopt and sets `missing` when a metric is not found.
std::optional<MetricVector> parse_metrics(const std::string& output, const std::vector<ParseRule>& rules,
                                          std::string* missing = nullptr);

constexpr double kDefaultTimeoutSeconds = 3600.0;

/// Writes script.gen into `workdir`, runs `command` there with stdout/stderr
/// captured to stdout.log / stderr.log, and parses stdout. In `command`,
/// `{{script}}` and `{{workdir}}` expand to absolute paths. Never throws for
/// tool failures: nonzero exit, spawn errors, timeouts and missing metrics
/// come back as failed evaluations.
Evaluation eval_external(const ScriptTemplate& tmpl, const std::vector<std::string>& command,
                         const std::filesystem::path& workdir, double timeout_seconds,
                         const RawAssignment& raw);

class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(ScriptTemplate tmpl, std::vector<std::string> command, std::filesystem::path workdir,
                    double timeout_seconds = kDefaultTimeoutSeconds);
  /// Runs inside `workdir / iter_<index>`.
  Evaluation evaluate(const RawAssignment& raw, std::size_t index) override;
  std::vector<std::string> metric_names() const override;
  bool deterministic() const override { return false; }

 private:
  ScriptTemplate tmpl_;
  std::vector<std::string> command_;
  std::filesystem::path workdir_;
  double timeout_;
};

}  // namespace bodse
