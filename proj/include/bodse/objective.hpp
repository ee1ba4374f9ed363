#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bodse/param_space.hpp"

namespace bodse {

/// Named metric values (area in um^2, energy in fJ/op, delay in ps for the
/// default PPA set).
using MetricVector = std::map<std::string, double>;

enum class ObjectiveMode { single, scalarized };
enum class Scaling { none, scale_up, scale_down };

const char* to_string(ObjectiveMode mode);
const char* to_string(Scaling scaling);
ObjectiveMode objective_mode_from_string(const std::string& s);
Scaling scaling_from_string(const std::string& s);

struct ObjectiveSpec {
  ObjectiveMode mode = ObjectiveMode::scalarized;
  /// Metric optimized in single mode.
  std::string metric;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  /// Metrics weighted by alpha1, alpha2 and 1 respectively.
  std::array<std::string, 3> metrics{"area", "energy", "delay"};
  Scaling scaling = Scaling::none;
  /// Per-metric divisors (scale_down) or multipliers (scale_up).
  std::map<std::string, double> references;

  static ObjectiveSpec single_metric(std::string name);
  static ObjectiveSpec scalarized(double alpha1, double alpha2, Scaling scaling = Scaling::none);

  /// Metrics this objective reads.
  std::vector<std::string> used_metrics() const;
};

/// Applies the scaling strategy to every metric the objective reads; other
/// metrics pass through. Throws MissingReference.
MetricVector scale(const MetricVector& metrics, const ObjectiveSpec& spec);

/// alpha1 * m0' + alpha2 * m1' + m2' over scaled metrics. Throws ModeMismatch.
double scalarize(const MetricVector& metrics, const ObjectiveSpec& spec);

/// The scaled value of spec.metric. Throws UnknownMetric.
double single(const MetricVector& metrics, const ObjectiveSpec& spec);

/// Dispatches on spec.mode.
double objective_value(const MetricVector& metrics, const ObjectiveSpec& spec);

/// Fills references missing from spec.references from an initial batch:
/// the batch sample with the smallest unscaled objective supplies them.
/// scale_down uses that sample's metric values; scale_up uses
/// max_metric / metric so every metric is lifted to the largest magnitude.
std::map<std::string, double> resolve_references(const std::vector<MetricVector>& batch,
                                                 const ObjectiveSpec& spec);

struct ParetoPoint {
  RawAssignment params;
  MetricVector metrics;
};

/// a <= b in every metric and a < b in at least one.
bool dominates(const MetricVector& a, const MetricVector& b);

/// The nondominated subset under componentwise minimization, in input order.
std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points);

/// One scalarized spec per (alpha1, alpha2) pair, sharing `base`'s metric
/// names, scaling and references. Throws EmptySweep.
std::vector<ObjectiveSpec> weight_sweep(const std::vector<std::pair<double, double>>& weights,
                                        const ObjectiveSpec& base = {});

}  // namespace bodse
