#include "bodse/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bodse/error.hpp"

namespace bodse {

const char* to_string(ObjectiveMode mode) { return mode == ObjectiveMode::single ? "single" : "scalarized"; }

const char* to_string(Scaling scaling) {
  switch (scaling) {
    case Scaling::none: return "none";
    case Scaling::scale_up: return "scale_up";
    case Scaling::scale_down: return "scale_down";
  }
  return "?";
}

ObjectiveMode objective_mode_from_string(const std::string& s) {
  if (s == "single") return ObjectiveMode::single;
  if (s == "scalarized") return ObjectiveMode::scalarized;
  throw InvalidConfig("unknown objective mode '" + s + "' (expected single|scalarized)");
}

Scaling scaling_from_string(const std::string& s) {
  if (s == "none") return Scaling::none;
  if (s == "scale_up") return Scaling::scale_up;
  if (s == "scale_down") return Scaling::scale_down;
  throw InvalidConfig("unknown scaling '" + s + "' (expected none|scale_up|scale_down)");
}

ObjectiveSpec ObjectiveSpec::single_metric(std::string name) {
  ObjectiveSpec spec;
  spec.mode = ObjectiveMode::single;
  spec.metric = std::move(name);
  return spec;
}

ObjectiveSpec ObjectiveSpec::scalarized(double alpha1, double alpha2, Scaling scaling) {
  ObjectiveSpec spec;
  spec.alpha1 = alpha1;
  spec.alpha2 = alpha2;
  spec.scaling = scaling;
  return spec;
}

std::vector<std::string> ObjectiveSpec::used_metrics() const {
  if (mode == ObjectiveMode::single) return {metric};
  return {metrics.begin(), metrics.end()};
}

namespace {

double metric_of(const MetricVector& metrics, const std::string& name) {
  const auto it = metrics.find(name);
  if (it == metrics.end()) throw UnknownMetric("metric '" + name + "' not present in evaluation");
  return it->second;
}

double unscaled_objective(const MetricVector& metrics, const ObjectiveSpec& spec) {
  ObjectiveSpec raw = spec;
  raw.scaling = Scaling::none;
  return objective_value(metrics, raw);
}

}  // namespace

MetricVector scale(const MetricVector& metrics, const ObjectiveSpec& spec) {
  if (spec.scaling == Scaling::none) return metrics;
  MetricVector out = metrics;
  for (const auto& name : spec.used_metrics()) {
    const auto it = out.find(name);
    if (it == out.end()) continue;
    const auto ref = spec.references.find(name);
    if (ref == spec.references.end()) throw MissingReference("no scaling reference for metric '" + name + "'");
    if (spec.scaling == Scaling::scale_down)
      it->second /= ref->second;
    else
      it->second *= ref->second;
  }
  return out;
}

double scalarize(const MetricVector& metrics, const ObjectiveSpec& spec) {
  if (spec.mode != ObjectiveMode::scalarized) throw ModeMismatch("scalarize needs a scalarized objective");
  const MetricVector scaled = scale(metrics, spec);
  return spec.alpha1 * metric_of(scaled, spec.metrics[0]) + spec.alpha2 * metric_of(scaled, spec.metrics[1]) +
         metric_of(scaled, spec.metrics[2]);
}

double single(const MetricVector& metrics, const ObjectiveSpec& spec) {
  if (spec.mode != ObjectiveMode::single) throw ModeMismatch("single needs a single-metric objective");
  metric_of(metrics, spec.metric);
  return metric_of(scale(metrics, spec), spec.metric);
}

double objective_value(const MetricVector& metrics, const ObjectiveSpec& spec) {
  return spec.mode == ObjectiveMode::single ? single(metrics, spec) : scalarize(metrics, spec);
}

std::map<std::string, double> resolve_references(const std::vector<MetricVector>& batch,
                                                 const ObjectiveSpec& spec) {
  std::map<std::string, double> refs = spec.references;
  if (spec.scaling == Scaling::none) return refs;
  const auto used = spec.used_metrics();
  const bool complete = std::all_of(used.begin(), used.end(), [&](const auto& m) { return refs.contains(m); });
  if (complete) return refs;
  if (batch.empty()) throw MissingReference("no evaluations available to derive scaling references");

  const MetricVector* best = nullptr;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& m : batch) {
    const double v = unscaled_objective(m, spec);
    if (!best || v < best_value) {
      best = &m;
      best_value = v;
    }
  }

  double largest = 0.0;
  for (const auto& name : used) largest = std::max(largest, std::abs(metric_of(*best, name)));
  for (const auto& name : used) {
    if (refs.contains(name)) continue;
    const double value = std::abs(metric_of(*best, name));
    if (!(value > 0.0)) throw MissingReference("cannot derive a reference for metric '" + name + "' from a zero value");
    refs[name] = spec.scaling == Scaling::scale_down ? value : largest / value;
  }
  return refs;
}

bool dominates(const MetricVector& a, const MetricVector& b) {
  bool strictly = false;
  for (const auto& [name, av] : a) {
    const double bv = metric_of(b, name);
    if (av > bv) return false;
    if (av < bv) strictly = true;
  }
  return strictly;
}

std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  for (const auto& p : points)
    if (p.metrics.size() != points.front().metrics.size())
      throw UnknownMetric("pareto_filter needs every point to carry the same metrics");

  // A dominator never has a larger metric sum (rounded addition is monotone),
  // so scanning in sum order only needs comparisons against the running front.
  std::vector<double> sums(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [name, v] : points[i].metrics) sums[i] += v;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sums[a] < sums[b]; });

  std::vector<std::size_t> front;
  for (const std::size_t i : order) {
    bool dominated = false;
    for (const std::size_t j : front) {
      if (dominates(points[j].metrics, points[i].metrics)) {
        dominated = true;
        break;
      }
    }
    if (dominated) continue;
    // Equal sums can hide a dominator that arrived earlier in the scan.
    std::erase_if(front, [&](std::size_t j) { return dominates(points[i].metrics, points[j].metrics); });
    front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  std::vector<ParetoPoint> out;
  out.reserve(front.size());
  for (const std::size_t i : front) out.push_back(points[i]);
  return out;
}

std::vector<ObjectiveSpec> weight_sweep(const std::vector<std::pair<double, double>>& weights,
                                        const ObjectiveSpec& base) {
  if (weights.empty()) throw EmptySweep("weight sweep needs at least one (alpha1, alpha2) pair");
  std::vector<ObjectiveSpec> specs;
  specs.reserve(weights.size());
  for (const auto& [a1, a2] : weights) {
    if (!(a1 >= 0.0) || !(a2 >= 0.0)) throw InvalidConfig("sweep weights must be nonnegative");
    ObjectiveSpec spec = base;
    spec.mode = ObjectiveMode::scalarized;
    spec.alpha1 = a1;
    spec.alpha2 = a2;
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace bodse
