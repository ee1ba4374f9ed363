#include "bodse/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

namespace {

double span_of(const ParamDef& p) { return p.upper - p.lower; }

double decode_coordinate(const ParamDef& p, double coord) {
  coord = std::clamp(coord, 0.0, 1.0);
  const double raw = p.lower + coord * span_of(p);
  if (p.kind == ParamKind::integer) {
    // std::round rounds halfway cases away from zero.
    return std::clamp(std::round(raw), p.lower, p.upper);
  }
  return std::clamp(raw, p.lower, p.upper);
}

}  // namespace

const char* to_string(ParamKind kind) {
  return kind == ParamKind::integer ? "integer" : "continuous";
}

ParamKind param_kind_from_string(const std::string& s) {
  if (s == "continuous") return ParamKind::continuous;
  if (s == "integer") return ParamKind::integer;
  throw InvalidSpace("unknown parameter kind '" + s + "' (expected continuous|integer)");
}

ParameterSpace::ParameterSpace(std::vector<ParamDef> params) : params_(std::move(params)) {
  if (params_.empty()) throw InvalidSpace("parameter space must have at least one parameter");
  std::set<std::string> seen;
  for (const auto& p : params_) {
    if (p.name.empty()) throw InvalidSpace("parameter name must be nonempty");
    if (!seen.insert(p.name).second) throw InvalidSpace("duplicate parameter name '" + p.name + "'");
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper))
      throw InvalidSpace("bounds of '" + p.name + "' must be finite");
    if (p.kind == ParamKind::continuous) {
      if (!(p.lower < p.upper))
        throw InvalidSpace("continuous parameter '" + p.name + "' needs min < max");
    } else {
      if (!(p.lower <= p.upper))
        throw InvalidSpace("integer parameter '" + p.name + "' needs min <= max");
      if (std::floor(p.lower) != p.lower || std::floor(p.upper) != p.upper)
        throw InvalidSpace("integer parameter '" + p.name + "' needs integral bounds");
    }
  }
}

ParameterSpace ParameterSpace::table1() {
  return ParameterSpace({
      {"max_delay", ParamKind::continuous, 0.1, 0.5},
      {"clock_period", ParamKind::continuous, 1.0, 2.0},
      {"pin_load", ParamKind::continuous, 0.002, 0.006},
      {"output_delay", ParamKind::continuous, 0.1, 0.5},
      {"core_utilization", ParamKind::continuous, 0.5, 1.0},
      {"core_aspect_ratio", ParamKind::integer, 1.0, 3.0},
  });
}

std::size_t ParameterSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw UnknownParam("unknown parameter '" + name + "'");
}

ParamVector ParameterSpace::encode(const RawAssignment& raw) const {
  for (const auto& [name, value] : raw) index_of(name);
  ParamVector v(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const auto it = raw.find(p.name);
    if (it == raw.end()) throw UnknownParam("missing value for parameter '" + p.name + "'");
    const double value = it->second;
    if (!(value >= p.lower && value <= p.upper))
      throw OutOfBounds("value " + std::to_string(value) + " of '" + p.name + "' outside [" +
                        std::to_string(p.lower) + ", " + std::to_string(p.upper) + "]");
    if (p.kind == ParamKind::integer && std::floor(value) != value)
      throw NonIntegralValue("integer parameter '" + p.name + "' given " + std::to_string(value));
    v[i] = span_of(p) > 0.0 ? (value - p.lower) / span_of(p) : 0.0;
  }
  return v;
}

std::vector<double> ParameterSpace::decode_values(std::span<const double> v) const {
  if (v.size() != params_.size())
    throw DimensionMismatch("vector has " + std::to_string(v.size()) + " coordinates, space has " +
                            std::to_string(params_.size()));
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = decode_coordinate(params_[i], v[i]);
  return out;
}

RawAssignment ParameterSpace::decode(std::span<const double> v) const {
  return from_ordered(decode_values(v));
}

std::vector<double> ParameterSpace::ordered_values(const RawAssignment& raw) const {
  std::vector<double> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    const auto it = raw.find(p.name);
    if (it == raw.end()) throw UnknownParam("missing value for parameter '" + p.name + "'");
    out.push_back(it->second);
  }
  return out;
}

RawAssignment ParameterSpace::from_ordered(std::span<const double> values) const {
  if (values.size() != params_.size()) throw DimensionMismatch("value count does not match space");
  RawAssignment raw;
  for (std::size_t i = 0; i < values.size(); ++i) raw.emplace(params_[i].name, values[i]);
  return raw;
}

ParamVector ParameterSpace::snap(std::span<const double> v) const {
  const auto values = decode_values(v);
  ParamVector out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& p = params_[i];
    out[i] = span_of(p) > 0.0 ? (values[i] - p.lower) / span_of(p) : 0.0;
  }
  return out;
}

std::vector<ParamVector> ParameterSpace::sample_uniform(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw std::invalid_argument("sample_uniform needs n >= 1");
  Rng rng(seed);
  std::vector<ParamVector> out(n, ParamVector(params_.size()));
  for (auto& v : out)
    for (auto& c : v) c = rng.uniform();
  return out;
}

std::vector<ParamVector> ParameterSpace::grid(std::size_t points_per_dim, std::size_t cap) const {
  if (points_per_dim < 2) throw std::invalid_argument("grid needs points_per_dim >= 2");
  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (const auto& p : params_) {
    std::vector<double> axis;
    if (p.kind == ParamKind::integer) {
      const double range = span_of(p);
      for (double value = p.lower; value <= p.upper; value += 1.0)
        axis.push_back(range > 0.0 ? (value - p.lower) / range : 0.0);
    } else {
      for (std::size_t k = 0; k < points_per_dim; ++k)
        axis.push_back(static_cast<double>(k) / static_cast<double>(points_per_dim - 1));
    }
    if (total > cap / axis.size())
      throw GridTooLarge("grid would exceed " + std::to_string(cap) + " points");
    total *= axis.size();
    axes.push_back(std::move(axis));
  }

  std::vector<ParamVector> points;
  points.reserve(total);
  std::vector<std::size_t> counter(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    ParamVector v(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) v[i] = axes[i][counter[i]];
    points.push_back(std::move(v));
    // Last dimension varies fastest.
    for (std::size_t i = axes.size(); i-- > 0;) {
      if (++counter[i] < axes[i].size()) break;
      counter[i] = 0;
    }
  }
  return points;
}

bool ParameterSpace::operator==(const ParameterSpace& other) const {
  if (dim() != other.dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.kind != b.kind || a.lower != b.lower || a.upper != b.upper) return false;
  }
  return true;
}

}  // namespace bodse
