#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bodse {

enum class ParamKind { continuous, integer };

struct ParamDef {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
};

/// Normalized point in the unit cube, one coordinate per parameter.
using ParamVector = std::vector<double>;

/// Raw parameter values keyed by name.
using RawAssignment = std::map<std::string, double>;

/// Bounded mixed continuous/integer design space. Immutable once built;
/// iteration order is definition order.
class ParameterSpace {
 public:
  static constexpr std::size_t kDefaultGridCap = 1'000'000;

  /// Throws InvalidSpace when a definition violates its invariants.
  explicit ParameterSpace(std::vector<ParamDef> params);

  /// The six tool parameters of the logic-synthesis / physical-design flow:
  /// max_delay, clock_period, pin_load, output_delay, core_utilization,
  /// core_aspect_ratio.
  static ParameterSpace table1();

  std::size_t dim() const { return params_.size(); }
  const std::vector<ParamDef>& params() const { return params_; }
  const ParamDef& param(std::size_t i) const { return params_.at(i); }
  /// Index of `name`, or throws UnknownParam.
  std::size_t index_of(const std::string& name) const;

  ParamVector encode(const RawAssignment& raw) const;
  RawAssignment decode(std::span<const double> v) const;

  /// Raw values in definition order; the canonical key used for dedup.
  std::vector<double> decode_values(std::span<const double> v) const;
  std::vector<double> ordered_values(const RawAssignment& raw) const;
  RawAssignment from_ordered(std::span<const double> values) const;

  /// Decodes then re-encodes, snapping integer coordinates onto their lattice.
  ParamVector snap(std::span<const double> v) const;

  std::vector<ParamVector> sample_uniform(std::size_t n, std::uint64_t seed) const;

  /// Full Cartesian grid. Continuous dims get `points_per_dim` evenly spaced
  /// coordinates including both ends; integer dims enumerate every integral
  /// value. Throws GridTooLarge when the point count exceeds `cap`.
  std::vector<ParamVector> grid(std::size_t points_per_dim,
                                std::size_t cap = kDefaultGridCap) const;

  bool operator==(const ParameterSpace& other) const;

 private:
  std::vector<ParamDef> params_;
};

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

/// Free-function forms of the space operations.
inline ParamVector encode(const ParameterSpace& space, const RawAssignment& raw) {
  return space.encode(raw);
}
inline RawAssignment decode(const ParameterSpace& space, std::span<const double> v) {
  return space.decode(v);
}

}  // namespace bodse
