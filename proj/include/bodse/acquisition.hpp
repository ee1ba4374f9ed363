#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bodse/gp.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

enum class AcquisitionKind { ucb, lcb, poi, ei };

const char* to_string(AcquisitionKind kind);
AcquisitionKind acquisition_kind_from_string(const std::string& s);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::lcb;
  double kappa = 2.0;  // UCB / LCB
  double zeta = 0.01;  // POI / EI
};

/// Best (minimal) objective value observed so far.
struct Incumbent {
  double best_value = 0.0;
};

double normal_cdf(double z);
double normal_pdf(double z);

double ucb(const Prediction& pred, double kappa);
double lcb(const Prediction& pred, double kappa);
/// P(f(x) <= f* - zeta) under the predictive normal.
double poi(const Prediction& pred, const Incumbent& incumbent, double zeta);
/// E[max(0, f* - f(x) - zeta)] under the predictive normal.
double ei(const Prediction& pred, const Incumbent& incumbent, double zeta);

/// Value of the acquisition named by `spec`, as defined (LCB is not negated).
double acquisition_value(const AcquisitionSpec& spec, const Prediction& pred, const Incumbent& incumbent);

/// Score to maximize: the acquisition value, negated for LCB.
double desirability(const AcquisitionSpec& spec, const Prediction& pred, const Incumbent& incumbent);

/// 0.01 * max(std(targets), 1e-3); sample standard deviation, 0 for n < 2.
double default_zeta(std::span<const double> targets);

/// Decoded raw values (definition order) of every evaluated point.
using History = std::set<std::vector<double>>;

struct ProposeOptions {
  std::size_t random_starts = 512;
  std::size_t refined_starts = 10;
  std::size_t sweeps = 50;
  double coordinate_tolerance = 1e-6;
  double perturbation = 0.05;
  std::size_t perturbation_tries = 20;
};

struct Proposal {
  ParamVector x;
  /// acquisition_value at x.
  double value = 0.0;
  /// True when dedup had to fall back to random perturbation.
  bool perturbed = false;
};

/// Maximizes desirability over the unit cube: seeded random starts, the best
/// few refined by coordinate-wise golden-section search. The returned point
/// decodes to an assignment not in `history`. Throws SpaceExhausted.
Proposal propose(const Surrogate& surrogate, const AcquisitionSpec& spec, const Incumbent& incumbent,
                 const ParameterSpace& space, const History& history, std::uint64_t seed,
                 const ProposeOptions& options = {});

}  // namespace bodse
