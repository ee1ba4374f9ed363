#include "bodse/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

const char* to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::ucb: return "ucb";
    case AcquisitionKind::lcb: return "lcb";
    case AcquisitionKind::poi: return "poi";
    case AcquisitionKind::ei: return "ei";
  }
  return "?";
}

AcquisitionKind acquisition_kind_from_string(const std::string& s) {
  if (s == "ucb") return AcquisitionKind::ucb;
  if (s == "lcb") return AcquisitionKind::lcb;
  if (s == "poi") return AcquisitionKind::poi;
  if (s == "ei") return AcquisitionKind::ei;
  throw InvalidConfig("unknown acquisition kind '" + s + "' (expected lcb|ucb|poi|ei)");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double ucb(const Prediction& pred, double kappa) { return pred.mean + kappa * std::sqrt(pred.variance); }

double lcb(const Prediction& pred, double kappa) { return pred.mean - kappa * std::sqrt(pred.variance); }

double poi(const Prediction& pred, const Incumbent& incumbent, double zeta) {
  const double sigma = std::sqrt(pred.variance);
  const double threshold = incumbent.best_value - zeta;
  if (sigma > 0.0) return normal_cdf((threshold - pred.mean) / sigma);
  return pred.mean < threshold ? 1.0 : 0.0;
}

double ei(const Prediction& pred, const Incumbent& incumbent, double zeta) {
  const double sigma = std::sqrt(pred.variance);
  const double u = incumbent.best_value - pred.mean - zeta;
  if (sigma > 0.0) {
    const double z = u / sigma;
    return std::max(0.0, u * normal_cdf(z) + sigma * normal_pdf(z));
  }
  return std::max(0.0, u);
}

double acquisition_value(const AcquisitionSpec& spec, const Prediction& pred, const Incumbent& incumbent) {
  switch (spec.kind) {
    case AcquisitionKind::ucb: return ucb(pred, spec.kappa);
    case AcquisitionKind::lcb: return lcb(pred, spec.kappa);
    case AcquisitionKind::poi: return poi(pred, incumbent, spec.zeta);
    case AcquisitionKind::ei: return ei(pred, incumbent, spec.zeta);
  }
  return 0.0;
}

double desirability(const AcquisitionSpec& spec, const Prediction& pred, const Incumbent& incumbent) {
  const double v = acquisition_value(spec, pred, incumbent);
  return spec.kind == AcquisitionKind::lcb ? -v : v;
}

double default_zeta(std::span<const double> targets) {
  double sd = 0.0;
  if (targets.size() >= 2) {
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
    double ss = 0.0;
    for (double t : targets) ss += (t - mean) * (t - mean);
    sd = std::sqrt(ss / static_cast<double>(targets.size() - 1));
  }
  return 0.01 * std::max(sd, 1e-3);
}

namespace {

struct Candidate {
  ParamVector x;
  double score = 0.0;
};

class Scorer {
 public:
  Scorer(const Surrogate& surrogate, const AcquisitionSpec& spec, const Incumbent& incumbent)
      : surrogate_(surrogate), spec_(spec), incumbent_(incumbent) {}

  double operator()(std::span<const double> x) const {
    const double s = desirability(spec_, surrogate_.predict(x), incumbent_);
    return std::isfinite(s) ? s : -std::numeric_limits<double>::infinity();
  }

 private:
  const Surrogate& surrogate_;
  const AcquisitionSpec& spec_;
  const Incumbent& incumbent_;
};

// Golden-section maximization of score along coordinate i over [0, 1].
std::pair<double, double> line_maximize(const Scorer& score, ParamVector& x, std::size_t i, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  auto at = [&](double t) {
    x[i] = t;
    return score(x);
  };
  double a = 0.0, b = 1.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = at(c), fd = at(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = at(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

Candidate refine(const Scorer& score, Candidate start, const ProposeOptions& options) {
  ParamVector x = start.x;
  double best = start.score;
  for (std::size_t sweep = 0; sweep < options.sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double original = x[i];
      const auto [t, value] = line_maximize(score, x, i, options.coordinate_tolerance);
      if (value > best) {
        x[i] = t;
        best = value;
        moved = std::max(moved, std::abs(t - original));
      } else {
        x[i] = original;
      }
    }
    if (moved <= options.coordinate_tolerance) break;
  }
  return {std::move(x), best};
}

}  // namespace

Proposal propose(const Surrogate& surrogate, const AcquisitionSpec& spec, const Incumbent& incumbent,
                 const ParameterSpace& space, const History& history, std::uint64_t seed,
                 const ProposeOptions& options) {
  if (surrogate.model().dim() != space.dim())
    throw DimensionMismatch("surrogate dimension does not match the parameter space");
  const Scorer score(surrogate, spec, incumbent);

  const auto starts = space.sample_uniform(std::max<std::size_t>(options.random_starts, 1),
                                           derive_seed(seed, 0xac01));
  std::vector<Candidate> scored;
  scored.reserve(starts.size());
  for (const auto& x : starts) scored.push_back({x, score(x)});
  // Stable so equal scores keep sample order.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  const std::size_t n_refine = std::min(options.refined_starts, scored.size());
  std::vector<Candidate> refined;
  refined.reserve(n_refine);
  for (std::size_t i = 0; i < n_refine; ++i) refined.push_back(refine(score, scored[i], options));
  std::stable_sort(refined.begin(), refined.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  auto finish = [&](const ParamVector& x, bool perturbed) {
    return Proposal{x, acquisition_value(spec, surrogate.predict(x), incumbent), perturbed};
  };

  for (const auto& c : refined)
    if (!history.contains(space.decode_values(c.x))) return finish(c.x, false);

  Rng rng(derive_seed(seed, 0xac02));
  const ParamVector& best = refined.front().x;
  for (std::size_t t = 0; t < options.perturbation_tries; ++t) {
    ParamVector x = best;
    for (auto& c : x) c = std::clamp(c + rng.uniform(-options.perturbation, options.perturbation), 0.0, 1.0);
    if (!history.contains(space.decode_values(x))) return finish(x, true);
  }

  // Integer lattices can be small enough to run out near the optimum; fall
  // back to the best unevaluated lattice point anywhere in the space.
  const bool all_integer = std::all_of(space.params().begin(), space.params().end(),
                                       [](const ParamDef& p) { return p.kind == ParamKind::integer; });
  if (all_integer) {
    std::vector<ParamVector> lattice;
    try {
      lattice = space.grid(2);
    } catch (const GridTooLarge&) {
    }
    std::optional<Candidate> best_free;
    for (auto& x : lattice) {
      if (history.contains(space.decode_values(x))) continue;
      const double s = score(x);
      if (!best_free || s > best_free->score) best_free = Candidate{std::move(x), s};
    }
    if (best_free) return finish(best_free->x, true);
  }
  throw SpaceExhausted("no unevaluated point found near the acquisition optimum");
}

}  // namespace bodse
