#include "bodse/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bodse/error.hpp"
#include "bodse/random.hpp"

namespace bodse {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Initialization ranges for random restarts (log space), narrower than the
// fitting bounds.
constexpr double kInitLogSignalLo = -2.302585092994046;  // log 0.1
constexpr double kInitLogSignalHi = 2.302585092994046;   // log 10
constexpr double kInitLogLengthLo = -2.995732273553991;  // log 0.05
constexpr double kInitLogLengthHi = 0.6931471805599453;  // log 2
constexpr double kInitLogNoiseLo = -13.815510557964274;  // log 1e-6
constexpr double kInitLogNoiseHi = -2.302585092994046;   // log 0.1

Eigen::MatrixXd signal_covariance(const Eigen::MatrixXd& X, const KernelParams& params) {
  const auto n = X.rows();
  const double sf2 = params.signal_variance();
  Eigen::VectorXd inv_l2(params.dim());
  for (std::size_t d = 0; d < params.dim(); ++d)
    inv_l2[d] = std::exp(-2.0 * params.log_lengthscales[d]);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = sf2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double diff = X(i, d) - X(j, d);
        r2 += diff * diff * inv_l2[d];
      }
      K(i, j) = K(j, i) = sf2 * std::exp(-0.5 * r2);
    }
  }
  return K;
}

}  // namespace

KernelParams KernelParams::defaults(std::size_t dim) {
  KernelParams p;
  p.log_signal_variance = 0.0;
  p.log_lengthscales.assign(dim, std::log(0.3));
  p.log_noise_variance = std::log(1e-2);
  return p;
}

Eigen::VectorXd KernelParams::pack() const {
  Eigen::VectorXd theta(dim() + 2);
  theta[0] = log_signal_variance;
  for (std::size_t d = 0; d < dim(); ++d) theta[static_cast<Eigen::Index>(d) + 1] = log_lengthscales[d];
  theta[theta.size() - 1] = log_noise_variance;
  return theta;
}

KernelParams KernelParams::unpack(const Eigen::VectorXd& theta) {
  if (theta.size() < 2) throw DimensionMismatch("packed kernel parameters need at least 2 entries");
  KernelParams p;
  p.log_signal_variance = theta[0];
  p.log_lengthscales.assign(theta.data() + 1, theta.data() + theta.size() - 1);
  p.log_noise_variance = theta[theta.size() - 1];
  return p;
}

Eigen::VectorXd HyperBounds::lower(std::size_t dim) const {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim) + 2, log_lengthscale_min);
  lo[0] = log_signal_min;
  lo[lo.size() - 1] = log_noise_min;
  return lo;
}

Eigen::VectorXd HyperBounds::upper(std::size_t dim) const {
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim) + 2, log_lengthscale_max);
  hi[0] = log_signal_max;
  hi[hi.size() - 1] = log_noise_max;
  return hi;
}

double kernel(const KernelParams& params, std::span<const double> a, std::span<const double> b) {
  if (a.size() != params.dim() || b.size() != params.dim())
    throw DimensionMismatch("kernel inputs must match the lengthscale dimension");
  double r2 = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    r2 += diff * diff * std::exp(-2.0 * params.log_lengthscales[d]);
  }
  return params.signal_variance() * std::exp(-0.5 * r2);
}

GpModel::GpModel(std::size_t dim, KernelParams params)
    : GpModel(Eigen::MatrixXd(0, static_cast<Eigen::Index>(dim)), Eigen::VectorXd(0), std::move(params)) {}

GpModel::GpModel(Eigen::MatrixXd X, Eigen::VectorXd y, KernelParams params)
    : dim_(static_cast<std::size_t>(X.cols())), X_(std::move(X)), y_(std::move(y)), params_(std::move(params)) {
  if (X_.rows() != y_.size()) throw DimensionMismatch("training inputs and targets differ in count");
  if (params_.dim() != dim_) throw DimensionMismatch("lengthscale count does not match input dimension");
}

Eigen::MatrixXd GpModel::covariance() const {
  Eigen::MatrixXd K = signal_covariance(X_, params_);
  K.diagonal().array() += params_.noise_variance();
  return K;
}

void GpModel::fit_cache() {
  const auto n = X_.rows();
  fitted_ = false;
  if (n == 0) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    jitter_ = 0.0;
    fitted_ = true;
    return;
  }
  const Eigen::MatrixXd K = covariance();
  const double mean_diag = K.diagonal().mean();
  double jitter = 0.0;
  double next = 1e-10 * mean_diag;
  const double last = 1e-4 * mean_diag * (1.0 + 1e-9);
  while (true) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      chol_ = llt.matrixL();
      alpha_ = llt.solve(y_);
      if (alpha_.allFinite()) {
        jitter_ = jitter;
        fitted_ = true;
        return;
      }
    }
    if (next > last || !std::isfinite(next)) break;
    jitter = next;
    next *= 10.0;
  }
  throw NotPositiveDefinite("covariance matrix not positive definite after jitter escalation");
}

GpModel fit_cache(GpModel model) {
  model.fit_cache();
  return model;
}

void GpModel::require_cache() const {
  if (!fitted_) throw CacheMissing("GP caches not fitted; call fit_cache first");
}

const Eigen::MatrixXd& GpModel::chol() const {
  require_cache();
  return chol_;
}

const Eigen::VectorXd& GpModel::alpha() const {
  require_cache();
  return alpha_;
}

Prediction GpModel::predict(std::span<const double> x) const {
  require_cache();
  if (x.size() != dim_) throw DimensionMismatch("query dimension does not match the model");
  const double prior = params_.signal_variance();
  const auto n = X_.rows();
  if (n == 0) return {0.0, prior};
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < X_.cols(); ++d) {
      const double diff = x[static_cast<std::size_t>(d)] - X_(i, d);
      r2 += diff * diff * std::exp(-2.0 * params_.log_lengthscales[static_cast<std::size_t>(d)]);
    }
    k[i] = prior * std::exp(-0.5 * r2);
  }
  const double mean = k.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double variance = std::max(0.0, prior - v.squaredNorm());
  return {mean, variance};
}

double GpModel::log_marginal_likelihood() const {
  require_cache();
  const auto n = X_.rows();
  if (n == 0) return 0.0;
  return -0.5 * y_.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::VectorXd GpModel::lml_gradient() const {
  require_cache();
  const auto n = X_.rows();
  if (n == 0) throw std::invalid_argument("lml_gradient needs at least one training point");
  const auto d = static_cast<Eigen::Index>(dim_);

  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
  chol_.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(Kinv);
  const Eigen::MatrixXd W = alpha_ * alpha_.transpose() - Kinv;
  const Eigen::MatrixXd Kf = signal_covariance(X_, params_);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 2);
  grad[0] = 0.5 * (W.array() * Kf.array()).sum();
  for (Eigen::Index dd = 0; dd < d; ++dd) {
    const double inv_l2 = std::exp(-2.0 * params_.log_lengthscales[static_cast<std::size_t>(dd)]);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = X_(i, dd) - X_(j, dd);
        acc += 2.0 * W(i, j) * Kf(i, j) * diff * diff * inv_l2;
      }
    }
    grad[dd + 1] = 0.5 * acc;
  }
  grad[d + 1] = 0.5 * params_.noise_variance() * W.trace();
  return grad;
}

namespace {

struct Evaluated {
  bool ok = false;
  double lml = -std::numeric_limits<double>::infinity();
  std::optional<GpModel> model;
};

Evaluated evaluate_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  Evaluated e;
  try {
    GpModel m(X, y, KernelParams::unpack(theta));
    m.fit_cache();
    const double lml = m.log_marginal_likelihood();
    if (!std::isfinite(lml)) return e;
    e.ok = true;
    e.lml = lml;
    e.model = std::move(m);
  } catch (const NotPositiveDefinite&) {
  }
  return e;
}

Eigen::VectorXd project(const Eigen::VectorXd& theta, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return theta.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components that point out of the box at an active bound zeroed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd g = grad;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if ((theta[i] <= lo[i] && g[i] < 0.0) || (theta[i] >= hi[i] && g[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

std::optional<GpModel> ascend(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd theta,
                              const FitOptions& options) {
  const std::size_t dim = static_cast<std::size_t>(X.cols());
  const Eigen::VectorXd lo = options.bounds.lower(dim);
  const Eigen::VectorXd hi = options.bounds.upper(dim);
  theta = project(theta, lo, hi);

  Evaluated current = evaluate_at(X, y, theta);
  if (!current.ok) return std::nullopt;

  double step = 0.1;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd grad = projected_gradient(current.model->lml_gradient(), theta, lo, hi);
    if (!grad.allFinite() || grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::VectorXd candidate = project(theta + step * grad, lo, hi);
      const double predicted_gain = grad.dot(candidate - theta);
      if (predicted_gain <= 0.0) break;
      Evaluated trial = evaluate_at(X, y, candidate);
      if (trial.ok && trial.lml >= current.lml + 1e-4 * predicted_gain) {
        theta = candidate;
        current = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 10.0);
  }
  return std::move(current.model);
}

}  // namespace

GpModel fit_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        const FitOptions& options) {
  if (X.rows() == 0) throw std::invalid_argument("fit_hyperparams needs at least one training point");
  if (X.rows() != y.size()) throw DimensionMismatch("training inputs and targets differ in count");
  if (options.restarts == 0) throw std::invalid_argument("fit_hyperparams needs restarts >= 1");
  const std::size_t dim = static_cast<std::size_t>(X.cols());

  std::optional<GpModel> best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd theta;
    if (r == 0) {
      theta = KernelParams::defaults(dim).pack();
    } else {
      Rng rng(derive_seed(seed, 0x6770, r));
      KernelParams p;
      p.log_signal_variance = rng.uniform(kInitLogSignalLo, kInitLogSignalHi);
      p.log_lengthscales.resize(dim);
      for (auto& l : p.log_lengthscales) l = rng.uniform(kInitLogLengthLo, kInitLogLengthHi);
      p.log_noise_variance = rng.uniform(kInitLogNoiseLo, kInitLogNoiseHi);
      theta = p.pack();
    }
    auto fitted = ascend(X, y, theta, options);
    if (!fitted) continue;
    if (!best || fitted->log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(fitted);
  }
  if (!best) throw AllStartsFailed("every hyperparameter restart failed to factorize");
  return std::move(*best);
}

Surrogate::Surrogate(std::size_t dim) : model_(fit_cache(GpModel(dim, KernelParams::defaults(dim)))) {}

Surrogate::Surrogate(GpModel model, double target_mean, double target_scale)
    : model_(std::move(model)), mean_(target_mean), scale_(target_scale) {
  if (!model_.has_cache()) model_.fit_cache();
}

Prediction Surrogate::predict(std::span<const double> x) const {
  const Prediction p = model_.predict(x);
  return {mean_ + scale_ * p.mean, scale_ * scale_ * p.variance};
}

Surrogate fit_surrogate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        const FitOptions& options) {
  const auto n = y.size();
  if (n == 0) throw std::invalid_argument("fit_surrogate needs at least one training point");
  const double mean = y.mean();
  double scale = 1.0;
  if (n >= 2) {
    const double var = (y.array() - mean).square().sum() / static_cast<double>(n - 1);
    if (var > 0.0 && std::isfinite(var)) scale = std::sqrt(var);
  }
  const Eigen::VectorXd z = (y.array() - mean) / scale;
  return Surrogate(fit_hyperparams(X, z, seed, options), mean, scale);
}

}  // namespace bodse
