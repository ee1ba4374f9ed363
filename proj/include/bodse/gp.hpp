#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bodse {

/// Log-space hyperparameters of the ARD squared-exponential kernel.
struct KernelParams {
  double log_signal_variance = 0.0;
  std::vector<double> log_lengthscales;
  double log_noise_variance = std::log(1e-2);

  static KernelParams defaults(std::size_t dim);

  std::size_t dim() const { return log_lengthscales.size(); }
  double signal_variance() const { return std::exp(log_signal_variance); }
  double noise_variance() const { return std::exp(log_noise_variance); }

  /// Packed as [signal, lengthscales..., noise].
  Eigen::VectorXd pack() const;
  static KernelParams unpack(const Eigen::VectorXd& theta);

  bool operator==(const KernelParams&) const = default;
};

/// Box constraints on the log-hyperparameters during fitting.
struct HyperBounds {
  double log_lengthscale_min = std::log(1e-3);
  double log_lengthscale_max = std::log(1e3);
  double log_signal_min = std::log(1e-6);
  double log_signal_max = std::log(1e3);
  double log_noise_min = std::log(1e-8);
  double log_noise_max = std::log(1e1);

  Eigen::VectorXd lower(std::size_t dim) const;
  Eigen::VectorXd upper(std::size_t dim) const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// sigma_f^2 * exp(-1/2 sum_d (a_d - b_d)^2 / l_d^2)
double kernel(const KernelParams& params, std::span<const double> a, std::span<const double> b);

/// Exact GP regression with zero prior mean. Training inputs live in the
/// normalized unit cube; targets are used as given.
class GpModel {
 public:
  GpModel(std::size_t dim, KernelParams params);
  GpModel(Eigen::MatrixXd X, Eigen::VectorXd y, KernelParams params);

  /// Factorizes K + noise*I, escalating diagonal jitter from 1e-10 to 1e-4
  /// times the mean diagonal. Throws NotPositiveDefinite if all fail.
  void fit_cache();
  bool has_cache() const { return fitted_; }

  Prediction predict(std::span<const double> x) const;
  double log_marginal_likelihood() const;
  /// Gradient of the log marginal likelihood in packed log-parameter order.
  Eigen::VectorXd lml_gradient() const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const KernelParams& params() const { return params_; }
  /// Lower Cholesky factor of K + noise*I (+ jitter).
  const Eigen::MatrixXd& chol() const;
  const Eigen::VectorXd& alpha() const;
  double jitter() const { return jitter_; }

  /// K(X, X) + noise*I without jitter.
  Eigen::MatrixXd covariance() const;

 private:
  void require_cache() const;

  std::size_t dim_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelParams params_;
  bool fitted_ = false;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

/// Returns a copy of `model` with caches populated.
GpModel fit_cache(GpModel model);

struct FitOptions {
  std::size_t restarts = 5;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-6;
  HyperBounds bounds{};
};

/// Multi-start projected gradient ascent on the log marginal likelihood.
/// Start 0 is KernelParams::defaults; the others are drawn from a stream
/// derived from (seed, restart index). Throws AllStartsFailed.
GpModel fit_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        const FitOptions& options = {});

/// GP on standardized targets; predictions are returned in target units.
class Surrogate {
 public:
  /// Prior-only surrogate.
  explicit Surrogate(std::size_t dim);
  Surrogate(GpModel model, double target_mean, double target_scale);

  Prediction predict(std::span<const double> x) const;

  const GpModel& model() const { return model_; }
  double target_mean() const { return mean_; }
  double target_scale() const { return scale_; }

 private:
  GpModel model_;
  double mean_ = 0.0;
  double scale_ = 1.0;
};

/// Standardizes y (sample standard deviation; scale 1 when degenerate) and
/// fits hyperparameters on the result.
Surrogate fit_surrogate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                        const FitOptions& options = {});

}  // namespace bodse
