#pragma once

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"

namespace rmfgp {

enum class DeltaPolicy { fixed_from_init, recompute_per_iteration };

struct HuberConfig {
  double c_multiplier = 1.345;
  double mad_consistency = 0.6745;
  WhiteningMode whitening = WhiteningMode::full();
  DeltaPolicy delta_policy = DeltaPolicy::fixed_from_init;
  double delta_floor = 1e-6;

  void validate() const;
};

/// 0.5 r^2 inside |r| <= delta, delta (|r| - delta / 2) outside.
double huber_loss(double r, double delta);

/// Derivative of huber_loss: r clipped to [-delta, delta]. Saturated values are exactly +-delta.
double huber_psi(double r, double delta);

/// Sum of huber_loss over a vector.
double huber_sum(const Eigen::VectorXd& r, double delta);

/// median(|r|) / consistency. Throws on an empty vector.
double mad_scale(const Eigen::VectorXd& residuals, double consistency = 0.6745);

/// c * mad_scale(whitened), clamped below at delta_floor.
double resolve_delta(const Eigen::VectorXd& whitened, const HuberConfig& config);

/// E[psi(Z) Z] for standard normal Z, which equals P(|Z| <= delta).
double huber_consistency(double delta);

/// 0.5 log|Sigma| + 0.5 (y - mu)^T Sigma^{-1} (y - mu) of the joint model.
double gaussian_nll(const ModelParams& theta, const FidelityDataset& data);

/// LF-marginal Gaussian negative log-likelihood (same convention as gaussian_nll).
double identifiability_penalty(const ModelParams& theta, const FidelityDataset& data);

/// Pieces of the conditional regression of HF on smoothed LF used by the
/// closed-form estimator of rho: regressor x = mu_L + B r_L, target y_H - mu_delta,
/// and the Cholesky factor of Omega = K_delta + tau_H^2 I.
struct ConditionalRegression {
  Eigen::VectorXd target;
  Eigen::VectorXd regressor;
  JitteredCholesky omega;
};

ConditionalRegression conditional_regression(const FidelityDataset& data, const ModelParams& theta);

/// Generalized least squares estimate of rho with every other parameter fixed.
/// Throws InvalidArgument if the regressor has zero Omega-norm.
double gls_rho(const FidelityDataset& data, const ModelParams& fixed);
double gls_rho(const ConditionalRegression& reg);

/// 0.5 (t - rho x)^T Omega^{-1} (t - rho x) + 0.5 log|Omega| for the given rho.
double conditional_gaussian_nll(const ConditionalRegression& reg, double rho);

/// Sum of Huber losses of the whitened marginal HF residual W^{1/2} (y_H - mu_H).
double huber_objective(const ModelParams& theta, const FidelityDataset& data,
                       const HuberConfig& config, double delta);

/// Objective minimized by the robust fit: Huber losses of the whitened
/// innovations of p(y_H) p(y_L | y_H), plus the whitening normalizer scaled by
/// huber_consistency(delta). Reduces to gaussian_nll for full whitening as delta grows.
double robust_objective(const ModelParams& theta, const FidelityDataset& data,
                        const HuberConfig& config, double delta);

}  // namespace rmfgp
