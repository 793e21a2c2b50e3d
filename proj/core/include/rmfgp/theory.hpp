#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"
#include "rmfgp/estimation.hpp"
#include "rmfgp/simulation.hpp"

namespace rmfgp {

/// Conditional score for rho: (t - rho x)^T Omega^{-1} x, with x the smoothed LF regressor.
double score_rho(const ConditionalRegression& reg, double rho);
double score_rho(const FidelityDataset& data, const ModelParams& theta);

/// Estimate of rho from the conditional regression in which LF rows carry the
/// weights of the Huber posterior mode (threshold c in noise standard
/// deviations), so the smoothed regressor uses noise tau_L^2 / w_i. Weights and
/// rho are alternated to a fixed point starting from the GLS estimate; every
/// other parameter stays at theta.
struct RobustRho {
  double rho = 0.0;
  int n_iter = 0;
  bool converged = false;
  Eigen::VectorXd lf_weights;
};

RobustRho huber_weighted_rho(const FidelityDataset& data, const ModelParams& theta, double c = 1.345,
                             int max_iter = 30, double tol = 1e-9);

struct PseudoTrueRho {
  double rho_star = 0.0;
  double kappa = 1.0;
};

/// Limit of the Gaussian rho estimate when LF observations carry extra noise
/// with covariance sigma_u: kappa = tr(M C_L) / tr(M (C_L + Sigma_u)), M = B^T Omega^{-1} B.
PseudoTrueRho pseudo_true_rho(const Eigen::MatrixXd& c_l, const Eigen::MatrixXd& sigma_u,
                              const Eigen::MatrixXd& b, const Eigen::MatrixXd& omega, double rho);

enum class EstimatorKind { gaussian, huber };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view text);

/// Sensitivity of the rho estimate to contamination of growing size. `score`
/// is the raw rho score at theta on the contaminated sample (conditional score
/// for gaussian, derivative of the robust objective for huber). `one_step` is
/// (rho_hat(contaminated) - rho_hat(clean)) / contaminated fraction, with rho
/// refitted alone and every other parameter held at theta.
struct InfluenceCurve {
  EstimatorKind kind = EstimatorKind::gaussian;
  std::vector<double> magnitudes;
  std::vector<double> score;
  std::vector<double> rho_hat;
  std::vector<double> one_step;
  std::vector<double> contaminated_fraction;
  /// Huber only: largest |psi| and largest ||psi| - delta| over saturated residuals.
  std::vector<double> max_abs_psi;
  std::vector<double> saturated_gap;
  std::vector<int> n_saturated;
  double delta = 0.0;
  double rho_clean = 0.0;
};

/// `base` supplies kind, frequency, stations and seed; its magnitude is
/// replaced by each entry of `magnitudes`, which must be strictly increasing.
/// The Huber threshold is resolved once on the clean sample at theta.
InfluenceCurve influence_curve(const FidelityDataset& clean, const ModelParams& theta,
                               const ContaminationSpec& base, const std::vector<double>& magnitudes,
                               EstimatorKind kind, const HuberConfig& config = {});

enum class BoundRegime { general_whitening, fixed_whitening };

std::string_view to_string(BoundRegime regime);
BoundRegime parse_regime(std::string_view text);

/// Empirical constants of the compactness argument, from random parameters in
/// a +-50% log box around theta.
struct LipschitzEstimates {
  double L_W = 0.0;      // ||W(a) - W(b)|| / ||a - b||
  double L_mu = 0.0;     // ||mu_H(a) - mu_H(b)|| / ||a - b||
  double kappa_W = 0.0;  // sup ||W||
  double R = 0.0;        // sup ||y_H - mu_H||
  int n_samples = 0;
};

struct BoundReport {
  BoundRegime regime = BoundRegime::general_whitening;
  double delta = 0.0;
  double C_delta = 0.0;
  double J_inv_norm = 0.0;
  double sum_g_norms = 0.0;
  /// ||J^{-1} sum_i psi(z_i) g_i|| on the sample the bound is evaluated on.
  double empirical_influence = 0.0;
  int n_params = 0;
  LipschitzEstimates lipschitz;
};

/// Bound on the one-step influence of the Huber terms of the robust fit.
///
/// general_whitening: J is the finite-difference Hessian of robust_objective
/// over all covariance parameters at theta on `clean`; g_i are the rows of the
/// Jacobian of the whitened innovations on `sample`; C = ||J^{-1}|| delta sum ||g_i||.
///
/// fixed_whitening: the HF marginal whitening is frozen at theta and only rho
/// moves; C = ||J^{-1}|| delta sqrt(n_H) ||W|| ||d mu_H / d rho||_F.
///
/// J is taken at `curvature_delta` when given (so C is linear in delta for a
/// fixed J) and at delta otherwise. Throws NumericalError when J is singular.
BoundReport huber_influence_bound(const FidelityDataset& clean, const FidelityDataset& sample,
                                  const ModelParams& theta, const HuberConfig& config,
                                  BoundRegime regime, double delta, int lipschitz_samples = 16,
                                  std::uint64_t seed = 1, std::optional<double> curvature_delta = std::nullopt);

void write_influence_csv(const InfluenceCurve& curve, const std::string& path);
void write_bound_csv(const std::vector<BoundReport>& reports, const std::vector<double>& magnitudes,
                     const std::string& path);

}  // namespace rmfgp
