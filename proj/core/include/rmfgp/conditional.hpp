#pragma once

#include <optional>

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"

namespace rmfgp {

/// Whitened innovations of the joint model, factored as p(y_H) p(y_L | y_H).
/// `hf` whitens the marginal HF residual, `lf` the LF residual given HF.
struct WhitenedResiduals {
  Eigen::VectorXd hf;
  Eigen::VectorXd lf;
  /// -log|det T| summed over both blocks (half log-determinants for full whitening).
  double normalizer = 0.0;
  double jitter = 0.0;

  Eigen::VectorXd all() const;
};

/// Repeated objective evaluation on one dataset. Kernel Gram matrices and the
/// LF factorization are cached by the parameters they depend on, so perturbing
/// only HF-side parameters skips the LF work. Not thread safe; use one per task.
class ObjectiveEvaluator {
 public:
  explicit ObjectiveEvaluator(FidelityDataset data);

  const FidelityDataset& data() const { return data_; }

  /// Exact joint Gaussian negative log-likelihood without the 2*pi constant,
  /// computed through p(y_L) p(y_H | y_L).
  double gaussian_nll(const ModelParams& theta);

  /// LF-marginal part of gaussian_nll.
  double lf_marginal_nll(const ModelParams& theta);

  /// Innovations of p(y_H) p(y_L | y_H) under the given whitening. With full
  /// whitening, 0.5 |z|^2 + normalizer equals gaussian_nll.
  WhitenedResiduals whitened_residuals(const ModelParams& theta, const WhiteningMode& mode);

  /// Largest jitter used by the last evaluation.
  double last_jitter() const { return last_jitter_; }

 private:
  struct LfGrams {
    KernelParams key;
    Eigen::MatrixXd LL, LH, HH;
  };
  struct LfStage {
    KernelParams kernel;
    double tau_L_sq = 0.0;
    double mu_L = 0.0;
    JitteredCholesky chol;
    Eigen::VectorXd z;         // L^{-1} r_L
    Eigen::MatrixXd P;         // K_HH - K_HL Sigma_LL^{-1} K_LH
    Eigen::VectorXd b;         // K_HL Sigma_LL^{-1} r_L
  };

  const LfGrams& lf_grams(const KernelParams& k);
  const Eigen::MatrixXd& delta_gram(const KernelParams& k);
  const LfStage& lf_stage(const ModelParams& theta);

  FidelityDataset data_;
  std::optional<LfGrams> grams_;
  std::optional<std::pair<KernelParams, Eigen::MatrixXd>> delta_;
  std::optional<LfStage> stage_;
  double last_jitter_ = 0.0;
};

}  // namespace rmfgp
