#pragma once

#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "rmfgp/dataset.hpp"
#include "rmfgp/kernels.hpp"

namespace rmfgp {

/// Full parameter set of the autoregressive two-fidelity model
/// f_H = rho * f_L + delta, with Gaussian noise on each fidelity.
struct ModelParams {
  double rho = 0.0;
  KernelParams kernel_L;
  KernelParams kernel_delta;
  double tau_L_sq = 0.0;
  double tau_H_sq = 0.0;
  double mu_L = 0.0;
  double mu_delta = 0.0;

  void validate() const;
  /// Mean of the HF process, rho * mu_L + mu_delta.
  double mu_H() const { return rho * mu_L + mu_delta; }
};

/// Cholesky factor of M + jitter * I for the smallest jitter on the ladder that works.
class JitteredCholesky {
 public:
  JitteredCholesky() = default;
  JitteredCholesky(Eigen::LLT<Eigen::MatrixXd> llt, double jitter)
      : llt_(std::move(llt)), jitter_(jitter) {}

  double jitter() const { return jitter_; }
  Eigen::Index size() const { return llt_.rows(); }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

  double log_det() const;
  /// L^{-1} v
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& m) const;
  /// (M + jitter I)^{-1} v
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return llt_.solve(v); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& m) const { return llt_.solve(m); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// Tries jitter 0, eps0, 10 eps0, ... up to 10^escalations * eps0 and returns the
/// first successful factorization. Throws NumericalError when all fail.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& m, double eps0 = 1e-8,
                                   int escalations = 6);

struct CovarianceBlocks {
  Eigen::MatrixXd K_LL;     // LF kernel, LF x LF, noise free
  Eigen::MatrixXd K_delta;  // discrepancy kernel, HF x HF, noise free
  Eigen::MatrixXd K_LL_HH;  // LF kernel, HF x HF
  Eigen::MatrixXd K_LH;     // LF kernel, LF x HF
  Eigen::MatrixXd Sigma;    // joint covariance of [y_L; y_H] including noise
  Eigen::MatrixXd B;        // K_LL(x_H, x_L) Sigma_LL^{-1}
  Eigen::MatrixXd Omega;    // K_delta + tau_H^2 I
  double jitter = 0.0;      // jitter that made Sigma factorizable

  Eigen::Index n_lf() const { return K_LL.rows(); }
  Eigen::Index n_hf() const { return K_delta.rows(); }
  Eigen::MatrixXd sigma_LL() const { return Sigma.topLeftCorner(n_lf(), n_lf()); }
  Eigen::MatrixXd sigma_HH() const { return Sigma.bottomRightCorner(n_hf(), n_hf()); }
};

CovarianceBlocks assemble_joint(const FidelityDataset& data, const ModelParams& theta);

struct WhiteningMode {
  enum class Variant { diagonal, full, regularized };
  Variant variant = Variant::diagonal;
  double lambda = 0.0;

  static WhiteningMode diagonal() { return {Variant::diagonal, 0.0}; }
  static WhiteningMode full() { return {Variant::full, 0.0}; }
  static WhiteningMode regularized(double lambda) { return {Variant::regularized, lambda}; }

  void validate() const;
  /// "diag", "full" or "reg:<lambda>"
  std::string to_string() const;
  static WhiteningMode parse(std::string_view text);
};

/// Whitening root T of the marginal HF block, so that T^T T approximates its inverse.
Eigen::MatrixXd whitening_root(const CovarianceBlocks& blocks, const WhiteningMode& mode);

/// Whitening root of an arbitrary covariance matrix.
Eigen::MatrixXd whitening_root(const Eigen::MatrixXd& sigma, const WhiteningMode& mode);

}  // namespace rmfgp
