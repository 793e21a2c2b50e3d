#include "rmfgp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rmfgp/conditional.hpp"
#include "rmfgp/error.hpp"

namespace rmfgp {

void HuberConfig::validate() const {
  if (!(c_multiplier > 0.0) || !std::isfinite(c_multiplier)) {
    throw InvalidArgument("Huber c multiplier must be positive");
  }
  if (!(mad_consistency > 0.0)) throw InvalidArgument("MAD consistency constant must be positive");
  if (!(delta_floor > 0.0)) throw InvalidArgument("delta floor must be positive");
  whitening.validate();
}

double huber_loss(double r, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber_loss: delta must be positive");
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_psi(double r, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber_psi: delta must be positive");
  return std::abs(r) <= delta ? r : std::copysign(delta, r);
}

double huber_sum(const Eigen::VectorXd& r, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber_sum: delta must be positive");
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    s += a <= delta ? 0.5 * r[i] * r[i] : delta * (a - 0.5 * delta);
  }
  return s;
}

double mad_scale(const Eigen::VectorXd& residuals, double consistency) {
  if (residuals.size() == 0) throw InvalidArgument("mad_scale: empty residual vector");
  std::vector<double> a(residuals.data(), residuals.data() + residuals.size());
  for (double& v : a) v = std::abs(v);
  const std::size_t n = a.size();
  const std::size_t mid = n / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  double med = a[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  return med / consistency;
}

double resolve_delta(const Eigen::VectorXd& whitened, const HuberConfig& config) {
  config.validate();
  const double s = mad_scale(whitened, config.mad_consistency);
  return std::max(config.c_multiplier * s, config.delta_floor);
}

double huber_consistency(double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber_consistency: delta must be positive");
  return std::erf(delta / std::sqrt(2.0));
}

double gaussian_nll(const ModelParams& theta, const FidelityDataset& data) {
  theta.validate();
  ObjectiveEvaluator ev(data);
  return ev.gaussian_nll(theta);
}

double identifiability_penalty(const ModelParams& theta, const FidelityDataset& data) {
  theta.validate();
  if (data.n_lf() == 0) throw InvalidArgument("identifiability_penalty: no LF data");
  data.validate();
  Eigen::MatrixXd s = separable_gram(data.lf_points, theta.kernel_L);
  s.diagonal().array() += theta.tau_L_sq;
  const JitteredCholesky c = jittered_cholesky(s);
  const Eigen::VectorXd z = c.whiten(Eigen::VectorXd(data.lf_values.array() - theta.mu_L));
  return 0.5 * (c.log_det() + z.squaredNorm());
}

ConditionalRegression conditional_regression(const FidelityDataset& data, const ModelParams& theta) {
  data.validate_nonempty();
  theta.validate();
  Eigen::MatrixXd sll = separable_gram(data.lf_points, theta.kernel_L);
  sll.diagonal().array() += theta.tau_L_sq;
  const JitteredCholesky cl = jittered_cholesky(sll);
  const Eigen::MatrixXd khl = separable_gram(data.hf_points, data.lf_points, theta.kernel_L);
  const Eigen::VectorXd rl = (data.lf_values.array() - theta.mu_L).matrix();

  Eigen::MatrixXd omega = separable_gram(data.hf_points, theta.kernel_delta);
  omega.diagonal().array() += theta.tau_H_sq;

  ConditionalRegression reg{
      (data.hf_values.array() - theta.mu_delta).matrix(),
      (khl * cl.solve(rl)).array() + theta.mu_L,
      jittered_cholesky(omega)};
  return reg;
}

double gls_rho(const ConditionalRegression& reg) {
  const Eigen::VectorXd wx = reg.omega.whiten(reg.regressor);
  const Eigen::VectorXd wt = reg.omega.whiten(reg.target);
  const double den = wx.squaredNorm();
  if (!(den > 0.0) || !std::isfinite(den)) {
    throw InvalidArgument("gls_rho: degenerate denominator (LF residual in the null space of B)");
  }
  return wx.dot(wt) / den;
}

double gls_rho(const FidelityDataset& data, const ModelParams& fixed) {
  return gls_rho(conditional_regression(data, fixed));
}

double conditional_gaussian_nll(const ConditionalRegression& reg, double rho) {
  const Eigen::VectorXd z = reg.omega.whiten(Eigen::VectorXd(reg.target - rho * reg.regressor));
  return 0.5 * (z.squaredNorm() + reg.omega.log_det());
}

double huber_objective(const ModelParams& theta, const FidelityDataset& data,
                       const HuberConfig& config, double delta) {
  config.validate();
  theta.validate();
  data.validate();
  if (data.n_hf() == 0) throw InvalidArgument("huber_objective: no HF data");
  Eigen::MatrixXd shh = theta.rho * theta.rho * separable_gram(data.hf_points, theta.kernel_L) +
                        separable_gram(data.hf_points, theta.kernel_delta);
  shh.diagonal().array() += theta.tau_H_sq;
  const Eigen::MatrixXd t = whitening_root(shh, config.whitening);
  const Eigen::VectorXd z = t * (data.hf_values.array() - theta.mu_H()).matrix();
  return huber_sum(z, delta);
}

double robust_objective(const ModelParams& theta, const FidelityDataset& data,
                        const HuberConfig& config, double delta) {
  config.validate();
  theta.validate();
  ObjectiveEvaluator ev(data);
  const WhitenedResiduals w = ev.whitened_residuals(theta, config.whitening);
  return huber_consistency(delta) * w.normalizer + huber_sum(w.hf, delta) + huber_sum(w.lf, delta);
}

}  // namespace rmfgp
