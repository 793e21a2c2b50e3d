#include "rmfgp/conditional.hpp"

#include <cmath>

#include "rmfgp/error.hpp"

namespace rmfgp {

Eigen::VectorXd WhitenedResiduals::all() const {
  Eigen::VectorXd out(hf.size() + lf.size());
  out << hf, lf;
  return out;
}

ObjectiveEvaluator::ObjectiveEvaluator(FidelityDataset data) : data_(std::move(data)) {
  data_.validate_nonempty();
}

const ObjectiveEvaluator::LfGrams& ObjectiveEvaluator::lf_grams(const KernelParams& k) {
  if (!grams_ || !(grams_->key == k)) {
    LfGrams g;
    g.key = k;
    g.LL = separable_gram(data_.lf_points, k);
    g.LH = separable_gram(data_.lf_points, data_.hf_points, k);
    g.HH = separable_gram(data_.hf_points, k);
    grams_ = std::move(g);
  }
  return *grams_;
}

const Eigen::MatrixXd& ObjectiveEvaluator::delta_gram(const KernelParams& k) {
  if (!delta_ || !(delta_->first == k)) {
    delta_ = std::make_pair(k, separable_gram(data_.hf_points, k));
  }
  return delta_->second;
}

const ObjectiveEvaluator::LfStage& ObjectiveEvaluator::lf_stage(const ModelParams& theta) {
  if (stage_ && stage_->kernel == theta.kernel_L && stage_->tau_L_sq == theta.tau_L_sq &&
      stage_->mu_L == theta.mu_L) {
    return *stage_;
  }
  const LfGrams& g = lf_grams(theta.kernel_L);
  Eigen::MatrixXd sll = g.LL;
  sll.diagonal().array() += theta.tau_L_sq;
  LfStage s;
  s.kernel = theta.kernel_L;
  s.tau_L_sq = theta.tau_L_sq;
  s.mu_L = theta.mu_L;
  s.chol = jittered_cholesky(sll);
  s.z = s.chol.whiten(Eigen::VectorXd(data_.lf_values.array() - theta.mu_L));
  const Eigen::MatrixXd v = s.chol.whiten(g.LH);
  s.P = g.HH;
  s.P.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), -1.0);
  s.P.triangularView<Eigen::StrictlyUpper>() = s.P.transpose();
  s.b = v.transpose() * s.z;
  stage_ = std::move(s);
  return *stage_;
}

double ObjectiveEvaluator::lf_marginal_nll(const ModelParams& theta) {
  const LfStage& s = lf_stage(theta);
  last_jitter_ = s.chol.jitter();
  return 0.5 * (s.chol.log_det() + s.z.squaredNorm());
}

double ObjectiveEvaluator::gaussian_nll(const ModelParams& theta) {
  const LfStage& s = lf_stage(theta);
  const Eigen::MatrixXd& kd = delta_gram(theta.kernel_delta);
  const double rho = theta.rho;
  Eigen::MatrixXd c = kd + rho * rho * s.P;
  c.diagonal().array() += theta.tau_H_sq;
  const JitteredCholesky cc = jittered_cholesky(c);
  const Eigen::VectorXd e = (data_.hf_values.array() - theta.mu_H()).matrix() - rho * s.b;
  const Eigen::VectorXd zh = cc.whiten(e);
  last_jitter_ = std::max(s.chol.jitter(), cc.jitter());
  return 0.5 * (s.chol.log_det() + s.z.squaredNorm() + cc.log_det() + zh.squaredNorm());
}

namespace {

struct BlockWhitening {
  Eigen::VectorXd z;
  double normalizer = 0.0;
  double jitter = 0.0;
};

// `chol` must factor `sigma` exactly; it is reused for the full variant.
BlockWhitening whiten_block(const Eigen::MatrixXd& sigma, const JitteredCholesky* chol,
                            const Eigen::VectorXd& r, const WhiteningMode& mode) {
  BlockWhitening out;
  switch (mode.variant) {
    case WhiteningMode::Variant::diagonal: {
      const Eigen::VectorXd d = sigma.diagonal();
      if ((d.array() <= 0.0).any()) throw NumericalError("diagonal whitening: non-positive variance");
      out.z = r.array() / d.array().sqrt();
      out.normalizer = 0.5 * d.array().log().sum();
      break;
    }
    case WhiteningMode::Variant::full: {
      if (chol != nullptr) {
        out.z = chol->whiten(r);
        out.normalizer = 0.5 * chol->log_det();
        out.jitter = chol->jitter();
      } else {
        const JitteredCholesky c = jittered_cholesky(sigma);
        out.z = c.whiten(r);
        out.normalizer = 0.5 * c.log_det();
        out.jitter = c.jitter();
      }
      break;
    }
    case WhiteningMode::Variant::regularized: {
      Eigen::MatrixXd a = sigma;
      a.diagonal().array() += mode.lambda;
      const JitteredCholesky c = jittered_cholesky(a);
      out.z = c.whiten(r);
      out.normalizer = 0.5 * c.log_det();
      out.jitter = c.jitter();
      break;
    }
  }
  return out;
}

}  // namespace

WhitenedResiduals ObjectiveEvaluator::whitened_residuals(const ModelParams& theta,
                                                         const WhiteningMode& mode) {
  mode.validate();
  const LfGrams& g = lf_grams(theta.kernel_L);
  const Eigen::MatrixXd& kd = delta_gram(theta.kernel_delta);
  const double rho = theta.rho;

  Eigen::MatrixXd shh = kd + rho * rho * g.HH;
  shh.diagonal().array() += theta.tau_H_sq;
  const JitteredCholesky ch = jittered_cholesky(shh);
  const Eigen::VectorXd rh = (data_.hf_values.array() - theta.mu_H()).matrix();
  const Eigen::VectorXd rl = (data_.lf_values.array() - theta.mu_L).matrix();

  // LF given HF: mean rho K_LH Sigma_HH^{-1} r_H, covariance Sigma_LL - rho^2 V^T V.
  const Eigen::MatrixXd v = ch.whiten(Eigen::MatrixXd(g.LH.transpose()));
  const Eigen::VectorXd zh_full = ch.whiten(rh);
  const Eigen::VectorXd el = rl - rho * (v.transpose() * zh_full);

  WhitenedResiduals out;
  const BlockWhitening bh = whiten_block(shh, &ch, rh, mode);
  out.hf = bh.z;

  BlockWhitening bl;
  if (mode.variant == WhiteningMode::Variant::diagonal) {
    const Eigen::VectorXd var =
        (g.LL.diagonal().array() + theta.tau_L_sq).matrix() - rho * rho * v.colwise().squaredNorm().transpose();
    if ((var.array() <= 0.0).any()) throw NumericalError("conditional LF variance is not positive");
    bl.z = el.array() / var.array().sqrt();
    bl.normalizer = 0.5 * var.array().log().sum();
  } else {
    Eigen::MatrixXd s = g.LL;
    s.diagonal().array() += theta.tau_L_sq;
    s.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), -rho * rho);
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    bl = whiten_block(s, nullptr, el, mode);
  }
  out.lf = bl.z;
  out.normalizer = bh.normalizer + bl.normalizer;
  out.jitter = std::max({ch.jitter(), bh.jitter, bl.jitter});
  last_jitter_ = out.jitter;
  return out;
}

}  // namespace rmfgp
