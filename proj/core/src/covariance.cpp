#include "rmfgp/covariance.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rmfgp/error.hpp"

namespace rmfgp {

void ModelParams::validate() const {
  if (!std::isfinite(rho)) throw InvalidArgument("rho must be finite");
  kernel_L.validate();
  kernel_delta.validate();
  if (!std::isfinite(tau_L_sq) || tau_L_sq < 0.0 || !std::isfinite(tau_H_sq) || tau_H_sq < 0.0) {
    throw InvalidArgument("noise variances must be finite and non-negative");
  }
  if (!std::isfinite(mu_L) || !std::isfinite(mu_delta)) {
    throw InvalidArgument("mean parameters must be finite");
  }
}

double JitteredCholesky::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd JitteredCholesky::whiten(const Eigen::VectorXd& v) const {
  return llt_.matrixL().solve(v);
}

Eigen::MatrixXd JitteredCholesky::whiten(const Eigen::MatrixXd& m) const {
  return llt_.matrixL().solve(m);
}

namespace {

// Eigen reports success for any positive pivot; reject pivots that are pure round-off.
bool acceptable(const Eigen::LLT<Eigen::MatrixXd>& llt, double max_diag) {
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal();
  if (!d.allFinite()) return false;
  const double floor = 1e-13 * max_diag;
  return (d.array().square() > floor).all();
}

}  // namespace

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& m, double eps0, int escalations) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidArgument("jittered_cholesky: matrix must be square and nonempty");
  }
  if (!m.allFinite()) throw NumericalError("jittered_cholesky: non-finite matrix entries");
  if (!(eps0 > 0.0)) throw InvalidArgument("jittered_cholesky: eps0 must be positive");
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0)) {
    throw InvalidArgument("jittered_cholesky: matrix is not symmetric");
  }
  const double max_diag = std::max(m.diagonal().maxCoeff(), std::numeric_limits<double>::min());

  double eps = 0.0;
  for (int step = 0; step <= escalations + 1; ++step) {
    Eigen::MatrixXd a = m;
    if (eps > 0.0) a.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (acceptable(llt, max_diag + eps)) return JitteredCholesky(std::move(llt), eps);
    eps = step == 0 ? eps0 : eps * 10.0;
  }
  std::ostringstream msg;
  msg << "covariance not positive definite after jitter escalation to " << eps / 10.0
      << " (n=" << m.rows() << ", max diag=" << max_diag << ")";
  throw NumericalError(msg.str());
}

CovarianceBlocks assemble_joint(const FidelityDataset& data, const ModelParams& theta) {
  data.validate_nonempty();
  theta.validate();
  CovarianceBlocks b;
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  b.K_LL = separable_gram(data.lf_points, theta.kernel_L);
  b.K_delta = separable_gram(data.hf_points, theta.kernel_delta);
  b.K_LL_HH = separable_gram(data.hf_points, theta.kernel_L);
  b.K_LH = separable_gram(data.lf_points, data.hf_points, theta.kernel_L);

  const double rho = theta.rho;
  b.Sigma.resize(nl + nh, nl + nh);
  b.Sigma.topLeftCorner(nl, nl) = b.K_LL;
  b.Sigma.topLeftCorner(nl, nl).diagonal().array() += theta.tau_L_sq;
  b.Sigma.topRightCorner(nl, nh) = rho * b.K_LH;
  b.Sigma.bottomLeftCorner(nh, nl) = rho * b.K_LH.transpose();
  b.Sigma.bottomRightCorner(nh, nh) = rho * rho * b.K_LL_HH + b.K_delta;
  b.Sigma.bottomRightCorner(nh, nh).diagonal().array() += theta.tau_H_sq;

  b.jitter = jittered_cholesky(b.Sigma).jitter();

  const JitteredCholesky sll = jittered_cholesky(b.Sigma.topLeftCorner(nl, nl));
  b.B = sll.solve(Eigen::MatrixXd(b.K_LH)).transpose();
  b.Omega = b.K_delta;
  b.Omega.diagonal().array() += theta.tau_H_sq;
  return b;
}

void WhiteningMode::validate() const {
  if (variant == Variant::regularized) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
      throw InvalidArgument("regularized whitening needs a finite lambda >= 0");
    }
  } else if (lambda != 0.0) {
    throw InvalidArgument("lambda is only meaningful for regularized whitening");
  }
}

std::string WhiteningMode::to_string() const {
  switch (variant) {
    case Variant::diagonal:
      return "diag";
    case Variant::full:
      return "full";
    case Variant::regularized: {
      std::ostringstream s;
      s << "reg:" << lambda;
      return s.str();
    }
  }
  return "unknown";
}

WhiteningMode WhiteningMode::parse(std::string_view text) {
  if (text == "diag" || text == "diagonal") return diagonal();
  if (text == "full") return full();
  if (text.starts_with("reg:")) {
    const std::string num(text.substr(4));
    std::size_t used = 0;
    double lambda = 0.0;
    try {
      lambda = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || num.empty()) {
      throw InvalidArgument("cannot parse whitening lambda in '" + std::string(text) + "'");
    }
    WhiteningMode m = regularized(lambda);
    m.validate();
    return m;
  }
  throw InvalidArgument("unknown whitening mode '" + std::string(text) + "' (diag|full|reg:<lambda>)");
}

Eigen::MatrixXd whitening_root(const Eigen::MatrixXd& sigma, const WhiteningMode& mode) {
  mode.validate();
  const Eigen::Index n = sigma.rows();
  switch (mode.variant) {
    case WhiteningMode::Variant::diagonal: {
      if ((sigma.diagonal().array() <= 0.0).any()) {
        throw NumericalError("diagonal whitening: non-positive variance on the diagonal");
      }
      return sigma.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();
    }
    case WhiteningMode::Variant::full:
    case WhiteningMode::Variant::regularized: {
      Eigen::MatrixXd a = sigma;
      if (mode.variant == WhiteningMode::Variant::regularized) a.diagonal().array() += mode.lambda;
      const JitteredCholesky chol = jittered_cholesky(a);
      return chol.whiten(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
    }
  }
  throw InvalidArgument("unknown whitening variant");
}

Eigen::MatrixXd whitening_root(const CovarianceBlocks& blocks, const WhiteningMode& mode) {
  return whitening_root(blocks.sigma_HH(), mode);
}

}  // namespace rmfgp
