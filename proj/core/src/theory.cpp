#include "rmfgp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include "rmfgp/conditional.hpp"
#include "rmfgp/error.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/kernels.hpp"
#include "rmfgp/optimizer.hpp"
#include "rmfgp/prediction.hpp"

namespace rmfgp {

namespace {

constexpr double kHessianStep = 1e-4;
constexpr double kGradientStep = 1e-5;
constexpr double kRhoSearchHalfWidth = 4.0;

Eigen::MatrixXd fd_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x, double h) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd hess(p, p);
  const double f0 = f(x);
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    Eigen::VectorXd y = x;
    y[i] += si * h;
    y[j] += sj * h;
    return f(y);
  };
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::VectorXd up = x, dn = x;
    up[i] += h;
    dn[i] -= h;
    hess(i, i) = (f(up) - 2.0 * f0 + f(dn)) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  if (!hess.allFinite()) throw NumericalError("influence bound: non-finite Hessian");
  return hess;
}

// Central-difference Jacobian of a vector valued map.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd up = x, dn = x;
    up[j] += h;
    dn[j] -= h;
    const Eigen::VectorXd d = (f(up) - f(dn)) / (2.0 * h);
    if (j == 0) jac.resize(d.size(), p);
    jac.col(j) = d;
  }
  if (!jac.allFinite()) throw NumericalError("influence bound: non-finite residual Jacobian");
  return jac;
}

double inverse_norm(const Eigen::MatrixXd& j) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || !(s[s.size() - 1] > 1e-12 * s[0])) {
    throw NumericalError("influence bound: singular curvature matrix");
  }
  return 1.0 / s[s.size() - 1];
}

double spectral_norm(const Eigen::MatrixXd& m) {
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

Eigen::MatrixXd sigma_hh(const FidelityDataset& data, const ModelParams& theta) {
  Eigen::MatrixXd s = theta.rho * theta.rho * separable_gram(data.hf_points, theta.kernel_L) +
                      separable_gram(data.hf_points, theta.kernel_delta);
  s.diagonal().array() += theta.tau_H_sq;
  return s;
}

Eigen::VectorXd psi_vector(const Eigen::VectorXd& z, double delta) {
  Eigen::VectorXd p(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = huber_psi(z[i], delta);
  return p;
}

double robust_value(ObjectiveEvaluator& ev, const ModelParams& theta, const HuberConfig& config,
                    double delta) {
  const WhitenedResiduals w = ev.whitened_residuals(theta, config.whitening);
  return huber_consistency(delta) * w.normalizer + huber_sum(w.hf, delta) + huber_sum(w.lf, delta);
}

double contaminated_fraction(const Contaminated& c) {
  if (c.mask.empty()) return 0.0;
  return static_cast<double>(std::count(c.mask.begin(), c.mask.end(), true)) /
         static_cast<double>(c.mask.size());
}

LipschitzEstimates sample_lipschitz(const FidelityDataset& data, const ModelParams& theta,
                                    const HuberConfig& config, int n, std::uint64_t seed) {
  LipschitzEstimates est;
  if (n < 2) return est;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(0.5, 1.5);
  const Eigen::VectorXd x0 = encode_params(theta);

  std::vector<Eigen::VectorXd> xs;
  std::vector<Eigen::MatrixXd> ws;
  std::vector<Eigen::VectorXd> mus;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd x = x0;
    x[kRho] = theta.rho * factor(rng);
    for (int i = 1; i < kNumParams; ++i) x[i] += std::log(factor(rng));
    const ModelParams t = decode_params(x, theta);
    Eigen::MatrixXd w = whitening_root(sigma_hh(data, t), config.whitening);
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(data.n_hf(), t.mu_H());
    est.kappa_W = std::max(est.kappa_W, spectral_norm(w));
    est.R = std::max(est.R, (data.hf_values - mu).norm());
    xs.push_back(std::move(x));
    ws.push_back(std::move(w));
    mus.push_back(mu);
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double dx = (xs[a] - xs[b]).norm();
      if (!(dx > 0.0)) continue;
      est.L_W = std::max(est.L_W, spectral_norm(ws[a] - ws[b]) / dx);
      est.L_mu = std::max(est.L_mu, (mus[a] - mus[b]).norm() / dx);
    }
  }
  est.n_samples = n;
  return est;
}

}  // namespace

double score_rho(const ConditionalRegression& reg, double rho) {
  const Eigen::VectorXd wx = reg.omega.whiten(reg.regressor);
  const Eigen::VectorXd wt = reg.omega.whiten(reg.target);
  return (wt - rho * wx).dot(wx);
}

double score_rho(const FidelityDataset& data, const ModelParams& theta) {
  return score_rho(conditional_regression(data, theta), theta.rho);
}

RobustRho huber_weighted_rho(const FidelityDataset& data, const ModelParams& theta, double c, int max_iter,
                             double tol) {
  if (!(c > 0.0)) throw InvalidArgument("huber_weighted_rho: c must be positive");
  if (max_iter < 1) throw InvalidArgument("huber_weighted_rho: max_iter must be positive");
  data.validate_nonempty();
  theta.validate();
  const Eigen::MatrixXd kll = separable_gram(data.lf_points, theta.kernel_L);
  const Eigen::MatrixXd khl = separable_gram(data.hf_points, data.lf_points, theta.kernel_L);
  const Eigen::VectorXd rl = (data.lf_values.array() - theta.mu_L).matrix();
  Eigen::MatrixXd omega = separable_gram(data.hf_points, theta.kernel_delta);
  omega.diagonal().array() += theta.tau_H_sq;
  const JitteredCholesky omega_chol = jittered_cholesky(omega);
  const Eigen::VectorXd target = (data.hf_values.array() - theta.mu_delta).matrix();

  RobustRho out;
  ModelParams current = theta;
  current.rho = gls_rho(data, theta);
  for (int iter = 1; iter <= max_iter; ++iter) {
    const ObservationWeights w = huber_observation_weights(data, current, c);
    Eigen::MatrixXd s = kll;
    s.diagonal().array() += theta.tau_L_sq / w.lf.array();
    const ConditionalRegression reg{target, (khl * jittered_cholesky(s).solve(rl)).array() + theta.mu_L,
                                    omega_chol};
    const double next = gls_rho(reg);
    const double step = std::abs(next - current.rho);
    current.rho = next;
    out.n_iter = iter;
    out.lf_weights = w.lf;
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  out.rho = current.rho;
  return out;
}

PseudoTrueRho pseudo_true_rho(const Eigen::MatrixXd& c_l, const Eigen::MatrixXd& sigma_u,
                              const Eigen::MatrixXd& b, const Eigen::MatrixXd& omega, double rho) {
  const Eigen::Index nl = c_l.rows();
  if (c_l.cols() != nl || sigma_u.rows() != nl || sigma_u.cols() != nl || b.cols() != nl ||
      omega.rows() != b.rows() || omega.cols() != b.rows()) {
    throw InvalidArgument("pseudo_true_rho: non-conformable matrices");
  }
  if (!std::isfinite(rho)) throw InvalidArgument("pseudo_true_rho: rho must be finite");
  const Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success) throw InvalidArgument("pseudo_true_rho: Omega is not positive definite");
  const Eigen::MatrixXd m = b.transpose() * llt.solve(b);
  const double num = (m * c_l).trace();
  const double den = num + (m * sigma_u).trace();
  if (!(std::abs(den) > 0.0) || !std::isfinite(den)) {
    throw InvalidArgument("pseudo_true_rho: zero denominator trace");
  }
  PseudoTrueRho r;
  r.kappa = num / den;
  r.rho_star = r.kappa * rho;
  return r;
}

std::string_view to_string(EstimatorKind kind) {
  return kind == EstimatorKind::gaussian ? "gaussian" : "huber";
}

EstimatorKind parse_estimator(std::string_view text) {
  if (text == "gaussian") return EstimatorKind::gaussian;
  if (text == "huber") return EstimatorKind::huber;
  throw InvalidArgument("unknown estimator '" + std::string(text) + "' (gaussian|huber)");
}

std::string_view to_string(BoundRegime regime) {
  return regime == BoundRegime::general_whitening ? "general" : "fixed";
}

BoundRegime parse_regime(std::string_view text) {
  if (text == "general") return BoundRegime::general_whitening;
  if (text == "fixed") return BoundRegime::fixed_whitening;
  throw InvalidArgument("unknown regime '" + std::string(text) + "' (general|fixed)");
}

InfluenceCurve influence_curve(const FidelityDataset& clean, const ModelParams& theta,
                               const ContaminationSpec& base, const std::vector<double>& magnitudes,
                               EstimatorKind kind, const HuberConfig& config) {
  clean.validate_nonempty();
  theta.validate();
  if (magnitudes.empty()) throw InvalidArgument("influence_curve: no magnitudes");
  for (std::size_t i = 1; i < magnitudes.size(); ++i) {
    if (!(magnitudes[i] > magnitudes[i - 1])) {
      throw InvalidArgument("influence_curve: magnitudes must be strictly increasing");
    }
  }

  InfluenceCurve curve;
  curve.kind = kind;
  curve.magnitudes = magnitudes;

  std::function<double(const FidelityDataset&)> refit;
  std::function<double(const FidelityDataset&)> score;
  if (kind == EstimatorKind::gaussian) {
    refit = [&](const FidelityDataset& d) { return gls_rho(d, theta); };
    score = [&](const FidelityDataset& d) { return score_rho(d, theta); };
  } else {
    config.validate();
    ObjectiveEvaluator ev0(clean);
    curve.delta = resolve_delta(ev0.whitened_residuals(theta, config.whitening).hf, config);
    refit = [&](const FidelityDataset& d) {
      ObjectiveEvaluator ev(d);
      auto f = [&](double r) {
        ModelParams t = theta;
        t.rho = r;
        return robust_value(ev, t, config, curve.delta);
      };
      return minimize_scalar(f, theta.rho - kRhoSearchHalfWidth, theta.rho + kRhoSearchHalfWidth);
    };
    score = [&](const FidelityDataset& d) {
      ObjectiveEvaluator ev(d);
      auto f = [&](const Eigen::VectorXd& x) {
        ModelParams t = theta;
        t.rho = x[0];
        return robust_value(ev, t, config, curve.delta);
      };
      // Negative derivative of the objective, the same sign convention as the gaussian score.
      return -numeric_gradient(f, Eigen::VectorXd::Constant(1, theta.rho), kGradientStep)[0];
    };
  }

  curve.rho_clean = refit(clean);
  for (const double m : magnitudes) {
    ContaminationSpec spec = base;
    spec.magnitude = m;
    const Contaminated c = apply_contamination(clean, spec);
    const double frac = contaminated_fraction(c);
    const double rho_hat = refit(c.data);
    curve.score.push_back(score(c.data));
    curve.rho_hat.push_back(rho_hat);
    curve.contaminated_fraction.push_back(frac);
    curve.one_step.push_back(frac > 0.0 ? (rho_hat - curve.rho_clean) / frac
                                        : std::numeric_limits<double>::quiet_NaN());
    if (kind == EstimatorKind::huber) {
      ObjectiveEvaluator ev(c.data);
      const Eigen::VectorXd z = ev.whitened_residuals(theta, config.whitening).all();
      double max_psi = 0.0, gap = 0.0;
      int sat = 0;
      for (const double v : z) {
        const double p = std::abs(huber_psi(v, curve.delta));
        max_psi = std::max(max_psi, p);
        if (std::abs(v) > curve.delta) {
          ++sat;
          gap = std::max(gap, std::abs(p - curve.delta));
        }
      }
      curve.max_abs_psi.push_back(max_psi);
      curve.saturated_gap.push_back(gap);
      curve.n_saturated.push_back(sat);
    }
  }
  return curve;
}

BoundReport huber_influence_bound(const FidelityDataset& clean, const FidelityDataset& sample,
                                  const ModelParams& theta, const HuberConfig& config,
                                  BoundRegime regime, double delta, int lipschitz_samples,
                                  std::uint64_t seed, std::optional<double> curvature_delta) {
  clean.validate_nonempty();
  sample.validate_nonempty();
  theta.validate();
  config.validate();
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("influence bound: delta must be positive");
  const double j_delta = curvature_delta.value_or(delta);
  if (!(j_delta > 0.0) || !std::isfinite(j_delta)) {
    throw InvalidArgument("influence bound: curvature delta must be positive");
  }

  BoundReport rep;
  rep.regime = regime;
  rep.delta = delta;

  if (regime == BoundRegime::general_whitening) {
    ObjectiveEvaluator ev_clean(clean);
    ObjectiveEvaluator ev_sample(sample);
    const Eigen::VectorXd x0 = encode_params(theta);
    auto objective = [&](const Eigen::VectorXd& x) {
      return robust_value(ev_clean, decode_params(x, theta), config, j_delta);
    };
    const Eigen::MatrixXd j = fd_hessian(objective, x0, kHessianStep);
    rep.J_inv_norm = inverse_norm(j);
    auto residuals = [&](const Eigen::VectorXd& x) {
      return ev_sample.whitened_residuals(decode_params(x, theta), config.whitening).all();
    };
    const Eigen::MatrixXd g = fd_jacobian(residuals, x0, kGradientStep);
    rep.sum_g_norms = g.rowwise().norm().sum();
    const Eigen::VectorXd psi = psi_vector(residuals(x0), delta);
    const Eigen::VectorXd step = j.fullPivLu().solve(g.transpose() * psi);
    rep.empirical_influence = step.norm();
    rep.n_params = static_cast<int>(x0.size());
  } else {
    const Eigen::MatrixXd w = whitening_root(sigma_hh(clean, theta), config.whitening);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(clean.n_hf());
    auto objective = [&](const Eigen::VectorXd& x) {
      const Eigen::VectorXd z = w * (clean.hf_values - (x[0] * theta.mu_L + theta.mu_delta) * ones);
      return huber_sum(z, j_delta);
    };
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, theta.rho);
    const Eigen::MatrixXd j = fd_hessian(objective, x0, kHessianStep * std::max(1.0, std::abs(theta.rho)));
    rep.J_inv_norm = inverse_norm(j);

    const Eigen::MatrixXd ws = whitening_root(sigma_hh(sample, theta), config.whitening);
    const Eigen::VectorXd os = Eigen::VectorXd::Ones(sample.n_hf());
    const double n_h = static_cast<double>(sample.n_hf());
    const double dmu_norm = std::sqrt(n_h) * std::abs(theta.mu_L);
    rep.sum_g_norms = std::sqrt(n_h) * spectral_norm(ws) * dmu_norm;
    const Eigen::VectorXd g = -theta.mu_L * (ws * os);
    const Eigen::VectorXd z = ws * (sample.hf_values - theta.mu_H() * os);
    rep.empirical_influence = std::abs(g.dot(psi_vector(z, delta))) / std::abs(j(0, 0));
    rep.n_params = 1;
  }
  rep.C_delta = rep.J_inv_norm * delta * rep.sum_g_norms;
  rep.lipschitz = sample_lipschitz(clean, theta, config, lipschitz_samples, seed);
  return rep;
}

void write_influence_csv(const InfluenceCurve& curve, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "estimator,magnitude,score,rho_hat,one_step_influence,contaminated_fraction,max_abs_psi,"
       "saturated_gap,n_saturated,delta,rho_clean\n";
  for (std::size_t i = 0; i < curve.magnitudes.size(); ++i) {
    f << to_string(curve.kind) << ',' << curve.magnitudes[i] << ',' << curve.score[i] << ','
      << curve.rho_hat[i] << ',' << curve.one_step[i] << ',' << curve.contaminated_fraction[i] << ',';
    if (curve.kind == EstimatorKind::huber) {
      f << curve.max_abs_psi[i] << ',' << curve.saturated_gap[i] << ',' << curve.n_saturated[i];
    } else {
      f << ",,";
    }
    f << ',' << curve.delta << ',' << curve.rho_clean << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void write_bound_csv(const std::vector<BoundReport>& reports, const std::vector<double>& magnitudes,
                     const std::string& path) {
  if (reports.size() != magnitudes.size()) throw InvalidArgument("write_bound_csv: length mismatch");
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "magnitude,regime,delta,C_delta,J_inv_norm,sum_g_norms,empirical_influence,n_params,"
       "L_W,L_mu,kappa_W,R\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const BoundReport& r = reports[i];
    f << magnitudes[i] << ',' << to_string(r.regime) << ',' << r.delta << ',' << r.C_delta << ','
      << r.J_inv_norm << ',' << r.sum_g_norms << ',' << r.empirical_influence << ',' << r.n_params << ','
      << r.lipschitz.L_W << ',' << r.lipschitz.L_mu << ',' << r.lipschitz.kappa_W << ',' << r.lipschitz.R
      << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace rmfgp
