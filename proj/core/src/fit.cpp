#include "rmfgp/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rmfgp/conditional.hpp"
#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

constexpr std::array<std::string_view, kNumParams> kNames = {
    "rho",       "sigma_L_sq",     "lengthscale_L_s1",     "lengthscale_L_s2",
    "lengthscale_L_t", "sigma_delta_sq", "lengthscale_delta_s1", "lengthscale_delta_s2",
    "lengthscale_delta_t", "tau_L_sq", "tau_H_sq"};

constexpr double kLogBound = 30.0;
constexpr double kNoiseFloor = 1e-12;

double clamp_exp(double v) { return std::exp(std::clamp(v, -kLogBound, kLogBound)); }

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

std::string_view param_name(int index) {
  if (index < 0 || index >= kNumParams) throw InvalidArgument("parameter index out of range");
  return kNames[static_cast<std::size_t>(index)];
}

Eigen::VectorXd encode_params(const ModelParams& theta) {
  theta.validate();
  Eigen::VectorXd x(kNumParams);
  x << theta.rho, std::log(theta.kernel_L.signal_variance), std::log(theta.kernel_L.lengthscale_s1),
      std::log(theta.kernel_L.lengthscale_s2), std::log(theta.kernel_L.lengthscale_t),
      std::log(theta.kernel_delta.signal_variance), std::log(theta.kernel_delta.lengthscale_s1),
      std::log(theta.kernel_delta.lengthscale_s2), std::log(theta.kernel_delta.lengthscale_t),
      std::log(std::max(theta.tau_L_sq, kNoiseFloor)), std::log(std::max(theta.tau_H_sq, kNoiseFloor));
  return x;
}

ModelParams decode_params(const Eigen::VectorXd& x, const ModelParams& base) {
  if (x.size() != kNumParams) throw InvalidArgument("decode_params: wrong vector length");
  ModelParams t = base;
  t.rho = x[kRho];
  t.kernel_L = {clamp_exp(x[kSigmaL]), clamp_exp(x[kLengthL1]), clamp_exp(x[kLengthL2]),
                clamp_exp(x[kLengthLt])};
  t.kernel_delta = {clamp_exp(x[kSigmaDelta]), clamp_exp(x[kLengthDelta1]),
                    clamp_exp(x[kLengthDelta2]), clamp_exp(x[kLengthDeltat])};
  t.tau_L_sq = clamp_exp(x[kTauL]);
  t.tau_H_sq = clamp_exp(x[kTauH]);
  return t;
}

std::string_view to_string(LossKind kind) { return kind == LossKind::gaussian ? "gaussian" : "huber"; }

LossKind parse_loss(std::string_view text) {
  if (text == "gaussian") return LossKind::gaussian;
  if (text == "huber") return LossKind::huber;
  throw InvalidArgument("unknown loss '" + std::string(text) + "' (gaussian|huber)");
}

std::pair<double, double> centering_means(const FidelityDataset& data, LossKind loss) {
  data.validate_nonempty();
  if (loss == LossKind::gaussian) return {data.lf_values.mean(), data.hf_values.mean()};
  const std::vector<double> l(data.lf_values.data(), data.lf_values.data() + data.lf_values.size());
  const std::vector<double> h(data.hf_values.data(), data.hf_values.data() + data.hf_values.size());
  return {median(l), median(h)};
}

ModelParams heuristic_init(const FidelityDataset& data) {
  data.validate_nonempty();
  auto robust_var = [](const Eigen::VectorXd& v) {
    const std::vector<double> x(v.data(), v.data() + v.size());
    const double med = median(x);
    Eigen::VectorXd dev = (v.array() - med).matrix();
    const double s = mad_scale(dev);
    return s > 0.0 ? s * s : std::max(1e-6, (v.array() - v.mean()).square().mean());
  };
  const double var_l = robust_var(data.lf_values);
  const double var_h = robust_var(data.hf_values);
  const double rho = std::clamp(std::sqrt(var_h / var_l), 0.05, 5.0) * 0.5;
  const double var_resid = std::max(var_h - rho * rho * 0.8 * var_l, 0.1 * var_h);

  std::vector<std::pair<double, double>> sites;
  std::vector<double> steps;
  auto collect = [&](const std::vector<SpaceTimePoint>& pts, const std::vector<int>& st) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == 0 || st[i] != st[i - 1]) sites.emplace_back(pts[i].s1, pts[i].s2);
      if (i > 0 && st[i] == st[i - 1] && pts[i].t > pts[i - 1].t) steps.push_back(pts[i].t - pts[i - 1].t);
    }
  };
  collect(data.lf_points, data.lf_station);
  collect(data.hf_points, data.hf_station);
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  std::vector<double> dists;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      dists.push_back(std::hypot(sites[i].first - sites[j].first, sites[i].second - sites[j].second));
    }
  }
  const double ls = dists.empty() ? 1.0 : std::max(median(dists), 1e-6);
  const double lt = steps.empty() ? 1.0 : 3.0 * median(steps);

  ModelParams t;
  t.rho = rho;
  t.kernel_L = {0.8 * var_l, ls, ls, lt};
  t.kernel_delta = {2.0 / 3.0 * var_resid, ls, ls, lt};
  t.tau_L_sq = 0.2 * var_l;
  t.tau_H_sq = var_resid / 3.0;
  return t;
}

Eigen::VectorXd whitened_innovations(const FidelityDataset& data, const ModelParams& theta,
                                     const WhiteningMode& mode) {
  ObjectiveEvaluator ev(data);
  return ev.whitened_residuals(theta, mode).hf;
}

FitResult fit(const FidelityDataset& data, const ModelParams& init, const FitOptions& options) {
  data.validate_nonempty();
  init.validate();
  options.optimizer.validate();
  if (options.loss == LossKind::huber) options.huber.validate();

  ObjectiveEvaluator ev(data);

  ModelParams base = init;
  std::optional<std::pair<double, double>> means;
  if (options.center) {
    means = centering_means(data, options.loss);
    base.mu_L = means->first;
  }
  auto with_means = [&](ModelParams t) {
    if (means) {
      t.mu_L = means->first;
      t.mu_delta = means->second - t.rho * means->first;
    }
    return t;
  };

  const Eigen::VectorXd x_init = encode_params(init);
  std::vector<int> free_idx;
  for (int i = 0; i < kNumParams; ++i) {
    if (options.free[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  }
  if (free_idx.empty()) throw InvalidArgument("fit: no free parameters");

  auto expand = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd x = x_init;
    for (std::size_t k = 0; k < free_idx.size(); ++k) x[free_idx[k]] = u[static_cast<Eigen::Index>(k)];
    return x;
  };
  auto theta_of = [&](const Eigen::VectorXd& u) { return with_means(decode_params(expand(u), base)); };

  double delta = std::numeric_limits<double>::quiet_NaN();
  if (options.loss == LossKind::huber) {
    const ModelParams ref = with_means(options.delta_reference.value_or(init));
    delta = resolve_delta(ev.whitened_residuals(ref, options.huber.whitening).hf, options.huber);
  }

  ObjectiveFn objective;
  if (options.loss == LossKind::gaussian) {
    objective = [&](const Eigen::VectorXd& u) { return ev.gaussian_nll(theta_of(u)); };
  } else {
    objective = [&](const Eigen::VectorXd& u) {
      const WhitenedResiduals w = ev.whitened_residuals(theta_of(u), options.huber.whitening);
      return huber_consistency(delta) * w.normalizer + huber_sum(w.hf, delta) + huber_sum(w.lf, delta);
    };
  }

  // HF-side coordinates first so the cached LF factorization of the base point is reused.
  std::vector<int> order;
  for (std::size_t k = 0; k < free_idx.size(); ++k) {
    const int p = free_idx[k];
    const bool lf_side = p == kSigmaL || p == kLengthL1 || p == kLengthL2 || p == kLengthLt || p == kTauL;
    if (!lf_side) order.push_back(static_cast<int>(k));
  }
  for (std::size_t k = 0; k < free_idx.size(); ++k) {
    const int p = free_idx[k];
    const bool lf_side = p == kSigmaL || p == kLengthL1 || p == kLengthL2 || p == kLengthLt || p == kTauL;
    if (lf_side) order.push_back(static_cast<int>(k));
  }

  IterateHook hook;
  if (options.loss == LossKind::huber && options.huber.delta_policy == DeltaPolicy::recompute_per_iteration) {
    hook = [&](const Eigen::VectorXd& u) {
      const double d = resolve_delta(ev.whitened_residuals(theta_of(u), options.huber.whitening).hf,
                                     options.huber);
      const bool changed = d != delta;
      delta = d;
      return changed;
    };
  }

  Eigen::VectorXd u0(static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t k = 0; k < free_idx.size(); ++k) u0[static_cast<Eigen::Index>(k)] = x_init[free_idx[k]];

  OptimizerResult opt;
  try {
    opt = minimize_bfgs(objective, u0, options.optimizer, order, hook);
  } catch (const NumericalError& e) {
    throw FitError(std::string("fit failed: ") + e.what());
  }

  FitResult r;
  r.theta_hat = theta_of(opt.x);
  r.objective = opt.f;
  r.n_iter = opt.n_iter;
  r.n_eval = opt.n_eval;
  r.converged = opt.converged && std::isfinite(opt.f);
  r.delta_used = delta;
  r.message = opt.reason;
  objective(opt.x);
  r.jitter_used = ev.last_jitter();
  return r;
}

}  // namespace rmfgp
