#include "rmfgp/prediction.hpp"

#include <cmath>
#include <sstream>

#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

Eigen::VectorXd noise_diagonal(const FidelityDataset& data, const ModelParams& theta,
                               const ObservationWeights& w) {
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  Eigen::VectorXd d(nl + nh);
  d.head(nl).setConstant(theta.tau_L_sq);
  d.tail(nh).setConstant(theta.tau_H_sq);
  if (w.lf.size() != 0) {
    if (w.lf.size() != nl) throw InvalidArgument("LF weight vector has the wrong length");
    d.head(nl).array() /= w.lf.array();
  }
  if (w.hf.size() != 0) {
    if (w.hf.size() != nh) throw InvalidArgument("HF weight vector has the wrong length");
    d.tail(nh).array() /= w.hf.array();
  }
  if (!d.allFinite() || (d.array() < 0.0).any()) throw InvalidArgument("weights must lie in (0, 1]");
  return d;
}

// Joint covariance of the latent processes at the training rows, without noise.
Eigen::MatrixXd latent_joint(const FidelityDataset& data, const ModelParams& theta) {
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  const double rho = theta.rho;
  Eigen::MatrixXd k(nl + nh, nl + nh);
  k.topLeftCorner(nl, nl) = separable_gram(data.lf_points, theta.kernel_L);
  const Eigen::MatrixXd klh = separable_gram(data.lf_points, data.hf_points, theta.kernel_L);
  k.topRightCorner(nl, nh) = rho * klh;
  k.bottomLeftCorner(nh, nl) = rho * klh.transpose();
  k.bottomRightCorner(nh, nh) = rho * rho * separable_gram(data.hf_points, theta.kernel_L) +
                                separable_gram(data.hf_points, theta.kernel_delta);
  return k;
}

Eigen::VectorXd centered(const FidelityDataset& data, const ModelParams& theta) {
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  Eigen::VectorXd r(nl + nh);
  r.head(nl) = data.lf_values.array() - theta.mu_L;
  r.tail(nh) = data.hf_values.array() - theta.mu_H();
  return r;
}

}  // namespace

Prediction predict(const FidelityDataset& data, const ModelParams& theta,
                   std::span<const SpaceTimePoint> query, Fidelity target,
                   const ObservationWeights& weights) {
  data.validate_nonempty();
  theta.validate();
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  const double rho = theta.rho;

  Eigen::MatrixXd sigma = latent_joint(data, theta);
  sigma.diagonal() += noise_diagonal(data, theta, weights);
  const JitteredCholesky chol = jittered_cholesky(sigma);
  const Eigen::VectorXd alpha = chol.solve(centered(data, theta));

  const bool hf = target == Fidelity::high;
  const double prior = hf ? rho * rho * theta.kernel_L.signal_variance + theta.kernel_delta.signal_variance
                          : theta.kernel_L.signal_variance;
  const double prior_mean = hf ? theta.mu_H() : theta.mu_L;

  Prediction out;
  out.points.assign(query.begin(), query.end());
  const Eigen::Index nq = static_cast<Eigen::Index>(query.size());
  out.mean.resize(nq);
  out.variance.resize(nq);
  constexpr Eigen::Index kChunk = 512;
  for (Eigen::Index start = 0; start < nq; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, nq - start);
    const auto q = query.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
    Eigen::MatrixXd ks(nl + nh, len);
    const Eigen::MatrixXd kl = separable_gram(data.lf_points, q, theta.kernel_L);
    const Eigen::MatrixXd kh = separable_gram(data.hf_points, q, theta.kernel_L);
    if (hf) {
      ks.topRows(nl) = rho * kl;
      ks.bottomRows(nh) = rho * rho * kh + separable_gram(data.hf_points, q, theta.kernel_delta);
    } else {
      ks.topRows(nl) = kl;
      ks.bottomRows(nh) = rho * kh;
    }
    out.mean.segment(start, len) = (ks.transpose() * alpha).array() + prior_mean;
    const Eigen::MatrixXd v = chol.whiten(ks);
    out.variance.segment(start, len) = (prior - v.colwise().squaredNorm().array()).transpose();
  }
  for (Eigen::Index i = 0; i < nq; ++i) {
    if (out.variance[i] < 0.0) {
      out.variance[i] = 0.0;
      ++out.n_clamped;
    }
  }
  return out;
}

Prediction predict_hf(const FidelityDataset& data, const ModelParams& theta,
                      std::span<const SpaceTimePoint> query, const ObservationWeights& weights) {
  return predict(data, theta, query, Fidelity::high, weights);
}

ObservationWeights huber_observation_weights(const FidelityDataset& data, const ModelParams& theta,
                                             double c, int max_iter, double tol) {
  if (!(c > 0.0)) throw InvalidArgument("huber_observation_weights: c must be positive");
  data.validate_nonempty();
  theta.validate();
  const Eigen::Index nl = static_cast<Eigen::Index>(data.n_lf());
  const Eigen::Index nh = static_cast<Eigen::Index>(data.n_hf());
  const Eigen::MatrixXd k = latent_joint(data, theta);
  const Eigen::VectorXd r = centered(data, theta);
  Eigen::VectorXd tau(nl + nh);
  tau.head(nl).setConstant(std::sqrt(theta.tau_L_sq));
  tau.tail(nh).setConstant(std::sqrt(theta.tau_H_sq));

  Eigen::VectorXd w = Eigen::VectorXd::Ones(nl + nh);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd s = k;
    for (Eigen::Index i = 0; i < nl + nh; ++i) s(i, i) += tau[i] * tau[i] / w[i];
    const Eigen::VectorXd alpha = jittered_cholesky(s).solve(r);
    Eigen::VectorXd w_new = Eigen::VectorXd::Ones(nl + nh);
    for (Eigen::Index i = 0; i < nl + nh; ++i) {
      if (tau[i] <= 1e-10) continue;
      // Residual y - f_hat equals N alpha; standardize by the noise sd.
      const double u = std::abs(tau[i] * alpha[i] / w[i]);
      if (u > c) w_new[i] = c / u;
    }
    const double change = (w_new - w).cwiseAbs().maxCoeff();
    w = w_new;
    if (change < tol) break;
  }
  return {w.head(nl), w.tail(nh)};
}

void BoundingBox::validate() const {
  if (!std::isfinite(lon_min) || !std::isfinite(lon_max) || !std::isfinite(lat_min) ||
      !std::isfinite(lat_max) || !(lon_min < lon_max) || !(lat_min < lat_max)) {
    throw InvalidArgument("bounding box needs finite lon_min < lon_max and lat_min < lat_max");
  }
}

bool BoundingBox::contains(double lon, double lat) const {
  return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
}

BoundingBox BoundingBox::parse(const std::string& text) {
  std::stringstream ss(text);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw InvalidArgument("trailing characters");
    } catch (const std::exception&) {
      throw InvalidArgument("cannot parse bounding box '" + text + "'");
    }
  }
  if (v.size() != 4) throw InvalidArgument("bounding box needs four numbers: lon_min,lon_max,lat_min,lat_max");
  BoundingBox b{v[0], v[1], v[2], v[3]};
  b.validate();
  return b;
}

GridPrediction krige_grid(const FidelityDataset& data, const ModelParams& theta, const BoundingBox& bbox,
                          int n_lon, int n_lat, const std::vector<double>& times,
                          const ObservationWeights& weights) {
  bbox.validate();
  if (n_lon < 1 || n_lat < 1) throw InvalidArgument("grid resolution must be at least 1x1");
  if (times.empty()) throw InvalidArgument("krige_grid: empty time list");
  GridPrediction g;
  g.n_lon = n_lon;
  g.n_lat = n_lat;
  g.times = times;
  const double dlon = (bbox.lon_max - bbox.lon_min) / n_lon;
  const double dlat = (bbox.lat_max - bbox.lat_min) / n_lat;
  std::vector<SpaceTimePoint> q;
  q.reserve(static_cast<std::size_t>(n_lon) * static_cast<std::size_t>(n_lat) * times.size());
  for (int j = 0; j < n_lat; ++j) {
    for (int i = 0; i < n_lon; ++i) {
      const double lon = bbox.lon_min + (i + 0.5) * dlon;
      const double lat = bbox.lat_min + (j + 0.5) * dlat;
      g.cells.push_back({lon, lat, 0.0, 0.0, 0.0});
      for (double t : times) q.push_back({lon, lat, t});
    }
  }
  g.field = predict_hf(data, theta, q, weights);
  const Eigen::Index nt = static_cast<Eigen::Index>(times.size());
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    const Eigen::Index off = static_cast<Eigen::Index>(c) * nt;
    const Eigen::VectorXd m = g.field.mean.segment(off, nt);
    const double mean = m.mean();
    g.cells[c].temporal_mean = mean;
    g.cells[c].temporal_sd = nt > 1 ? std::sqrt((m.array() - mean).square().sum() / static_cast<double>(nt - 1)) : 0.0;
    g.cells[c].mean_sd = g.field.variance.segment(off, nt).array().sqrt().mean();
  }
  return g;
}

}  // namespace rmfgp
