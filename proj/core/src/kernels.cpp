#include "rmfgp/kernels.hpp"

#include <cmath>
#include <string>

#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void check_point(const SpaceTimePoint& p) {
  if (!std::isfinite(p.s1) || !std::isfinite(p.s2) || !std::isfinite(p.t)) {
    throw InvalidArgument("space-time point has non-finite coordinates");
  }
}

}  // namespace

bool KernelParams::valid() const {
  return positive_finite(signal_variance) && positive_finite(lengthscale_s1) &&
         positive_finite(lengthscale_s2) && positive_finite(lengthscale_t);
}

void KernelParams::validate() const {
  if (!valid()) {
    throw InvalidArgument("kernel parameters must be finite and strictly positive (variance=" +
                          std::to_string(signal_variance) + ", l=(" + std::to_string(lengthscale_s1) +
                          ", " + std::to_string(lengthscale_s2) + ", " +
                          std::to_string(lengthscale_t) + "))");
  }
}

AxisSqDistance axis_sq_distance(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  const double d1 = a.s1 - b.s1;
  const double d2 = a.s2 - b.s2;
  const double dt = a.t - b.t;
  return {d1 * d1, d2 * d2, dt * dt};
}

double rbf(const AxisSqDistance& d, const KernelParams& params) {
  params.validate();
  if (!std::isfinite(d.s1) || !std::isfinite(d.s2) || !std::isfinite(d.t) || d.s1 < 0.0 ||
      d.s2 < 0.0 || d.t < 0.0) {
    throw InvalidArgument("rbf: squared distances must be finite and non-negative");
  }
  const double q = d.s1 / (params.lengthscale_s1 * params.lengthscale_s1) +
                   d.s2 / (params.lengthscale_s2 * params.lengthscale_s2) +
                   d.t / (params.lengthscale_t * params.lengthscale_t);
  return params.signal_variance * std::exp(-0.5 * q);
}

double spatial_correlation(const AxisSqDistance& d, const KernelParams& params) {
  const double q = d.s1 / (params.lengthscale_s1 * params.lengthscale_s1) +
                   d.s2 / (params.lengthscale_s2 * params.lengthscale_s2);
  return std::exp(-0.5 * q);
}

double temporal_correlation(const AxisSqDistance& d, const KernelParams& params) {
  return std::exp(-0.5 * d.t / (params.lengthscale_t * params.lengthscale_t));
}

Eigen::MatrixXd separable_gram(std::span<const SpaceTimePoint> points_a,
                               std::span<const SpaceTimePoint> points_b,
                               const KernelParams& params) {
  params.validate();
  if (points_a.empty() || points_b.empty()) {
    throw InvalidArgument("separable_gram: point lists must be nonempty");
  }
  for (const auto& p : points_a) check_point(p);
  for (const auto& p : points_b) check_point(p);

  const double w1 = 0.5 / (params.lengthscale_s1 * params.lengthscale_s1);
  const double w2 = 0.5 / (params.lengthscale_s2 * params.lengthscale_s2);
  const double wt = 0.5 / (params.lengthscale_t * params.lengthscale_t);

  const auto na = static_cast<Eigen::Index>(points_a.size());
  const auto nb = static_cast<Eigen::Index>(points_b.size());
  Eigen::ArrayXd a1(na), a2(na), at(na);
  for (Eigen::Index i = 0; i < na; ++i) {
    const auto& a = points_a[static_cast<std::size_t>(i)];
    a1[i] = a.s1;
    a2[i] = a.s2;
    at[i] = a.t;
  }
  Eigen::MatrixXd k(na, nb);
  for (Eigen::Index j = 0; j < nb; ++j) {
    const auto& b = points_b[static_cast<std::size_t>(j)];
    k.col(j) = -(w1 * (a1 - b.s1).square() + w2 * (a2 - b.s2).square() + wt * (at - b.t).square());
  }
  k = params.signal_variance * k.array().exp();
  return k;
}

Eigen::MatrixXd separable_gram(std::span<const SpaceTimePoint> points, const KernelParams& params) {
  params.validate();
  if (points.empty()) {
    throw InvalidArgument("separable_gram: point list must be nonempty");
  }
  for (const auto& p : points) check_point(p);

  const double w1 = 0.5 / (params.lengthscale_s1 * params.lengthscale_s1);
  const double w2 = 0.5 / (params.lengthscale_s2 * params.lengthscale_s2);
  const double wt = 0.5 / (params.lengthscale_t * params.lengthscale_t);

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::ArrayXd a1(n), a2(n), at(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = points[static_cast<std::size_t>(i)];
    a1[i] = a.s1;
    a2[i] = a.s2;
    at[i] = a.t;
  }
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k.col(j) = -(w1 * (a1 - a1[j]).square() + w2 * (a2 - a2[j]).square() + wt * (at - at[j]).square());
  }
  k = params.signal_variance * k.array().exp();
  // Exact symmetry and an exact signal-variance diagonal.
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  k.diagonal().setConstant(params.signal_variance);
  return k;
}

double lengthscale_from_correlation(double distance, double correlation) {
  if (!(correlation > 0.0 && correlation < 1.0)) {
    throw InvalidArgument("lengthscale_from_correlation: correlation must lie in (0, 1)");
  }
  if (!(distance > 0.0) || !std::isfinite(distance)) {
    throw InvalidArgument("lengthscale_from_correlation: distance must be positive");
  }
  return distance / std::sqrt(-2.0 * std::log(correlation));
}

}  // namespace rmfgp
