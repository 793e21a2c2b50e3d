#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rmfgp {

/// A space-time input x = (s1, s2, t).
struct SpaceTimePoint {
  double s1 = 0.0;
  double s2 = 0.0;
  double t = 0.0;

  bool operator==(const SpaceTimePoint&) const = default;
};

/// Signal variance and one length-scale per axis of a separable RBF kernel.
struct KernelParams {
  double signal_variance = 1.0;
  double lengthscale_s1 = 1.0;
  double lengthscale_s2 = 1.0;
  double lengthscale_t = 1.0;

  bool operator==(const KernelParams&) const = default;
  bool valid() const;
  /// Throws InvalidArgument unless every field is finite and strictly positive.
  void validate() const;
};

/// Per-axis squared distances between two points.
struct AxisSqDistance {
  double s1 = 0.0;
  double s2 = 0.0;
  double t = 0.0;
};

AxisSqDistance axis_sq_distance(const SpaceTimePoint& a, const SpaceTimePoint& b);

/// Anisotropic squared-exponential covariance for per-axis squared distances.
/// Equals sigma^2 * exp(-0.5 * sum_k d_k / l_k^2), which is the product of a
/// unit-variance spatial factor and a unit-variance temporal factor.
double rbf(const AxisSqDistance& d, const KernelParams& params);

/// Spatial factor exp(-0.5 (ds1/l1^2 + ds2/l2^2)) without the signal variance.
double spatial_correlation(const AxisSqDistance& d, const KernelParams& params);

/// Temporal factor exp(-0.5 dt/lt^2) without the signal variance.
double temporal_correlation(const AxisSqDistance& d, const KernelParams& params);

/// Dense |a| x |b| Gram matrix of the separable kernel; entry (i, j) is
/// sigma^2 * spatial(a_i, b_j) * temporal(a_i, b_j).
Eigen::MatrixXd separable_gram(std::span<const SpaceTimePoint> points_a,
                               std::span<const SpaceTimePoint> points_b,
                               const KernelParams& params);

/// Symmetric Gram on a single point set (fills both triangles from one pass).
Eigen::MatrixXd separable_gram(std::span<const SpaceTimePoint> points,
                               const KernelParams& params);

/// Length-scale l such that a unit-variance RBF has correlation c at distance d:
/// l = d / sqrt(-2 log c).
double lengthscale_from_correlation(double distance, double correlation);

}  // namespace rmfgp
