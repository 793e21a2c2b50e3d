#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rmfgp {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h). Coordinates are
/// visited in `order` when given (useful when the objective caches partial work).
/// Throws NumericalError if any perturbed evaluation is not finite.
Eigen::VectorXd numeric_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double h = 1e-5,
                                 const std::vector<int>& order = {});

struct OptimizerOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;
  double rel_tol = 1e-9;
  double gradient_step = 1e-5;
  /// Upper bound on the Euclidean length of a single step.
  double max_step = 2.0;

  void validate() const;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int n_iter = 0;
  int n_eval = 0;
  bool converged = false;
  std::string reason;
};

/// Called after each accepted step; return true if the objective itself changed
/// (for instance a re-estimated tuning constant) so f and the gradient are refreshed.
using IterateHook = std::function<bool(const Eigen::VectorXd&)>;

/// BFGS with Armijo backtracking and numeric central-difference gradients.
/// Converged when the gradient norm drops below grad_tol or the relative
/// objective change of an accepted step is below rel_tol.
OptimizerResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                              const OptimizerOptions& options, const std::vector<int>& grad_order = {},
                              const IterateHook& hook = {});

/// Golden-section refined Brent minimization of a scalar function on [a, b].
double minimize_scalar(const std::function<double(double)>& f, double a, double b,
                       double tol = 1e-10, int max_iter = 200);

}  // namespace rmfgp
