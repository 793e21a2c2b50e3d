#include "rmfgp/optimizer.hpp"

#include <cmath>
#include <limits>

#include "rmfgp/error.hpp"

namespace rmfgp {

Eigen::VectorXd numeric_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double h,
                                 const std::vector<int>& order) {
  if (!(h > 0.0)) throw InvalidArgument("numeric_gradient: step must be positive");
  const Eigen::Index n = x.size();
  std::vector<int> idx = order;
  if (idx.empty()) {
    idx.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i);
  } else if (static_cast<Eigen::Index>(idx.size()) != n) {
    throw InvalidArgument("numeric_gradient: order must list every coordinate once");
  }
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int i : idx) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("numeric_gradient: non-finite objective in the step neighborhood of coordinate " +
                           std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

void OptimizerOptions::validate() const {
  if (max_iter < 1) throw InvalidArgument("optimizer max_iter must be at least 1");
  if (!(grad_tol > 0.0) || !(rel_tol > 0.0) || !(gradient_step > 0.0) || !(max_step > 0.0)) {
    throw InvalidArgument("optimizer tolerances and steps must be positive");
  }
}

namespace {

double safe_eval(const ObjectiveFn& f, const Eigen::VectorXd& x, int& n_eval) {
  ++n_eval;
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

OptimizerResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                              const OptimizerOptions& options, const std::vector<int>& grad_order,
                              const IterateHook& hook) {
  options.validate();
  const Eigen::Index n = x0.size();
  OptimizerResult res;
  res.x = x0;
  int n_eval = 0;
  double fx = safe_eval(f, x0, n_eval);
  if (!std::isfinite(fx)) throw NumericalError("objective is not finite at the initial point");

  auto gradient = [&](const Eigen::VectorXd& x) {
    n_eval += 2 * static_cast<int>(n);
    return numeric_gradient(f, x, options.gradient_step, grad_order);
  };

  Eigen::VectorXd x = x0;
  Eigen::VectorXd g = gradient(x);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  res.reason = "max_iter reached";

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (g.norm() < options.grad_tol) {
      res.converged = true;
      res.reason = "gradient norm below tolerance";
      break;
    }
    Eigen::VectorXd p = -h * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    double t = 1.0;
    const double pn = p.norm();
    if (pn > options.max_step) t = options.max_step / pn;

    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 50; ++k) {
      x_new = x + t * p;
      f_new = safe_eval(f, x_new, n_eval);
      if (f_new <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!h.isIdentity()) {
        h.setIdentity();
        scaled = false;
        continue;
      }
      res.reason = "line search failed";
      res.n_iter = iter;
      break;
    }

    const double change = std::abs(fx - f_new);
    const double prev = fx;
    Eigen::VectorXd g_new;
    try {
      g_new = gradient(x_new);
    } catch (const NumericalError&) {
      x = x_new;
      fx = f_new;
      res.reason = "gradient evaluation failed";
      res.n_iter = iter + 1;
      break;
    }
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    x = x_new;
    fx = f_new;
    g = g_new;
    res.n_iter = iter + 1;

    bool refreshed = false;
    if (hook && hook(x)) {
      fx = safe_eval(f, x, n_eval);
      g = gradient(x);
      h.setIdentity();
      scaled = false;
      refreshed = true;
    }

    if (!refreshed && change <= options.rel_tol * std::max(std::abs(prev), 1.0)) {
      res.converged = true;
      res.reason = "relative objective change below tolerance";
      break;
    }
    if (refreshed) continue;

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (!scaled) {
        h = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double r = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += ((sy + y.dot(hy)) * r * r) * (s * s.transpose()) - r * (hy * s.transpose() + s * hy.transpose());
    }
  }
  if (!res.converged && g.norm() < options.grad_tol) {
    res.converged = true;
    res.reason = "gradient norm below tolerance";
  }
  res.x = x;
  res.f = fx;
  res.n_eval = n_eval;
  return res;
}

double minimize_scalar(const std::function<double(double)>& f, double a, double b, double tol,
                       int max_iter) {
  if (!(a < b)) throw InvalidArgument("minimize_scalar: need a < b");
  const double golden = 0.3819660112501051;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + 1e-12;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      if (std::abs(p) < std::abs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x)) {
        e = d;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace rmfgp
