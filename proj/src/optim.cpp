#include "cfs/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cfs/error.hpp"

namespace cfs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

OptimResult minimize_lbfgs(const Objective& f, VectorXd x0, const LbfgsOptions& options) {
  OptimResult r;
  r.x = std::move(x0);
  VectorXd g(r.x.size());
  r.value = f(r.x, g);
  r.grad_norm = g.norm();
  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  VectorXd x_new(r.x.size()), g_new(r.x.size());

  for (r.iterations = 0; r.iterations < options.max_iter; ++r.iterations) {
    if (!std::isfinite(r.value)) throw Error(ErrorKind::kDomain, "lbfgs: objective is not finite");
    if (r.grad_norm < options.grad_tol) {
      r.converged = true;
      return r;
    }
    // Two-loop recursion.
    VectorXd q = g;
    std::vector<double> a(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      a[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / r.grad_norm) : 1.0;
    double value_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = r.x + step * dir;
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no decrease possible at working precision
    VectorXd s = x_new - r.x;
    VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    r.x = x_new;
    g = g_new;
    r.value = value_new;
    r.grad_norm = g.norm();
  }
  r.converged = r.grad_norm < options.grad_tol;
  return r;
}

double logistic_objective(const MatrixXd& x, const VectorXd& y, double l2,
                          const VectorXd& theta, VectorXd* grad) {
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  const auto w = theta.head(d);
  const double b = theta(d);
  const VectorXd z = (x * w).array() + b;
  double loss = 0.0;
  VectorXd resid(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += softplus(z(i)) - y(i) * z(i);
    resid(i) = sigmoid(z(i)) - y(i);
  }
  loss = loss / n + 0.5 * l2 * w.squaredNorm();
  if (grad) {
    grad->resize(d + 1);
    grad->head(d) = x.transpose() * resid / n + l2 * w;
    (*grad)(d) = resid.sum() / n;
  }
  return loss;
}

VectorXd LogisticFit::decision(const MatrixXd& x) const {
  if (x.cols() != weights.size()) throw Error(ErrorKind::kDimension, "logistic: feature count mismatch");
  return (x * weights).array() + intercept;
}

VectorXd LogisticFit::probability(const MatrixXd& x) const {
  return decision(x).unaryExpr([](double z) { return sigmoid(z); });
}

namespace {

void check_problem(const MatrixXd& x, const VectorXd& y) {
  if (x.rows() != y.size()) throw Error(ErrorKind::kDimension, "logistic: label count mismatch");
  if (x.rows() == 0) throw Error(ErrorKind::kInput, "logistic: no samples");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorKind::kInput, "logistic: labels must be 0/1");
  }
}

double log_odds(const VectorXd& y) {
  const double p = std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

}  // namespace

LogisticFit fit_logistic_l2(const MatrixXd& x, const VectorXd& y, double l2,
                            const LbfgsOptions& options) {
  check_problem(x, y);
  if (l2 < 0) throw Error(ErrorKind::kConfig, "logistic: l2 must be >= 0");
  VectorXd theta0 = VectorXd::Zero(x.cols() + 1);
  theta0(x.cols()) = log_odds(y);
  Objective f = [&](const VectorXd& theta, VectorXd& grad) {
    return logistic_objective(x, y, l2, theta, &grad);
  };
  OptimResult r = minimize_lbfgs(f, theta0, options);
  LogisticFit fit;
  fit.weights = r.x.head(x.cols());
  fit.intercept = r.x(x.cols());
  fit.grad_norm = r.grad_norm;
  fit.iterations = r.iterations;
  fit.converged = r.converged;
  return fit;
}

LogisticFit fit_logistic_l1(const MatrixXd& x, const VectorXd& y, double l1,
                            const ProximalOptions& options) {
  check_problem(x, y);
  if (l1 < 0) throw Error(ErrorKind::kConfig, "logistic: l1 must be >= 0");
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());

  // Lipschitz constant of the mean logistic gradient: ||[X 1]||_2^2 / (4n),
  // with the spectral norm estimated by power iteration and padded.
  VectorXd v = VectorXd::Ones(d + 1) / std::sqrt(static_cast<double>(d + 1));
  double sigma2 = 1.0;
  for (int it = 0; it < 100; ++it) {
    VectorXd xv = x * v.head(d);
    xv.array() += v(d);
    VectorXd w(d + 1);
    w.head(d) = x.transpose() * xv;
    w(d) = xv.sum();
    const double norm = w.norm();
    if (norm == 0) break;
    sigma2 = norm;
    v = w / norm;
  }
  const double lipschitz = std::max(1.05 * sigma2 / (4.0 * n), 1e-12);
  const double step = 1.0 / lipschitz;

  VectorXd theta = VectorXd::Zero(d + 1);
  theta(d) = log_odds(y);
  VectorXd momentum = theta, grad(d + 1), next(d + 1);
  double t = 1.0;
  LogisticFit fit;
  for (fit.iterations = 0; fit.iterations < options.max_iter; ++fit.iterations) {
    logistic_objective(x, y, 0.0, momentum, &grad);
    next = momentum - step * grad;
    const double thr = step * l1;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = next(j);
      next(j) = a > thr ? a - thr : (a < -thr ? a + thr : 0.0);
    }
    const double change = (next - theta).cwiseAbs().maxCoeff();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum = next + ((t - 1.0) / t_next) * (next - theta);
    theta = next;
    t = t_next;
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = theta.head(d);
  fit.intercept = theta(d);
  logistic_objective(x, y, 0.0, theta, &grad);
  fit.grad_norm = std::abs(grad(d));
  return fit;
}

VectorXd to_vector(const std::vector<int>& labels) {
  VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i];
  return y;
}

}  // namespace cfs
