#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

namespace cfs {

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  std::size_t max_iter = 2000;
  std::size_t history = 10;
  // Stop once the gradient's Euclidean norm drops below this.
  double grad_tol = 1e-8;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

OptimResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

/// log(1 + exp(z)) without overflow.
double softplus(double z);
double sigmoid(double z);

/// Mean logistic loss plus (l2 / 2) * |w|^2 over theta = [w; b]. The
/// intercept b is not penalized. Writes the gradient when grad != nullptr.
double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                          const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

struct LogisticFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd probability(const Eigen::MatrixXd& x) const;
};

/// l2-penalized logistic regression by L-BFGS. y holds 0/1 values.
LogisticFit fit_logistic_l2(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                            const LbfgsOptions& options = {});

struct ProximalOptions {
  std::size_t max_iter = 5000;
  // Stop when no coordinate moves by more than tol between iterations.
  double tol = 1e-7;
};

/// Mean logistic loss plus l1 * |w|_1 by accelerated proximal gradient
/// (FISTA). The intercept is not penalized.
LogisticFit fit_logistic_l1(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1,
                            const ProximalOptions& options = {});

Eigen::VectorXd to_vector(const std::vector<int>& labels);

}  // namespace cfs
