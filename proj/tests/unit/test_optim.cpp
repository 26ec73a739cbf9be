#include <doctest.h>

#include <cmath>
#include <random>

#include "cfs/optim.hpp"
#include "oracles.hpp"

using namespace cfs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Fixture {
  MatrixXd x;
  VectorXd y;
};

Fixture fixture(std::uint64_t seed, Eigen::Index n = 20, Eigen::Index d = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Fixture f{MatrixXd(n, d), VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      f.x(i, j) = g(rng);
      z += f.x(i, j) * (j % 2 ? 1.0 : -0.5);
    }
    f.y(i) = (z + g(rng) > 0) ? 1.0 : 0.0;
  }
  return f;
}

}  // namespace

TEST_CASE("logistic gradient matches finite differences") {
  const Fixture f = fixture(1);
  VectorXd theta(6);
  theta << 0.3, -0.2, 0.1, 0.5, -0.4, 0.2;
  VectorXd grad;
  logistic_objective(f.x, f.y, 0.1, theta, &grad);
  const VectorXd fd = oracle::finite_difference_gradient(
      [&](const VectorXd& t) { return logistic_objective(f.x, f.y, 0.1, t, nullptr); }, theta);
  CHECK((grad - fd).norm() / fd.norm() <= 1e-5);
}

TEST_CASE("l2 logistic fit reaches a stationary point") {
  const Fixture f = fixture(2);
  const LogisticFit fit = fit_logistic_l2(f.x, f.y, 1e-2);
  CHECK(fit.converged);
  VectorXd theta(6);
  theta << fit.weights, fit.intercept;
  VectorXd grad;
  logistic_objective(f.x, f.y, 1e-2, theta, &grad);
  CHECK(grad.norm() < 1e-6);
}

TEST_CASE("softplus and sigmoid are stable at extremes") {
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("lbfgs minimizes a convex quadratic") {
  MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  VectorXd b(3);
  b << 1, -2, 0.5;
  const Objective f = [&](const VectorXd& x, VectorXd& g) {
    g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  };
  const OptimResult r = minimize_lbfgs(f, VectorXd::Zero(3));
  CHECK(r.converged);
  CHECK((r.x - a.ldlt().solve(b)).norm() < 1e-7);
}

TEST_CASE("l1 fit zeroes weights above the critical penalty") {
  const Fixture f = fixture(3, 60, 5);
  // At w = 0 the optimal intercept gives p = mean(y); the weights stay zero
  // once l1 >= max |X^T (p - y)| / n.
  const double p = f.y.mean();
  const double critical = (f.x.transpose() * (VectorXd::Constant(60, p) - f.y)).cwiseAbs().maxCoeff() / 60.0;
  const LogisticFit zero = fit_logistic_l1(f.x, f.y, critical * 1.01);
  CHECK(zero.weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.intercept == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-4));
  const LogisticFit some = fit_logistic_l1(f.x, f.y, critical * 0.5);
  CHECK(some.weights.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("l1 fit approaches the l2 fit as both penalties vanish on overlapping classes") {
  const Fixture f = fixture(4, 200, 3);
  const LogisticFit l1 = fit_logistic_l1(f.x, f.y, 1e-8, {.max_iter = 20000, .tol = 1e-10});
  const LogisticFit l2 = fit_logistic_l2(f.x, f.y, 1e-8);
  CHECK((l1.weights - l2.weights).cwiseAbs().maxCoeff() < 1e-3);
}
