#pragma once

// Straight-line reference implementations used only by the tests. They
// share no code with the library beyond Eigen storage.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

/// For each treated row, the control row of maximal cosine similarity (ties
/// to the lowest control index), by a full scan.
std::vector<std::pair<std::size_t, std::size_t>> brute_force_nnm(const std::vector<std::size_t>& treated,
                                                                 const std::vector<std::size_t>& control,
                                                                 const Eigen::MatrixXd& rep);

/// Same, but by minimal (u - v)' M (u - v).
std::vector<std::pair<std::size_t, std::size_t>> brute_force_quadratic_nn(
    const std::vector<std::size_t>& treated, const std::vector<std::size_t>& control, const Eigen::MatrixXd& x,
    const Eigen::MatrixXd& metric);

/// Composite Simpson rule on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n);

/// P(chi^2_1 > x) as 2 * integral of the standard normal density beyond
/// sqrt(x).
double chi2_1_tail_by_integration(double x);

/// Two-sided Student t tail by integrating the density.
double student_t_tail_by_integration(double t, double df);

/// Central differences of f at x.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h = 1e-6);

/// McNemar p-value over matched pairs using discordant counts.
double mcnemar_p(const std::vector<int>& y, const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

}  // namespace oracle
