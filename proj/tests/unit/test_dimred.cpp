#include <doctest.h>

#include <cmath>
#include <random>

#include "cfs/dimred.hpp"
#include "cfs/error.hpp"

using namespace cfs;
using Eigen::MatrixXd;

namespace {

MatrixXd gaussian(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng);
  return m;
}

// Low-rank signal plus noise with distinct variances.
MatrixXd structured(Eigen::Index n, Eigen::Index d, unsigned seed) {
  MatrixXd z = gaussian(n, 3, seed);
  MatrixXd a = gaussian(3, d, seed + 1);
  return z * a * 2.0 + 0.3 * gaussian(n, d, seed + 2);
}

MatrixXd counts(Eigen::Index n, Eigen::Index v, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> pois(1.5);
  MatrixXd m(n, v);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < v; ++j) m(i, j) = pois(rng);
  return m;
}

double reconstruction_error(const MatrixXd& x, const ReducerModel& m) {
  const MatrixXd centered = x.rowwise() - m.mean.transpose();
  const MatrixXd recon = centered * m.components * m.components.transpose();
  return (centered - recon).squaredNorm();
}

}  // namespace

TEST_CASE("npca components are orthonormal in both eigen routes") {
  for (auto [n, d] : {std::pair{80, 12}, std::pair{20, 60}}) {
    const MatrixXd x = structured(n, d, 4);
    const ReducerModel m = fit(ReducerMethod::kNpca, x, 8, 0);
    const MatrixXd gram = m.components.transpose() * m.components;
    CHECK((gram - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index j = 1; j < m.explained_variance.size(); ++j) {
      CHECK(m.explained_variance(j) <= m.explained_variance(j - 1) + 1e-12);
    }
    CHECK((transform(m, x) - m.training_latent).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("npca routes agree on the leading subspace") {
  const MatrixXd x = structured(40, 30, 9);
  const ReducerModel a = fit(ReducerMethod::kNpca, x, 3, 0);
  // Same data with an extra all-zero block flips D > N, forcing the Gram route.
  MatrixXd wide = MatrixXd::Zero(40, 60);
  wide.leftCols(30) = x;
  const ReducerModel b = fit(ReducerMethod::kNpca, wide, 3, 0);
  const MatrixXd pa = a.components * a.components.transpose();
  const MatrixXd pb = b.components.topRows(30) * b.components.topRows(30).transpose();
  CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("npca reconstruction error decreases with k") {
  const MatrixXd x = structured(60, 15, 2);
  double prev = INFINITY;
  for (std::size_t k = 1; k <= 15; ++k) {
    const double err = reconstruction_error(x, fit(ReducerMethod::kNpca, x, k, 0));
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("k outside [1, min(N, D)] is a dimension error") {
  const MatrixXd x = gaussian(10, 5, 1);
  for (auto method : {ReducerMethod::kNpca, ReducerMethod::kSpca, ReducerMethod::kGrp, ReducerMethod::kMbdl}) {
    CHECK_THROWS_AS(fit(method, x, 0, 0), Error);
    CHECK_THROWS_AS(fit(method, x, 6, 0), Error);
  }
  try {
    fit(ReducerMethod::kNpca, x, 6, 0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimension);
  }
}

TEST_CASE("spca loadings are unit norm and sparsify with the penalty") {
  const MatrixXd x = structured(60, 20, 5);
  auto nonzeros = [&](double l1) {
    ReducerOptions o;
    o.spca_l1 = l1;
    const ReducerModel m = fit(ReducerMethod::kSpca, x, 3, 0, o);
    for (Eigen::Index j = 0; j < m.components.cols(); ++j) {
      const double norm = m.components.col(j).norm();
      CHECK((norm == doctest::Approx(1.0) || norm == 0.0));
    }
    return (m.components.array() != 0.0).count();
  };
  const auto dense = nonzeros(0.0);
  const auto sparse = nonzeros(8.0);
  CHECK(dense == 60);
  CHECK(sparse < dense);
}

TEST_CASE("spca without penalty spans the principal subspace") {
  const MatrixXd x = structured(50, 10, 8);
  ReducerOptions o;
  o.spca_l1 = 0.0;
  o.spca_max_iter = 500;
  o.spca_tol = 1e-10;
  const ReducerModel s = fit(ReducerMethod::kSpca, x, 3, 0, o);
  const ReducerModel p = fit(ReducerMethod::kNpca, x, 3, 0);
  // Projection of the sPCA loadings onto the PCA subspace keeps their norm.
  const MatrixXd proj = p.components * (p.components.transpose() * s.components);
  CHECK((proj - s.components).norm() < 1e-4);
}

TEST_CASE("grp preserves squared distances on average") {
  const MatrixXd x = gaussian(64, 200, 3);
  const double truth = (x.row(0) - x.row(1)).squaredNorm();
  double sum = 0.0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    const ReducerModel m = fit(ReducerMethod::kGrp, x, 64, static_cast<std::uint64_t>(s));
    sum += (m.training_latent.row(0) - m.training_latent.row(1)).squaredNorm();
  }
  const double ratio = sum / trials / truth;
  CHECK(ratio > 0.95);
  CHECK(ratio < 1.05);
}

TEST_CASE("grp is deterministic per seed and uncentered") {
  const MatrixXd x = gaussian(30, 40, 6);
  const ReducerModel a = fit(ReducerMethod::kGrp, x, 10, 5), b = fit(ReducerMethod::kGrp, x, 10, 5);
  CHECK(a.components == b.components);
  CHECK((a.training_latent - x * a.components).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mbdl lowers its objective and keeps atoms in the unit ball") {
  const MatrixXd x = structured(64, 12, 7);
  ReducerOptions o;
  o.mbdl_epochs = 5;
  o.mbdl_l1 = 0.5;
  const ReducerModel m = fit(ReducerMethod::kMbdl, x, 4, 3, o);
  REQUIRE(m.stats.objective_trace.size() == 6);
  CHECK(m.stats.objective_trace.back() < m.stats.objective_trace.front());
  for (Eigen::Index j = 0; j < m.components.cols(); ++j) CHECK(m.components.col(j).norm() <= 1.0 + 1e-12);
  CHECK(m.training_latent.rows() == 64);
  CHECK(m.training_latent.cols() == 4);
}

TEST_CASE("lasso code solves the one-atom case in closed form") {
  MatrixXd atoms(1, 3);
  atoms << 1, 0, 0;
  const MatrixXd gram = atoms * atoms.transpose();
  Eigen::VectorXd x(3);
  x << 3, 1, 1;
  CHECK(lasso_code(atoms, gram, x, 1.0, 100, 1e-12)(0) == doctest::Approx(2.0));
  x << 0.5, 1, 1;
  CHECK(lasso_code(atoms, gram, x, 1.0, 100, 1e-12)(0) == 0.0);
}

TEST_CASE("lda proportions lie on the simplex and tokens are conserved") {
  MatrixXd c = counts(30, 25, 2);
  c.row(4).setZero();
  ReducerOptions o;
  o.lda_sweeps = 60;
  o.lda_average_last = 20;
  o.lda_inference_sweeps = 10;
  const ReducerModel m = fit(ReducerMethod::kLda, c, 4, 9, o);
  CHECK(m.stats.conserved_sweeps == 60);
  CHECK(m.stats.total_tokens == static_cast<std::size_t>(c.sum()));
  REQUIRE(m.stats.flagged_documents.size() == 1);
  CHECK(m.stats.flagged_documents[0] == 4);
  for (Eigen::Index i = 0; i < m.training_latent.rows(); ++i) {
    CHECK(m.training_latent.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.training_latent.row(i).minCoeff() > 0.0);
  }
  for (Eigen::Index j = 0; j < m.components.cols(); ++j) {
    CHECK(m.components.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const MatrixXd held = transform(m, c);
  for (Eigen::Index i = 0; i < held.rows(); ++i) {
    CHECK(held.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(held == transform(m, c));
}

TEST_CASE("lda rejects non-count input unless rounding") {
  MatrixXd c = counts(10, 8, 3);
  c(0, 0) = 0.5;
  ReducerOptions o;
  o.lda_sweeps = 5;
  o.lda_average_last = 2;
  CHECK_THROWS_AS(fit(ReducerMethod::kLda, c, 2, 0, o), Error);
  o.lda_round_inputs = true;
  CHECK_NOTHROW(fit(ReducerMethod::kLda, c, 2, 0, o));
}

TEST_CASE("excluded column is zeroed after centering") {
  const MatrixXd x = structured(40, 10, 1);
  const ReducerModel m = fit(ReducerMethod::kNpca, x, 4, 0);
  MatrixXd centered = x.rowwise() - m.mean.transpose();
  centered.col(3).setZero();
  CHECK((transform(m, x, 3) - centered * m.components).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(transform(m, x, 10), Error);
  CHECK_THROWS_AS(transform(m, x.leftCols(9)), Error);
}

TEST_CASE("reducer model json round trip") {
  const MatrixXd x = structured(30, 8, 2);
  const ReducerModel m = fit(ReducerMethod::kNpca, x, 3, 0);
  const ReducerModel back = reducer_model_from_json(to_json(m));
  CHECK(back.method == m.method);
  CHECK(back.k == 3);
  CHECK(back.components == m.components);
  CHECK(back.mean == m.mean);
  CHECK(transform(back, x) == transform(m, x));
}
