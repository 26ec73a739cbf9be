#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace cfs {

enum class ReducerMethod { kNpca, kSpca, kGrp, kMbdl, kLda };

ReducerMethod parse_reducer_method(const std::string& name);
std::string to_string(ReducerMethod method);

struct ReducerOptions {
  // sPCA: sparse loadings by soft-thresholding Sigma * A, Sigma the sample
  // covariance; threshold spca_l1 / 2.
  double spca_l1 = 1.0;
  std::size_t spca_max_iter = 100;
  double spca_tol = 1e-4;

  // Mini-batch dictionary learning.
  std::size_t mbdl_batch_size = 32;
  std::size_t mbdl_epochs = 10;
  double mbdl_l1 = 1.0;
  std::size_t lasso_max_sweeps = 200;
  double lasso_tol = 1e-6;

  // LDA (collapsed Gibbs). lda_alpha <= 0 means 50 / k.
  double lda_alpha = 0.0;
  double lda_beta = 0.01;
  std::size_t lda_sweeps = 500;
  std::size_t lda_average_last = 100;
  std::size_t lda_inference_sweeps = 50;
  // Round non-integer inputs instead of rejecting them.
  bool lda_round_inputs = false;
};

struct FitStats {
  std::size_t iterations = 0;
  bool converged = false;
  // nPCA: explained variance; sPCA: max loading change per iteration;
  // MBDL: objective before training and after each epoch;
  // LDA: log p(w | z) after each sweep.
  std::vector<double> objective_trace;
  // LDA: sweeps whose topic counts summed to the token total.
  std::size_t conserved_sweeps = 0;
  std::size_t total_tokens = 0;
  // LDA: documents with no tokens (uniform proportions).
  std::vector<std::size_t> flagged_documents;
};

/// Immutable after fit; safe to share across threads.
struct ReducerModel {
  ReducerMethod method = ReducerMethod::kNpca;
  std::size_t k = 0;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
  ReducerOptions options;

  // nPCA/sPCA centering vector.
  Eigen::VectorXd mean;
  // D x k: PCA loadings, GRP projection, MBDL atoms, or LDA topic-word
  // distributions (column j is topic j).
  Eigen::MatrixXd components;
  // nPCA: variance along each component.
  Eigen::VectorXd explained_variance;
  // Latent representation of the fitted rows (N x k).
  Eigen::MatrixXd training_latent;
  FitStats stats;
};

/// Fits `method` with latent dimension k. Throws ErrorKind::kDimension when
/// k is 0 or exceeds min(N, D), and ErrorKind::kInput for LDA on
/// non-count input unless lda_round_inputs is set.
ReducerModel fit(ReducerMethod method, const Eigen::MatrixXd& x, std::size_t k,
                 std::uint64_t seed, const ReducerOptions& options = {});

/// Projects rows of x into the latent space. With `excluded_column` the
/// column's contribution is removed (zeroed after centering), which is how
/// one shared model serves every candidate treatment.
Eigen::MatrixXd transform(const ReducerModel& model, const Eigen::MatrixXd& x,
                          std::optional<std::size_t> excluded_column = std::nullopt);

/// Collapsed Gibbs sampling. Topic-word and document-topic estimates are
/// posterior means over the last `options.lda_average_last` sweeps.
ReducerModel lda_fit_gibbs(const Eigen::MatrixXd& counts, std::size_t k, double alpha,
                           double beta, std::size_t sweeps, std::uint64_t seed,
                           const ReducerOptions& options = {});

/// Sparse codes minimizing 0.5 * ||x - atoms^T a||^2 + l1 * ||a||_1 by
/// coordinate descent. atoms is k x D.
Eigen::VectorXd lasso_code(const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& gram,
                           const Eigen::VectorXd& x, double l1, std::size_t max_sweeps,
                           double tol);

nlohmann::json to_json(const ReducerModel& model);
ReducerModel reducer_model_from_json(const nlohmann::json& j);

}  // namespace cfs
