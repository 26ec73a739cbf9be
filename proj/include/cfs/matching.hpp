#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfs/optim.hpp"

namespace cfs {

struct GroupSplit {
  std::vector<std::size_t> treated;  // treatment == 1
  std::vector<std::size_t> control;  // treatment == 0
};

/// Throws ErrorKind::kDegenerate unless both values occur.
GroupSplit split_groups(std::span<const std::uint8_t> treatment);

enum class MatchStrategy { kLatentNnm, kSurfaceNnm, kPsm, kMdm, kRandom, kGroundTruth };

MatchStrategy parse_match_strategy(const std::string& name);
std::string to_string(MatchStrategy strategy);

struct MatchPair {
  std::size_t treated = 0;
  std::size_t control = 0;
  // Cosine similarity for NNM, -|score difference| for PSM, -distance for
  // MDM, 1 for ground truth and 0 for random pairs.
  double similarity = 0.0;
};

struct MatchPairList {
  MatchStrategy strategy = MatchStrategy::kLatentNnm;
  std::vector<MatchPair> pairs;
  // Pairs that involved a zero vector (cosine defined as 0).
  std::size_t degenerate_similarities = 0;
};

/// CSV rows: treated_idx,control_idx,similarity,strategy.
void write_pairs_csv(const MatchPairList& list, std::ostream& out);

struct Cosine {
  double value = 0.0;
  bool degenerate = false;  // one of the vectors is zero
};

Cosine cosine_similarity(std::span<const double> u, std::span<const double> v);

struct NnmOptions {
  // A pair is kept iff its similarity is strictly greater than beta.
  double beta = 0.0;
  // Without replacement: greedy assignment by descending similarity, each
  // control used at most once.
  bool with_replacement = true;
};

/// Nearest control by cosine similarity for every treated row of
/// `representation` (one row per sample). Ties go to the lowest control
/// index.
MatchPairList nnm_match(const GroupSplit& split, const Eigen::MatrixXd& representation,
                        const NnmOptions& options = {},
                        MatchStrategy label = MatchStrategy::kLatentNnm);

struct PropensityModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double l2 = 0.0;
  double grad_norm = 0.0;

  Eigen::VectorXd scores(const Eigen::MatrixXd& x) const;
};

/// Throws ErrorKind::kConfig unless l2 > 0.
PropensityModel fit_propensity(const Eigen::MatrixXd& x, std::span<const std::uint8_t> treatment,
                               double l2, const LbfgsOptions& options = {.grad_tol = 1e-7});

/// Nearest control by |score difference|; pairs whose difference exceeds
/// the caliper are dropped.
MatchPairList psm_match(const GroupSplit& split, const Eigen::VectorXd& scores,
                        double caliper = INFINITY);

/// sqrt((u - v)' S_inv (u - v)).
double mahalanobis(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                   const Eigen::MatrixXd& s_inv);

/// lambda = factor * trace(S) / D for the sample covariance S.
double covariance_regularizer(const Eigen::MatrixXd& x, double factor);

/// Rows mapped so that Euclidean distance between them equals the
/// Mahalanobis distance under (S + lambda I)^{-1}. Uses a Cholesky factor
/// of the covariance when D <= N and the singular vectors of the centered
/// data otherwise (differences of rows lie in their span).
Eigen::MatrixXd mahalanobis_whiten(const Eigen::MatrixXd& x, double lambda);

/// Nearest control by Mahalanobis distance, similarity = -distance.
MatchPairList mdm_match(const GroupSplit& split, const Eigen::MatrixXd& x,
                        double reg_factor = 1e-3);

/// Uniform control with replacement for each treated sample.
MatchPairList random_match(const GroupSplit& split, std::uint64_t seed);

/// Pairs each treated sample with its twin when the twin is a control.
/// Twin pairs are read in both directions. Throws ErrorKind::kInput if a
/// treated sample has no twin.
MatchPairList ground_truth_match(const GroupSplit& split,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& twins,
                                 std::size_t n_samples);

/// Keeps pairs with similarity > beta.
MatchPairList apply_beta_gate(MatchPairList list, double beta);

}  // namespace cfs
