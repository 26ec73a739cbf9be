#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cfs/corpus.hpp"
#include "cfs/optim.hpp"
#include "cfs/select.hpp"

namespace cfs {

enum class ClassifierKind { kLogreg, kLogregL1, kRandomForest };

/// "logreg", "logreg_l1", "rf" (or "random_forest").
ClassifierKind parse_classifier_kind(const std::string& name);
std::string to_string(ClassifierKind kind);

struct ClassifierParams {
  double l2 = 1e-2;  // logreg, on the mean loss
  double l1 = 1e-2;  // logreg_l1, on the mean loss
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0: floor(sqrt(D)), at least 1
  std::size_t max_depth = 0;     // 0: unlimited
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  std::size_t threads = 0;
};

struct TreeNode {
  // Internal nodes: x[feature] <= threshold goes left. Leaves: left == 0.
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  int label = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int predict(const double* row) const;
  std::size_t depth() const;
};

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::kLogreg;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  ClassifierParams params;
  LogisticFit linear;
  std::vector<DecisionTree> trees;
  // Out-of-bag accuracy; NaN when no sample was ever out of bag.
  double oob_accuracy = 0.0;
};

/// Throws ErrorKind::kDegenerate for single-class labels and
/// ErrorKind::kInput for zero features.
ClassifierModel train(ClassifierKind kind, const Eigen::MatrixXd& x, const std::vector<int>& y,
                      const ClassifierParams& params = {}, std::uint64_t seed = 0);

/// Throws ErrorKind::kDimension on a feature count mismatch. Forest votes
/// need a strict majority for the positive class.
std::vector<int> predict(const ClassifierModel& model, const Eigen::MatrixXd& x);

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // Zero denominators: the value is reported as 0 and flagged.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

Metrics evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred);
nlohmann::json to_json(const Metrics& m);

/// L1-penalized logistic regression ranking. Features are ordered by
/// descending |coefficient|; p_value holds a pseudo-p (dense rank of
/// |coefficient| divided by the number of distinct values) so the report
/// plugs into rank-based evaluation. All-zero coefficients set
/// ranking_degenerate.
FeatureReport l1_feature_rank(const FeatureMatrix& x, const std::vector<int>& y, double l1,
                              const ProximalOptions& options = {});

}  // namespace cfs
