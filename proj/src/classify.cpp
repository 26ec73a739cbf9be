#include "cfs/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cfs/error.hpp"
#include "cfs/parallel.hpp"
#include "cfs/random.hpp"

namespace cfs {

using Eigen::Index;
using Eigen::MatrixXd;

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "logreg") return ClassifierKind::kLogreg;
  if (name == "logreg_l1") return ClassifierKind::kLogregL1;
  if (name == "rf" || name == "random_forest") return ClassifierKind::kRandomForest;
  throw Error(ErrorKind::kConfig, "unknown classifier: " + name);
}

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogreg: return "logreg";
    case ClassifierKind::kLogregL1: return "logreg_l1";
    case ClassifierKind::kRandomForest: return "rf";
  }
  return "unknown";
}

int DecisionTree::predict(const double* row) const {
  std::size_t i = 0;
  while (nodes[i].left != 0) i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].left != 0) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class TreeBuilder {
 public:
  TreeBuilder(const RowMajor& x, const std::vector<int>& y, const ClassifierParams& params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    const std::size_t d = static_cast<std::size_t>(x.cols());
    mtry_ = params.max_features ? std::min(params.max_features, d)
                                : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool valid = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = INFINITY;
  };

  static double gini(double pos, double total) {
    if (total == 0) return 0.0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
  }

  Split best_split_on(std::size_t f, std::vector<std::size_t>& samples, double pos_total) {
    std::sort(samples.begin(), samples.end(), [&](std::size_t a, std::size_t b) {
      const double va = x_(static_cast<Index>(a), static_cast<Index>(f));
      const double vb = x_(static_cast<Index>(b), static_cast<Index>(f));
      return va != vb ? va < vb : a < b;
    });
    Split best;
    const double n = static_cast<double>(samples.size());
    double left_pos = 0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      left_pos += y_[samples[i]];
      const double a = x_(static_cast<Index>(samples[i]), static_cast<Index>(f));
      const double b = x_(static_cast<Index>(samples[i + 1]), static_cast<Index>(f));
      if (a == b) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double imp = (nl * gini(left_pos, nl) + nr * gini(pos_total - left_pos, nr)) / n;
      if (imp < best.impurity) {
        best = {true, f, a + (b - a) / 2.0, imp};
        if (best.threshold >= b) best.threshold = a;  // midpoint rounded up to b
      }
    }
    return best;
  }

  std::size_t grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    double pos = 0;
    for (auto s : samples) pos += y_[s];
    const double n = static_cast<double>(samples.size());
    tree_.nodes[id].label = 2 * pos > n ? 1 : 0;
    const bool pure = pos == 0 || pos == n;
    const bool depth_cap = params_.max_depth != 0 && depth >= params_.max_depth;
    if (pure || depth_cap || samples.size() < std::max<std::size_t>(params_.min_samples_split, 2)) return id;

    // Draw features without replacement; past the first mtry, keep drawing
    // only until some valid split turns up.
    Split best;
    for (std::size_t i = 0; i < features_.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
      std::swap(features_[i], features_[pick(rng_)]);
      if (i >= mtry_ && best.valid) break;
      Split s = best_split_on(features_[i], samples, pos);
      if (s.valid && s.impurity < best.impurity) best = s;
    }
    if (!best.valid) return id;

    std::vector<std::size_t> left, right;
    for (auto s : samples) {
      (x_(static_cast<Index>(s), static_cast<Index>(best.feature)) <= best.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const RowMajor& x_;
  const std::vector<int>& y_;
  const ClassifierParams& params_;
  Rng& rng_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> features_;
  DecisionTree tree_;
};

void check_training(const MatrixXd& x, const std::vector<int>& y) {
  if (x.cols() == 0) throw Error(ErrorKind::kInput, "train: no features");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::kDimension, "train: label count mismatch");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorKind::kInput, "train: labels must be 0/1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorKind::kDegenerate, "train: labels contain a single class");
}

}  // namespace

ClassifierModel train(ClassifierKind kind, const MatrixXd& x, const std::vector<int>& y,
                      const ClassifierParams& params, std::uint64_t seed) {
  check_training(x, y);
  ClassifierModel m;
  m.kind = kind;
  m.seed = seed;
  m.n_features = static_cast<std::size_t>(x.cols());
  m.params = params;
  switch (kind) {
    case ClassifierKind::kLogreg:
      m.linear = fit_logistic_l2(x, to_vector(y), params.l2, {.max_iter = 5000, .grad_tol = 1e-7});
      break;
    case ClassifierKind::kLogregL1:
      m.linear = fit_logistic_l1(x, to_vector(y), params.l1);
      break;
    case ClassifierKind::kRandomForest: {
      if (params.n_trees == 0) throw Error(ErrorKind::kConfig, "random forest needs at least one tree");
      const RowMajor rows = x;
      const std::size_t n = y.size();
      m.trees.resize(params.n_trees);
      std::vector<std::vector<std::uint8_t>> in_bag(params.n_trees);
      parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
        Rng rng = make_rng(seed, "tree", t);
        std::vector<std::size_t> sample(n);
        in_bag[t].assign(n, 0);
        if (params.bootstrap) {
          std::uniform_int_distribution<std::size_t> pick(0, n - 1);
          for (auto& s : sample) {
            s = pick(rng);
            in_bag[t][s] = 1;
          }
        } else {
          std::iota(sample.begin(), sample.end(), 0);
          std::fill(in_bag[t].begin(), in_bag[t].end(), 1);
        }
        TreeBuilder builder(rows, y, params, rng);
        m.trees[t] = builder.build(std::move(sample));
      });
      std::size_t scored = 0, correct = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t votes = 0, ones = 0;
        for (std::size_t t = 0; t < params.n_trees; ++t) {
          if (in_bag[t][i]) continue;
          ++votes;
          ones += static_cast<std::size_t>(m.trees[t].predict(rows.row(static_cast<Index>(i)).data()));
        }
        if (votes == 0) continue;
        ++scored;
        correct += static_cast<int>(2 * ones > votes) == y[i];
      }
      m.oob_accuracy = scored ? static_cast<double>(correct) / static_cast<double>(scored) : NAN;
      break;
    }
  }
  return m;
}

std::vector<int> predict(const ClassifierModel& model, const MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) {
    throw Error(ErrorKind::kDimension, "predict: expected " + std::to_string(model.n_features) + " features");
  }
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  if (model.kind == ClassifierKind::kRandomForest) {
    const RowMajor rows = x;
    for (Index i = 0; i < rows.rows(); ++i) {
      std::size_t ones = 0;
      for (const auto& tree : model.trees) ones += static_cast<std::size_t>(tree.predict(rows.row(i).data()));
      out[static_cast<std::size_t>(i)] = 2 * ones > model.trees.size() ? 1 : 0;
    }
    return out;
  }
  const Eigen::VectorXd z = model.linear.decision(x);
  for (Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = z(i) > 0 ? 1 : 0;
  return out;
}

Metrics evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::kDimension, "evaluate: length mismatch");
  Metrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1, p = y_pred[i] == 1;
    if (t && p) ++m.tp;
    else if (!t && p) ++m.fp;
    else if (t && !p) ++m.fn;
    else ++m.tn;
  }
  const double tp = static_cast<double>(m.tp);
  if (m.tp + m.fp > 0) m.precision = tp / static_cast<double>(m.tp + m.fp);
  else m.precision_undefined = true;
  if (m.tp + m.fn > 0) m.recall = tp / static_cast<double>(m.tp + m.fn);
  else m.recall_undefined = true;
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  else m.f1_undefined = true;
  m.accuracy = y_true.empty() ? 0.0 : static_cast<double>(m.tp + m.tn) / static_cast<double>(y_true.size());
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn},
          {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"accuracy", m.accuracy},
          {"precision_undefined", m.precision_undefined}, {"recall_undefined", m.recall_undefined},
          {"f1_undefined", m.f1_undefined}};
}

FeatureReport l1_feature_rank(const FeatureMatrix& x, const std::vector<int>& y, double l1,
                              const ProximalOptions& options) {
  x.validate();
  check_training(x.values, y);
  const LogisticFit fit = fit_logistic_l1(x.values, to_vector(y), l1, options);
  std::vector<double> magnitudes(x.n_features());
  for (std::size_t j = 0; j < magnitudes.size(); ++j) magnitudes[j] = std::abs(fit.weights(static_cast<Index>(j)));
  std::vector<double> distinct = magnitudes;
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  FeatureReport report;
  report.method = "l1";
  report.config = {{"l1", l1}};
  report.ranking_degenerate = distinct.size() == 1 && distinct.front() == 0.0;
  for (std::size_t j = 0; j < magnitudes.size(); ++j) {
    FeatureResult r;
    r.name = x.feature_names[j];
    r.index = j;
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), magnitudes[j], std::greater<>()) - distinct.begin());
    r.p_value = static_cast<double>(rank + 1) / static_cast<double>(distinct.size());
    r.statistic = magnitudes[j];
    const double w = fit.weights(static_cast<Index>(j));
    r.direction = (w > 0) - (w < 0);
    r.degenerate = report.ranking_degenerate;
    report.features.push_back(std::move(r));
  }
  rank_features(report);
  return report;
}

}  // namespace cfs
