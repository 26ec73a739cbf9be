#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cfs/classify.hpp"
#include "cfs/corpus.hpp"
#include "cfs/select.hpp"
#include "cfs/stats.hpp"
#include "cfs/synth.hpp"

namespace cfs {

// --- rank correctness --------------------------------------------------------

struct RCResult {
  std::string method;
  double rc = 0.0;
  // 1 win, 0.5 tie, 0 loss; one entry per replica.
  std::vector<double> outcomes;
  std::size_t n_replicas() const { return outcomes.size(); }
};

nlohmann::json to_json(const RCResult& r);

/// 1 if the treatment's p-value is below the irrelevant feature's, 0.5 on
/// equal p-values, else 0. Skipped features count as p = +inf.
double rank_outcome(const FeatureReport& report, std::size_t treatment_index,
                    std::size_t irrelevant_index);

/// The irrelevant feature compared in replica r; the same for every method.
std::size_t sample_irrelevant(const GroundTruth& truth, std::uint64_t seed, std::size_t replica);

/// Throws ErrorKind::kInput when the counts disagree or a truth lacks
/// irrelevant features.
RCResult rank_correctness(const std::string& method, const std::vector<FeatureReport>& reports,
                          const std::vector<GroundTruth>& truths, std::uint64_t seed);

struct RcExperimentConfig {
  SynthKind kind = SynthKind::kLatent;
  std::size_t replicas = 50;
  std::uint64_t seed = 0;
  // cfs-pm, cfs-lm, cfs-rm, cfs-nm, psm, mdm, l1, or cfs-<reducer><K> such
  // as cfs-npca50.
  std::vector<std::string> methods;
  SynthConfig synth;
  RefitMode refit = RefitMode::kExact;
  BinarizeRule binarize = BinarizeRule::kAboveMean;
  double beta = 0.0;
  double l1_penalty = 1e-2;
  ReducerOptions reducer_options;
  std::size_t threads = 0;
};

/// Selection settings behind a method name (not used for "l1").
SelectionConfig method_selection_config(const std::string& method, const RcExperimentConfig& config);

struct RcExperimentResult {
  std::vector<RCResult> results;  // in config.methods order
  std::vector<std::size_t> irrelevant_index;  // per replica
};

/// Only the treatment and the sampled irrelevant feature are tested per
/// replica; their p-values do not depend on the other candidates.
RcExperimentResult run_rc_experiment(const RcExperimentConfig& config);

/// Paired t-test over per-replica outcomes. Throws ErrorKind::kInput when
/// replica counts differ.
TestResult compare_methods(const RCResult& a, const RCResult& b);

// --- nested cross-validation ---------------------------------------------------

struct GridPoint {
  ClassifierKind kind = ClassifierKind::kRandomForest;
  ClassifierParams params;
};

/// Array of objects with "model" plus optional l2, l1, n_trees,
/// max_features, max_depth, min_samples_split.
std::vector<GridPoint> parse_grid(const nlohmann::json& j);

/// Stratified folds over `samples`: each class is shuffled and dealt
/// round-robin. Throws ErrorKind::kDegenerate if a class has fewer than two
/// members.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::size_t>& samples,
                                                       const std::vector<int>& y, std::size_t k,
                                                       std::uint64_t seed);

struct NestedCvResult {
  Metrics metrics;
  std::vector<int> predictions;       // outer leave-one-out predictions
  std::vector<std::size_t> chosen;    // grid index per outer fold
  std::size_t outer_fits = 0;
  std::size_t leakage_checks = 0;     // index-set assertions performed
};

/// Outer leave-one-out; inside each, a stratified k-fold grid search that
/// maximizes pooled F1 (ties to the earlier grid point). Every fold plan is
/// checked so that the held-out sample never enters training or tuning.
NestedCvResult nested_cv(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const std::vector<GridPoint>& grid, std::size_t inner_folds = 5,
                         std::uint64_t seed = 0, std::size_t threads = 0);

nlohmann::json to_json(const NestedCvResult& r);

// --- lexicon profiles ------------------------------------------------------------

/// Word -> categories; keys ending in '*' match by prefix.
struct Lexicon {
  std::map<std::string, std::vector<std::string>> exact;
  std::vector<std::pair<std::string, std::vector<std::string>>> prefixes;

  std::vector<std::string> categories() const;  // sorted, unique
  std::vector<std::string> categories_of(const std::string& word) const;
};

Lexicon parse_lexicon(const nlohmann::json& j);
Lexicon read_lexicon(const std::string& path);

struct CategoryProfile {
  std::string method;
  std::string dataset;
  std::vector<std::string> top_words;
  // Every lexicon category, in percent of |top_words|.
  std::map<std::string, double> percent;
};

CategoryProfile category_profile(const std::string& method, const std::string& dataset,
                                 const std::vector<std::string>& top_words, const Lexicon& lexicon);

nlohmann::json to_json(const CategoryProfile& p);

/// sb_j = mean over (dataset, category) of (consensus - percent_j)^2, the
/// consensus being the mean over methods. Throws ErrorKind::kInput unless
/// every method covers the same (dataset, category) grid.
std::map<std::string, double> stability(const std::vector<CategoryProfile>& profiles);

}  // namespace cfs
