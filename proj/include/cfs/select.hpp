#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cfs/corpus.hpp"
#include "cfs/dimred.hpp"
#include "cfs/matching.hpp"
#include "cfs/stats.hpp"

namespace cfs {

enum class RefitMode {
  // Refit the reducer on X without the candidate column, for every candidate.
  kExact,
  // Fit once on all of X; each candidate's column is zeroed before
  // projecting.
  kSharedModel,
};

enum class OutcomeTest { kAuto, kMcNemar, kPairedT };

struct SelectionConfig {
  int schema_version = 1;
  // "none", "provided" (the dataset's ground-truth latent matrix) or a
  // reducer name: npca, spca, grp, mbdl, lda.
  std::string reducer = "npca";
  std::size_t k = 10;
  MatchStrategy strategy = MatchStrategy::kLatentNnm;
  double beta = 0.0;           // cosine gate for the NNM strategies
  double psm_caliper = INFINITY;
  double psm_l2 = 1e-2;
  double mdm_reg = 1e-3;       // lambda = mdm_reg * trace(S) / D
  double alpha = 0.05;
  BinarizeRule binarize = BinarizeRule::kNonzero;
  RefitMode refit = RefitMode::kExact;
  std::uint64_t seed = 0;
  bool with_replacement = true;
  OutcomeTest test = OutcomeTest::kAuto;
  McNemarOptions mcnemar;
  // When set, only these features are tested; the rest are reported as
  // skipped.
  std::optional<std::vector<std::string>> candidates;
  ReducerOptions reducer_options;
  std::size_t threads = 0;  // 0: CFS_THREADS or hardware concurrency

  /// Throws ErrorKind::kConfig on an invariant violation.
  void validate() const;
};

nlohmann::json to_json(const SelectionConfig& config);
/// Strict: unknown keys and wrong types raise ErrorKind::kConfig.
SelectionConfig selection_config_from_json(const nlohmann::json& j);
SelectionConfig read_selection_config(const std::string& path);

struct FeatureResult {
  std::string name;
  std::size_t index = 0;
  std::optional<double> p_value;  // empty when skipped
  double statistic = 0.0;
  int direction = 0;
  std::size_t n_pairs = 0;
  std::size_t tn = 0;
  std::size_t cp = 0;
  bool degenerate = false;
  std::string skip_reason;

  bool tested() const { return p_value.has_value(); }
};

struct FeatureReport {
  std::string method;
  nlohmann::json config;
  // One entry per input feature, in rank order.
  std::vector<FeatureResult> features;
  // Set when the scores behind the ranking carry no information (e.g. all
  // L1 coefficients are zero).
  bool ranking_degenerate = false;
  // Not serialized, so reruns produce identical report files.
  double runtime_seconds = 0.0;

  std::size_t n_tested() const;
  std::size_t n_skipped() const;
  const FeatureResult* find(std::string_view name) const;
};

/// Ascending p-value, ties by name, skipped features last (by name).
void rank_features(FeatureReport& report);
std::vector<std::string> ranked_names(const FeatureReport& report);

/// Tested features with p <= alpha, in rank order.
std::vector<std::string> select_by_alpha(const FeatureReport& report, double alpha);

/// Runs the per-feature loop: binarize, split, represent the remaining
/// features, match, test. Throws ErrorKind::kInput for an empty dataset or
/// fewer than two features.
FeatureReport run_selection(const LabeledDataset& data, const SelectionConfig& config);

nlohmann::json to_json(const FeatureReport& report);
FeatureReport feature_report_from_json(const nlohmann::json& j);
FeatureReport read_feature_report(const std::string& path);
/// feature,p_value,statistic,direction,n_pairs,skip_reason
void write_report_csv(const FeatureReport& report, std::ostream& out);

std::string to_string(BinarizeRule rule);
BinarizeRule parse_binarize_rule(const std::string& name);

}  // namespace cfs
