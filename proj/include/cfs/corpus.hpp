#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfs {

/// N samples x D features with a name per feature. Corpus-derived matrices
/// are nonnegative; synthetic ones are not, so nonnegativity is a query
/// rather than a construction invariant.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> feature_names;

  std::size_t n_samples() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(values.cols()); }
  bool is_nonnegative() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws ErrorKind::kDimension when names and columns disagree.
  void validate() const;
};

/// Ground truth carried by synthetic datasets.
struct GroundTruth {
  std::size_t treatment_index = 0;
  std::vector<std::size_t> causal_indices;
  std::vector<std::size_t> irrelevant_indices;
  // (treated sample, control twin)
  std::vector<std::pair<std::size_t, std::size_t>> twin_pairs;
  // N x K latent matrix, not part of the observed features.
  Eigen::MatrixXd latent;
};

struct LabeledDataset {
  FeatureMatrix features;
  std::vector<int> labels;
  // Raw term counts aligned with `features` (corpus datasets only).
  std::optional<Eigen::MatrixXd> counts;
  std::optional<GroundTruth> truth;

  std::size_t n_samples() const { return features.n_samples(); }
  std::size_t n_features() const { return features.n_features(); }
  /// Shapes agree and every label is 0 or 1.
  void validate() const;
  bool has_both_labels() const;
};

// --- tokenization and vocabulary -------------------------------------------

/// Lowercased runs of ASCII letters. Everything else, including digits,
/// punctuation and non-ASCII bytes, separates tokens.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
  std::vector<std::string> terms;      // sorted, unique
  std::vector<std::size_t> doc_freq;   // aligned with terms
  std::size_t n_docs = 0;
  std::size_t min_doc_freq = 1;

  std::size_t size() const { return terms.size(); }
  std::optional<std::size_t> index_of(std::string_view term) const;
};

using TokenizedCorpus = std::vector<std::vector<std::string>>;

/// Terms whose document frequency is at least `min_doc_freq`.
Vocabulary build_vocabulary(const TokenizedCorpus& docs, std::size_t min_doc_freq);

/// Raw term counts, N x |vocab|. Out-of-vocabulary tokens are dropped.
Eigen::MatrixXd count_matrix(const TokenizedCorpus& docs, const Vocabulary& vocab);

struct TfidfOptions {
  // true:  tf * (ln((1 + N) / (1 + df)) + 1)
  // false: tf *  ln((1 + N) / (1 + df))
  bool smooth_offset = true;
};

/// N and df come from the vocabulary, so a vocabulary built on training
/// documents can weight held-out documents.
FeatureMatrix tfidf_matrix(const TokenizedCorpus& docs, const Vocabulary& vocab,
                           const TfidfOptions& options = {});

// --- treatment binarization ------------------------------------------------

enum class BinarizeRule { kNonzero, kAboveMean };

struct BinarizedTreatment {
  std::vector<std::uint8_t> values;
  // Output is constant (all zeros or all ones).
  bool degenerate = false;
};

BinarizedTreatment binarize_treatment(std::span<const double> column,
                                      BinarizeRule rule);

// --- corpus files ------------------------------------------------------------

struct CorpusRecord {
  std::string text;
  int label = 0;
};

/// One JSON object per line: {"text": string, "label": 0|1}.
std::vector<CorpusRecord> read_jsonl_corpus(const std::string& path);
std::vector<CorpusRecord> parse_jsonl_corpus(std::istream& in);

struct CorpusOptions {
  std::size_t min_doc_freq = 1;
  TfidfOptions tfidf;
};

/// TF*IDF features plus the raw counts they were computed from.
LabeledDataset corpus_dataset(const std::vector<CorpusRecord>& records,
                              const CorpusOptions& options = {});

/// Dense CSV with a header row of feature names; when labels are given a
/// trailing "label" column is appended.
void write_dense_csv(const FeatureMatrix& matrix, std::ostream& out,
                     const std::vector<int>* labels = nullptr);

/// Coordinate triplets (row,col,value) of the nonzero entries, preceded by a
/// header row of feature names.
void write_triplet_csv(const FeatureMatrix& matrix, std::ostream& out);

/// Reads the dense CSV written by write_dense_csv; the "label" column is
/// required.
LabeledDataset read_dataset_csv(const std::string& path);
LabeledDataset parse_dataset_csv(std::istream& in);

}  // namespace cfs
