#include "cfs/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cfs/error.hpp"

namespace cfs {

bool FeatureMatrix::is_nonnegative() const {
  return values.size() == 0 || values.minCoeff() >= 0.0;
}

std::optional<std::size_t> FeatureMatrix::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    if (feature_names[j] == name) return j;
  }
  return std::nullopt;
}

void FeatureMatrix::validate() const {
  if (feature_names.size() != n_features()) {
    throw Error(ErrorKind::kDimension, "feature_names length does not match column count");
  }
}

void LabeledDataset::validate() const {
  features.validate();
  if (labels.size() != n_samples()) {
    throw Error(ErrorKind::kDimension, "labels length does not match sample count");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorKind::kInput, "labels must be 0 or 1");
  }
  if (counts && (counts->rows() != features.values.rows() ||
                 counts->cols() != features.values.cols())) {
    throw Error(ErrorKind::kDimension, "count matrix shape does not match features");
  }
}

bool LabeledDataset::has_both_labels() const {
  bool pos = false, neg = false;
  for (int y : labels) (y == 1 ? pos : neg) = true;
  return pos && neg;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  auto it = std::lower_bound(terms.begin(), terms.end(), term);
  if (it == terms.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - terms.begin());
}

Vocabulary build_vocabulary(const TokenizedCorpus& docs, std::size_t min_doc_freq) {
  if (docs.empty()) throw Error(ErrorKind::kInput, "empty corpus");
  if (min_doc_freq < 1) throw Error(ErrorKind::kConfig, "min_doc_freq must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::vector<std::string> unique(doc.begin(), doc.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& t : unique) ++df[t];
  }
  Vocabulary v;
  v.n_docs = docs.size();
  v.min_doc_freq = min_doc_freq;
  for (const auto& [term, count] : df) {
    if (count >= min_doc_freq) {
      v.terms.push_back(term);
      v.doc_freq.push_back(count);
    }
  }
  return v;
}

Eigen::MatrixXd count_matrix(const TokenizedCorpus& docs, const Vocabulary& vocab) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()),
                                                 static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& tok : docs[i]) {
      if (auto j = vocab.index_of(tok)) counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j)) += 1.0;
    }
  }
  return counts;
}

FeatureMatrix tfidf_matrix(const TokenizedCorpus& docs, const Vocabulary& vocab,
                           const TfidfOptions& options) {
  FeatureMatrix m;
  m.values = count_matrix(docs, vocab);
  m.feature_names = vocab.terms;
  const double n = static_cast<double>(vocab.n_docs);
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(vocab.doc_freq[j])));
    if (options.smooth_offset) idf += 1.0;
    m.values.col(static_cast<Eigen::Index>(j)) *= idf;
  }
  return m;
}

BinarizedTreatment binarize_treatment(std::span<const double> column, BinarizeRule rule) {
  if (column.empty()) throw Error(ErrorKind::kInput, "binarize_treatment: empty column");
  BinarizedTreatment out;
  out.values.resize(column.size());
  double threshold = 0.0;
  if (rule == BinarizeRule::kAboveMean) {
    double sum = 0.0;
    for (double v : column) sum += v;
    threshold = sum / static_cast<double>(column.size());
  }
  std::size_t ones = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    out.values[i] = column[i] > threshold ? 1 : 0;
    ones += out.values[i];
  }
  out.degenerate = ones == 0 || ones == column.size();
  return out;
}

std::vector<CorpusRecord> parse_jsonl_corpus(std::istream& in) {
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kInput, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j.contains("label") ||
        !j["text"].is_string() || !j["label"].is_number_integer()) {
      throw Error(ErrorKind::kInput,
                  "corpus line " + std::to_string(line_no) + ": expected {\"text\": string, \"label\": 0|1}");
    }
    CorpusRecord r;
    r.text = j["text"].get<std::string>();
    r.label = j["label"].get<int>();
    if (r.label != 0 && r.label != 1) {
      throw Error(ErrorKind::kInput, "corpus line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<CorpusRecord> read_jsonl_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read corpus " + path);
  return parse_jsonl_corpus(in);
}

LabeledDataset corpus_dataset(const std::vector<CorpusRecord>& records,
                              const CorpusOptions& options) {
  TokenizedCorpus docs;
  docs.reserve(records.size());
  for (const auto& r : records) docs.push_back(tokenize(r.text));
  Vocabulary vocab = build_vocabulary(docs, options.min_doc_freq);
  LabeledDataset ds;
  ds.features = tfidf_matrix(docs, vocab, options.tfidf);
  ds.counts = count_matrix(docs, vocab);
  for (const auto& r : records) ds.labels.push_back(r.label);
  return ds;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInput, "dataset line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_dense_csv(const FeatureMatrix& matrix, std::ostream& out,
                     const std::vector<int>* labels) {
  matrix.validate();
  for (std::size_t j = 0; j < matrix.n_features(); ++j) {
    if (j) out << ',';
    out << matrix.feature_names[j];
  }
  if (labels) out << (matrix.n_features() ? "," : "") << "label";
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(matrix.values(i, j));
    }
    if (labels) out << (matrix.n_features() ? "," : "") << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

void write_triplet_csv(const FeatureMatrix& matrix, std::ostream& out) {
  matrix.validate();
  for (std::size_t j = 0; j < matrix.n_features(); ++j) {
    if (j) out << ',';
    out << matrix.feature_names[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      const double v = matrix.values(i, j);
      if (v != 0.0) out << i << ',' << j << ',' << format_double(v) << '\n';
    }
  }
}

LabeledDataset parse_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kInput, "dataset CSV is empty");
  auto header = split_csv_line(line);
  auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw Error(ErrorKind::kInput, "dataset CSV lacks a label column");
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());

  LabeledDataset ds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_col) ds.features.feature_names.push_back(header[j]);
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::kInput, "dataset line " + std::to_string(line_no) + ": wrong cell count");
    }
    std::vector<double> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_col) {
        ds.labels.push_back(static_cast<int>(parse_double(cells[j], line_no)));
      } else {
        row.push_back(parse_double(cells[j], line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  ds.features.values.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(ds.features.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.features.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  ds.validate();
  return ds;
}

LabeledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read dataset " + path);
  return parse_dataset_csv(in);
}

}  // namespace cfs
