#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfs/corpus.hpp"
#include "cfs/error.hpp"

using namespace cfs;

TEST_CASE("tokenize lowercases ASCII letter runs") {
  const auto t = tokenize("Hello, WORLD! it's 2024-ok");
  REQUIRE(t.size() == 5);
  CHECK(t[0] == "hello");
  CHECK(t[1] == "world");
  CHECK(t[2] == "it");
  CHECK(t[3] == "s");
  CHECK(t[4] == "ok");
  CHECK(tokenize("").empty());
  CHECK(tokenize("123 !!").empty());
}

TEST_CASE("vocabulary respects minimum document frequency") {
  const TokenizedCorpus docs = {{"a", "b", "b"}, {"b", "c"}, {"a", "b"}};
  const Vocabulary v1 = build_vocabulary(docs, 1);
  CHECK(v1.terms == std::vector<std::string>{"a", "b", "c"});
  CHECK(v1.doc_freq == std::vector<std::size_t>{2, 3, 1});
  const Vocabulary v2 = build_vocabulary(docs, 2);
  CHECK(v2.terms == std::vector<std::string>{"a", "b"});
  CHECK(v2.index_of("b") == 1u);
  CHECK_FALSE(v2.index_of("c").has_value());
  CHECK_THROWS_AS(build_vocabulary({}, 1), Error);
}

TEST_CASE("tfidf weights") {
  const TokenizedCorpus docs = {{"a", "b", "b"}, {"b", "c"}, {"a", "b"}};
  const Vocabulary v = build_vocabulary(docs, 1);
  const FeatureMatrix m = tfidf_matrix(docs, v);
  const double idf_a = std::log(4.0 / 3.0) + 1.0;
  const double idf_b = std::log(4.0 / 4.0) + 1.0;
  const double idf_c = std::log(4.0 / 2.0) + 1.0;
  CHECK(m.values(0, 0) == doctest::Approx(idf_a));
  CHECK(m.values(0, 1) == doctest::Approx(2 * idf_b));
  CHECK(m.values(1, 2) == doctest::Approx(idf_c));
  CHECK(m.values(1, 0) == 0.0);
  CHECK(m.is_nonnegative());
  TfidfOptions raw;
  raw.smooth_offset = false;
  // A term in every document carries no weight without the +1 offset.
  CHECK(tfidf_matrix(docs, v, raw).values.col(1).isZero());
}

TEST_CASE("binarize treatment rules") {
  const std::vector<double> col = {0.0, 0.5, 2.0, 0.0};
  const auto nz = binarize_treatment(col, BinarizeRule::kNonzero);
  CHECK(nz.values == std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK_FALSE(nz.degenerate);
  const auto am = binarize_treatment(col, BinarizeRule::kAboveMean);
  CHECK(am.values == std::vector<std::uint8_t>{0, 0, 1, 0});
  const std::vector<double> zeros(5, 0.0);
  CHECK(binarize_treatment(zeros, BinarizeRule::kNonzero).degenerate);
  const std::vector<double> flat(5, 3.0);
  CHECK(binarize_treatment(flat, BinarizeRule::kAboveMean).degenerate);
}

TEST_CASE("jsonl corpus parsing and dataset construction") {
  std::istringstream in(
      "{\"text\": \"good film\", \"label\": 1}\n"
      "\n"
      "{\"text\": \"bad film\", \"label\": 0}\n");
  const auto records = parse_jsonl_corpus(in);
  REQUIRE(records.size() == 2);
  const LabeledDataset d = corpus_dataset(records);
  CHECK(d.features.feature_names == std::vector<std::string>{"bad", "film", "good"});
  CHECK(d.labels == std::vector<int>{1, 0});
  REQUIRE(d.counts);
  CHECK((*d.counts)(0, 2) == 1.0);
  CHECK(d.has_both_labels());
  d.validate();

  std::istringstream bad("{\"text\": \"x\", \"label\": 3}\n");
  CHECK_THROWS_AS(parse_jsonl_corpus(bad), Error);
  std::istringstream broken("{not json\n");
  CHECK_THROWS_AS(parse_jsonl_corpus(broken), Error);
}

TEST_CASE("dense csv round trip") {
  FeatureMatrix m;
  m.values.resize(2, 3);
  m.values << 1.5, -2.0, 0.1, 3.0, 1e-17, 7.0;
  m.feature_names = {"x", "y", "z"};
  const std::vector<int> labels = {0, 1};
  std::stringstream ss;
  write_dense_csv(m, ss, &labels);
  const LabeledDataset back = parse_dataset_csv(ss);
  CHECK(back.features.feature_names == m.feature_names);
  CHECK(back.features.values == m.values);
  CHECK(back.labels == labels);
}

TEST_CASE("triplet csv lists nonzeros") {
  FeatureMatrix m;
  m.values = Eigen::MatrixXd::Zero(2, 2);
  m.values(1, 0) = 4.0;
  m.feature_names = {"a", "b"};
  std::ostringstream ss;
  write_triplet_csv(m, ss);
  CHECK(ss.str().find("1,0,4") != std::string::npos);
}

TEST_CASE("dataset validation") {
  LabeledDataset d;
  d.features.values = Eigen::MatrixXd::Zero(3, 2);
  d.features.feature_names = {"a"};
  d.labels = {0, 1, 0};
  CHECK_THROWS_AS(d.validate(), Error);
  d.features.feature_names = {"a", "b"};
  d.labels = {0, 2, 0};
  CHECK_THROWS_AS(d.validate(), Error);
}
