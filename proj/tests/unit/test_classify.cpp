#include <doctest.h>

#include <cmath>
#include <random>

#include "cfs/classify.hpp"
#include "cfs/error.hpp"

using namespace cfs;
using Eigen::MatrixXd;

namespace {

struct Data {
  MatrixXd x;
  std::vector<int> y;
};

Data blobs(std::size_t n, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Data d{MatrixXd(static_cast<Eigen::Index>(n), 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    for (int j = 0; j < 3; ++j) d.x(i, j) = g(rng) + (j == 0 ? (label ? gap : -gap) : 0.0);
    d.y.push_back(label);
  }
  return d;
}

}  // namespace

TEST_CASE("every classifier separates well separated blobs") {
  const Data train_set = blobs(100, 4.0, 1), test_set = blobs(60, 4.0, 2);
  for (auto kind : {ClassifierKind::kLogreg, ClassifierKind::kLogregL1, ClassifierKind::kRandomForest}) {
    ClassifierParams p;
    p.n_trees = 25;
    const ClassifierModel m = train(kind, train_set.x, train_set.y, p, 3);
    const Metrics metrics = evaluate(test_set.y, predict(m, test_set.x));
    CHECK(metrics.accuracy == 1.0);
    CHECK(metrics.f1 == 1.0);
  }
}

TEST_CASE("a fully grown tree without bootstrap memorizes distinct rows") {
  const Data d = blobs(80, 0.2, 4);
  ClassifierParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.max_features = 3;
  const ClassifierModel m = train(ClassifierKind::kRandomForest, d.x, d.y, p, 0);
  CHECK(predict(m, d.x) == d.y);
  CHECK(std::isnan(m.oob_accuracy));
}

TEST_CASE("max_depth bounds every tree") {
  const Data d = blobs(80, 0.5, 5);
  ClassifierParams p;
  p.n_trees = 10;
  p.max_depth = 2;
  const ClassifierModel m = train(ClassifierKind::kRandomForest, d.x, d.y, p, 1);
  for (const auto& t : m.trees) CHECK(t.depth() <= 2);
}

TEST_CASE("forest is reproducible per seed and independent of threads") {
  const Data d = blobs(120, 1.0, 6);
  ClassifierParams p;
  p.n_trees = 20;
  p.threads = 1;
  const auto a = predict(train(ClassifierKind::kRandomForest, d.x, d.y, p, 9), d.x);
  p.threads = 4;
  const ClassifierModel m = train(ClassifierKind::kRandomForest, d.x, d.y, p, 9);
  CHECK(predict(m, d.x) == a);
  CHECK(m.oob_accuracy >= 0.0);
  CHECK(m.oob_accuracy <= 1.0);
}

TEST_CASE("training rejects degenerate input") {
  const Data d = blobs(20, 1.0, 7);
  const std::vector<int> ones(20, 1);
  CHECK_THROWS_AS(train(ClassifierKind::kLogreg, d.x, ones), Error);
  const ClassifierModel m = train(ClassifierKind::kLogreg, d.x, d.y);
  CHECK_THROWS_AS(predict(m, d.x.leftCols(2)), Error);
}

TEST_CASE("metric conventions on a hand example") {
  const std::vector<int> truth{1, 1, 0, 0, 1, 0};
  const std::vector<int> pred{1, 0, 0, 1, 1, 0};
  const Metrics m = evaluate(truth, pred);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 2);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("zero denominators are reported as 0 and flagged") {
  const Metrics none = evaluate({0, 0, 1}, {0, 0, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.precision_undefined);
  CHECK(none.f1 == 0.0);
  const Metrics empty = evaluate({0, 0}, {0, 0});
  CHECK(empty.recall_undefined);
  CHECK(empty.f1_undefined);
  CHECK(empty.accuracy == 1.0);
}

TEST_CASE("l1 ranking puts the informative feature first") {
  const Data d = blobs(200, 1.5, 8);
  FeatureMatrix fm{d.x, {"signal", "noise1", "noise2"}};
  const FeatureReport r = l1_feature_rank(fm, d.y, 0.05);
  CHECK(r.features.front().name == "signal");
  CHECK_FALSE(r.ranking_degenerate);
  for (const auto& f : r.features) CHECK((*f.p_value > 0.0 && *f.p_value <= 1.0));
  const FeatureReport flat = l1_feature_rank(fm, d.y, 100.0);
  CHECK(flat.ranking_degenerate);
}

TEST_CASE("classifier names round trip") {
  for (auto k : {ClassifierKind::kLogreg, ClassifierKind::kLogregL1, ClassifierKind::kRandomForest})
    CHECK(parse_classifier_kind(to_string(k)) == k);
  CHECK(parse_classifier_kind("random_forest") == ClassifierKind::kRandomForest);
  CHECK_THROWS_AS(parse_classifier_kind("svm"), Error);
}
