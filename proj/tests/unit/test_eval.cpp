#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cfs/error.hpp"
#include "cfs/eval.hpp"

using namespace cfs;
using Eigen::MatrixXd;

namespace {

FeatureReport report_with(std::vector<std::pair<std::string, std::optional<double>>> entries) {
  FeatureReport r;
  std::size_t i = 0;
  for (auto& [name, p] : entries) {
    FeatureResult f;
    f.name = name;
    f.index = i++;
    f.p_value = p;
    if (!p) f.skip_reason = "not a candidate";
    r.features.push_back(f);
  }
  return r;
}

Lexicon small_lexicon() {
  return parse_lexicon(nlohmann::json{{"happy", {"posemo"}}, {"sad", {"negemo"}}, {"love*", {"posemo", "social"}}});
}

}  // namespace

TEST_CASE("rank outcome: win, tie, loss and skipped features") {
  const FeatureReport r = report_with({{"t", 0.01}, {"o", 0.2}, {"same", 0.01}, {"skip", std::nullopt}});
  CHECK(rank_outcome(r, 0, 1) == 1.0);
  CHECK(rank_outcome(r, 1, 0) == 0.0);
  CHECK(rank_outcome(r, 0, 2) == 0.5);
  CHECK(rank_outcome(r, 1, 3) == 1.0);
  CHECK(rank_outcome(r, 3, 1) == 0.0);
  const FeatureReport both = report_with({{"a", std::nullopt}, {"b", std::nullopt}});
  CHECK(rank_outcome(both, 0, 1) == 0.5);
}

TEST_CASE("rank correctness is the mean outcome and is invariant to monotone p transforms") {
  std::vector<FeatureReport> reports;
  std::vector<GroundTruth> truths;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  for (int r = 0; r < 20; ++r) {
    std::vector<std::pair<std::string, std::optional<double>>> e;
    for (int j = 0; j < 6; ++j) e.emplace_back("f" + std::to_string(j), u(rng));
    reports.push_back(report_with(e));
    GroundTruth t;
    t.treatment_index = 0;
    t.irrelevant_indices = {1, 2, 3, 4, 5};
    truths.push_back(t);
  }
  const RCResult rc = rank_correctness("m", reports, truths, 7);
  double mean = 0.0;
  for (std::size_t r = 0; r < 20; ++r) {
    const std::size_t o = sample_irrelevant(truths[r], 7, r);
    CHECK(rc.outcomes[r] == rank_outcome(reports[r], 0, o));
    mean += rc.outcomes[r];
  }
  CHECK(rc.rc == doctest::Approx(mean / 20));
  for (auto& rep : reports)
    for (auto& f : rep.features) f.p_value = std::pow(*f.p_value, 3.0) * 0.5;
  CHECK(rank_correctness("m", reports, truths, 7).outcomes == rc.outcomes);
}

TEST_CASE("rank correctness input errors") {
  std::vector<FeatureReport> reports{report_with({{"a", 0.1}})};
  CHECK_THROWS_AS(rank_correctness("m", reports, {}, 0), Error);
  GroundTruth t;
  CHECK_THROWS_AS(rank_correctness("m", reports, {t}, 0), Error);
}

TEST_CASE("compare methods is a paired t-test on outcomes") {
  RCResult a{"a", 0.0, {1, 1, 0.5, 1, 0, 1}}, b{"b", 0.0, {0, 1, 0, 0, 0, 0.5}};
  const TestResult t = compare_methods(a, b);
  CHECK(t.direction == 1);
  CHECK(t.p_value < 0.1);
  RCResult c{"c", 0.0, {1, 0}};
  CHECK_THROWS_AS(compare_methods(a, c), Error);
}

TEST_CASE("small rc experiment on latent data") {
  RcExperimentConfig c;
  c.replicas = 3;
  c.seed = 1;
  c.methods = {"cfs-pm", "cfs-rm", "l1"};
  c.synth.n_base = 60;
  c.threads = 1;
  const RcExperimentResult a = run_rc_experiment(c);
  REQUIRE(a.results.size() == 3);
  for (const auto& r : a.results) {
    CHECK(r.n_replicas() == 3);
    CHECK((r.rc >= 0.0 && r.rc <= 1.0));
  }
  c.threads = 3;
  const RcExperimentResult b = run_rc_experiment(c);
  for (std::size_t m = 0; m < 3; ++m) CHECK(a.results[m].outcomes == b.results[m].outcomes);
  CHECK(a.irrelevant_index == b.irrelevant_index);
}

TEST_CASE("method names map to selection settings") {
  RcExperimentConfig c;
  CHECK(method_selection_config("cfs-pm", c).strategy == MatchStrategy::kGroundTruth);
  CHECK(method_selection_config("cfs-rm", c).strategy == MatchStrategy::kRandom);
  CHECK(method_selection_config("cfs-nm", c).strategy == MatchStrategy::kSurfaceNnm);
  CHECK(method_selection_config("cfs-lm", c).reducer == "provided");
  CHECK(method_selection_config("psm", c).strategy == MatchStrategy::kPsm);
  CHECK(method_selection_config("mdm", c).strategy == MatchStrategy::kMdm);
  const SelectionConfig s = method_selection_config("cfs-spca50", c);
  CHECK(s.reducer == "spca");
  CHECK(s.k == 50);
  CHECK_THROWS_AS(method_selection_config("cfs-foo", c), Error);
}

TEST_CASE("stratified folds partition the samples and balance classes") {
  std::vector<int> y;
  std::vector<std::size_t> samples;
  for (std::size_t i = 0; i < 23; ++i) {
    samples.push_back(i);
    y.push_back(i < 9 ? 1 : 0);
  }
  const auto folds = stratified_folds(samples, y, 4, 2);
  REQUIRE(folds.size() == 4);
  std::multiset<std::size_t> all;
  for (const auto& f : folds) {
    all.insert(f.begin(), f.end());
    const auto pos = std::count_if(f.begin(), f.end(), [&](std::size_t i) { return y[i] == 1; });
    CHECK((pos == 2 || pos == 3));
  }
  CHECK(all == std::multiset<std::size_t>(samples.begin(), samples.end()));
  std::vector<int> one_pos(23, 0);
  one_pos[0] = 1;
  CHECK_THROWS_AS(stratified_folds(samples, one_pos, 4, 2), Error);
}

TEST_CASE("nested cv with one grid point equals plain leave-one-out") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  MatrixXd x(30, 2);
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    y.push_back(i % 2);
    x(i, 0) = g(rng) + (i % 2 ? 1.0 : -1.0);
    x(i, 1) = g(rng);
  }
  GridPoint p{ClassifierKind::kLogreg, {}};
  const NestedCvResult r = nested_cv(x, y, {p}, 3, 1, 1);
  CHECK(r.outer_fits == 30);
  CHECK(r.leakage_checks > 0);
  for (int i = 0; i < 30; ++i) {
    MatrixXd xt(29, 2);
    std::vector<int> yt;
    for (int j = 0, k = 0; j < 30; ++j)
      if (j != i) {
        xt.row(k++) = x.row(j);
        yt.push_back(y[j]);
      }
    const ClassifierModel m = train(ClassifierKind::kLogreg, xt, yt, p.params, 0);
    CHECK(predict(m, x.row(i))[0] == r.predictions[static_cast<std::size_t>(i)]);
  }
  const NestedCvResult again = nested_cv(x, y, {p, GridPoint{ClassifierKind::kLogreg, {.l2 = 10.0}}}, 3, 1, 2);
  CHECK(again.chosen.size() == 30);
  CHECK(again.predictions == nested_cv(x, y, {p, GridPoint{ClassifierKind::kLogreg, {.l2 = 10.0}}}, 3, 1, 1).predictions);
}

TEST_CASE("grid parsing is strict") {
  const auto grid = parse_grid(nlohmann::json::parse(R"([{"model":"rf","n_trees":10},{"model":"logreg","l2":0.5}])"));
  REQUIRE(grid.size() == 2);
  CHECK(grid[0].params.n_trees == 10);
  CHECK(grid[1].params.l2 == 0.5);
  CHECK_THROWS_AS(parse_grid(nlohmann::json::parse(R"([{"model":"rf","trees":10}])")), Error);
  CHECK_THROWS_AS(parse_grid(nlohmann::json::parse(R"([])")), Error);
}

TEST_CASE("lexicon exact and prefix lookup") {
  const Lexicon lex = small_lexicon();
  CHECK(lex.categories() == std::vector<std::string>{"negemo", "posemo", "social"});
  CHECK(lex.categories_of("lovely") == std::vector<std::string>{"posemo", "social"});
  CHECK(lex.categories_of("happy") == std::vector<std::string>{"posemo"});
  CHECK(lex.categories_of("glove").empty());
}

TEST_CASE("category profile counts words toward every matching category") {
  const CategoryProfile p = category_profile("m", "d", {"happy", "loved", "table", "sad"}, small_lexicon());
  CHECK(p.percent.at("posemo") == doctest::Approx(50.0));
  CHECK(p.percent.at("social") == doctest::Approx(25.0));
  CHECK(p.percent.at("negemo") == doctest::Approx(25.0));
  CHECK(p.percent.size() == 3);
}

TEST_CASE("stability: identical profiles give zero") {
  const Lexicon lex = small_lexicon();
  const std::vector<std::string> words{"happy", "sad"};
  const auto sb = stability({category_profile("a", "d", words, lex), category_profile("b", "d", words, lex)});
  CHECK(sb.at("a") == 0.0);
  CHECK(sb.at("b") == 0.0);
}

TEST_CASE("stability: hand computed shift is symmetric for two methods") {
  CategoryProfile a{"a", "d", {}, {{"x", 10.0}, {"y", 0.0}}};
  CategoryProfile b{"b", "d", {}, {{"x", 30.0}, {"y", 4.0}}};
  const auto sb = stability({a, b});
  // Consensus (20, 2): a -> (100 + 4) / 2, b -> (100 + 4) / 2.
  CHECK(sb.at("a") == doctest::Approx(52.0));
  CHECK(sb.at("b") == doctest::Approx(52.0));
  CategoryProfile c{"c", "d", {}, {{"x", 20.0}, {"y", 2.0}}};
  const auto three = stability({a, b, c});
  CHECK(three.at("c") == doctest::Approx(0.0));
  CHECK(three.at("a") == doctest::Approx(three.at("b")));
}

TEST_CASE("stability: two mirrored methods score exactly one") {
  CategoryProfile u{"u", "d", {}, {{"x", 0.0}, {"y", 2.0}}};
  CategoryProfile v{"v", "d", {}, {{"x", 2.0}, {"y", 0.0}}};
  const auto sb = stability({u, v});
  CHECK(std::abs(sb.at("u") - 1.0) <= 1e-12);
  CHECK(std::abs(sb.at("v") - 1.0) <= 1e-12);
}

TEST_CASE("stability is invariant to a shift shared by every method") {
  std::vector<CategoryProfile> profiles{{"a", "d1", {}, {{"x", 10.0}, {"y", 3.0}}},
                                        {"b", "d1", {}, {{"x", 14.0}, {"y", 1.0}}},
                                        {"c", "d1", {}, {{"x", 9.0}, {"y", 8.0}}}};
  const auto base = stability(profiles);
  for (auto& p : profiles) {
    p.percent["x"] += 25.0;
    p.percent["y"] -= 0.5;
  }
  const auto shifted = stability(profiles);
  for (const auto& [method, value] : base) CHECK(shifted.at(method) == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("stability rejects mismatched grids") {
  CategoryProfile a{"a", "d", {}, {{"x", 10.0}}};
  CategoryProfile b{"b", "d", {}, {{"y", 10.0}}};
  CHECK_THROWS_AS(stability({a, b}), Error);
}
