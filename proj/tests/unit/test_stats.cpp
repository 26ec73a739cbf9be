#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfs/error.hpp"
#include "cfs/stats.hpp"
#include "oracles.hpp"

using namespace cfs;

namespace {

PairedOutcomes pairs_from_counts(std::size_t tn, std::size_t cp, std::size_t both_pos, std::size_t both_neg) {
  PairedOutcomes p;
  auto add = [&](double t, double c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      p.treated.push_back(t);
      p.control.push_back(c);
    }
  };
  add(0, 1, tn);
  add(1, 0, cp);
  add(1, 1, both_pos);
  add(0, 0, both_neg);
  return p;
}

}  // namespace

TEST_CASE("mcnemar statistic from counts") {
  const TestResult r = mcnemar_from_counts(10, 20);
  CHECK(std::abs(r.statistic - 10.0 / 3.0) < 1e-12);
  CHECK(std::abs(r.p_value - oracle::chi2_1_tail_by_integration(10.0 / 3.0)) < 1e-9);
  CHECK(r.p_value == doctest::Approx(0.0679).epsilon(1e-3));
  CHECK(r.direction == 1);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("mcnemar equal counts gives p = 1") {
  const TestResult r = mcnemar_from_counts(7, 7);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.direction == 0);
}

TEST_CASE("mcnemar with no discordant pairs is degenerate") {
  const TestResult r = mcnemar(pairs_from_counts(0, 0, 5, 5));
  CHECK(r.degenerate);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("mcnemar counts discordant pairs") {
  const TestResult r = mcnemar(pairs_from_counts(10, 20, 3, 4));
  CHECK(r.tn == 10);
  CHECK(r.cp == 20);
  CHECK(std::abs(r.statistic - 10.0 / 3.0) < 1e-12);
}

TEST_CASE("mcnemar marginal counting") {
  McNemarOptions opt;
  opt.counting = McNemarCounting::kMarginal;
  // treated negatives: 10 + 4 = 14; control positives: 10 + 3 = 13
  const TestResult r = mcnemar(pairs_from_counts(10, 20, 3, 4), opt);
  CHECK(r.tn == 14);
  CHECK(r.cp == 13);
  CHECK(r.statistic == doctest::Approx(1.0 / 27.0));
}

TEST_CASE("mcnemar continuity correction") {
  const TestResult r = mcnemar_from_counts(10, 20, true);
  CHECK(r.statistic == doctest::Approx(81.0 / 30.0));
}

TEST_CASE("mcnemar rejects non-binary outcomes") {
  PairedOutcomes p{{0, 2}, {1, 0}};
  CHECK_THROWS_AS(mcnemar(p), Error);
  PairedOutcomes q{{0, 1}, {1}};
  CHECK_THROWS_AS(mcnemar(q), Error);
}

TEST_CASE("mcnemar is symmetric in tn and cp") {
  for (std::size_t a = 0; a < 30; a += 3) {
    for (std::size_t b = 0; b < 30; b += 4) {
      const TestResult x = mcnemar_from_counts(a, b), y = mcnemar_from_counts(b, a);
      CHECK(x.statistic == y.statistic);
      CHECK(x.p_value == y.p_value);
    }
  }
}

TEST_CASE("mcnemar ignores concordant pairs") {
  const TestResult base = mcnemar(pairs_from_counts(6, 15, 0, 0));
  for (std::size_t extra = 1; extra < 50; extra += 7) {
    const TestResult more = mcnemar(pairs_from_counts(6, 15, extra, 2 * extra));
    CHECK(more.statistic == base.statistic);
    CHECK(more.p_value == base.p_value);
  }
}

TEST_CASE("tests are invariant to pair order") {
  std::mt19937_64 rng(3);
  PairedOutcomes p = pairs_from_counts(9, 17, 5, 8);
  PairedOutcomes num;
  std::normal_distribution<double> g;
  for (int i = 0; i < 40; ++i) {
    num.treated.push_back(g(rng));
    num.control.push_back(g(rng));
  }
  const TestResult m0 = mcnemar(p);
  const TestResult t0 = paired_t_test(num);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::size_t> perm(p.n_pairs());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PairedOutcomes q;
    for (auto i : perm) {
      q.treated.push_back(p.treated[i]);
      q.control.push_back(p.control[i]);
    }
    CHECK(mcnemar(q).statistic == m0.statistic);

    std::vector<std::size_t> perm2(num.n_pairs());
    std::iota(perm2.begin(), perm2.end(), 0);
    std::shuffle(perm2.begin(), perm2.end(), rng);
    PairedOutcomes r;
    for (auto i : perm2) {
      r.treated.push_back(num.treated[i]);
      r.control.push_back(num.control[i]);
    }
    CHECK(paired_t_test(r).p_value == doctest::Approx(t0.p_value).epsilon(1e-12));
  }
}

TEST_CASE("chi2_sf_1df against numerical integration") {
  CHECK(chi2_sf_1df(0.0) == 1.0);
  for (double x : {0.01, 0.5, 1.0, 2.0, 3.841, 6.635, 10.0, 20.0}) {
    CHECK(std::abs(chi2_sf_1df(x) - oracle::chi2_1_tail_by_integration(x)) < 1e-10);
  }
  CHECK(chi2_sf_1df(3.841) == doctest::Approx(0.05).epsilon(0.004));
  CHECK(chi2_sf_1df(6.635) == doctest::Approx(0.01).epsilon(0.004));
  CHECK_THROWS_AS(chi2_sf_1df(-1e-9), Error);
}

TEST_CASE("chi2_sf_1df is monotone") {
  double prev = 2.0;
  for (int i = 0; i < 1000; ++i) {
    const double v = chi2_sf_1df(0.03 * i);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("paired t-test hand example") {
  // differences 1, -1, 2, 0
  PairedOutcomes p{{1, 0, 2, 0}, {0, 1, 0, 0}};
  const TestResult r = paired_t_test(p);
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(r.statistic == doctest::Approx(0.5 / (sd / 2.0)).epsilon(1e-12));
  CHECK(r.statistic == doctest::Approx(0.7746).epsilon(1e-4));
  CHECK(std::abs(r.p_value - oracle::student_t_tail_by_integration(r.statistic, 3)) < 1e-9);
  CHECK(r.p_value == doctest::Approx(0.495).epsilon(0.01));
  CHECK(r.direction == 1);
}

TEST_CASE("paired t-test degenerate conventions") {
  const TestResult same = paired_t_test({{1, 2, 3}, {1, 2, 3}});
  CHECK(same.degenerate);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const TestResult shifted = paired_t_test({{2, 2, 2, 2}, {1, 1, 1, 1}});
  CHECK(shifted.degenerate);
  CHECK(shifted.p_value == 0.0);
  CHECK(std::isinf(shifted.statistic));
  CHECK_THROWS_AS(paired_t_test({{1}, {0}}), Error);
}

TEST_CASE("student t tail against numerical integration") {
  for (double df : {1.0, 3.0, 10.0, 49.0}) {
    for (double t : {0.1, 0.7746, 1.5, 2.5, 4.0}) {
      CHECK(std::abs(student_t_two_sided_p(t, df) - oracle::student_t_tail_by_integration(t, df)) < 1e-8);
    }
  }
}
