#include "cfs/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "cfs/error.hpp"

namespace cfs {

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

}  // namespace

double chi2_sf_1df(double x) {
  if (!(x >= 0.0)) throw Error(ErrorKind::kDomain, "chi2_sf_1df: x must be >= 0");
  if (std::isinf(x)) return 0.0;
  return std::erfc(std::sqrt(x / 2.0));
}

TestResult mcnemar_from_counts(std::size_t tn, std::size_t cp,
                               bool continuity_correction) {
  TestResult r;
  r.tn = tn;
  r.cp = cp;
  r.direction = cp > tn ? 1 : (cp < tn ? -1 : 0);
  const double total = static_cast<double>(tn + cp);
  if (tn + cp == 0) {
    r.degenerate = true;
    return r;
  }
  double diff = std::abs(static_cast<double>(tn) - static_cast<double>(cp));
  if (continuity_correction) diff = std::max(0.0, diff - 1.0);
  r.statistic = diff * diff / total;
  r.p_value = chi2_sf_1df(r.statistic);
  return r;
}

TestResult mcnemar(const PairedOutcomes& paired, const McNemarOptions& options) {
  if (paired.treated.size() != paired.control.size()) {
    throw Error(ErrorKind::kInput, "mcnemar: treated/control lengths differ");
  }
  std::size_t tn = 0;
  std::size_t cp = 0;
  for (std::size_t i = 0; i < paired.n_pairs(); ++i) {
    const double t = paired.treated[i];
    const double c = paired.control[i];
    if (!is_binary(t) || !is_binary(c)) {
      throw Error(ErrorKind::kInput, "mcnemar: outcomes must be 0 or 1");
    }
    if (options.counting == McNemarCounting::kDiscordantPairs) {
      if (t == 0.0 && c == 1.0) ++tn;
      if (t == 1.0 && c == 0.0) ++cp;
    } else {
      if (t == 0.0) ++tn;
      if (c == 1.0) ++cp;
    }
  }
  TestResult r = mcnemar_from_counts(tn, cp, options.continuity_correction);
  if (options.counting == McNemarCounting::kMarginal) {
    // Under the marginal reading more negative treated members means the
    // treatment lowers the outcome.
    r.direction = tn > cp ? -1 : (tn < cp ? 1 : 0);
  }
  return r;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::kDomain, "student_t: df must be > 0");
  if (std::isnan(t)) throw Error(ErrorKind::kDomain, "student_t: t is NaN");
  if (std::isinf(t)) return 0.0;
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TestResult paired_t_test(const PairedOutcomes& paired) {
  if (paired.treated.size() != paired.control.size()) {
    throw Error(ErrorKind::kInput, "paired_t_test: treated/control lengths differ");
  }
  const std::size_t n = paired.n_pairs();
  if (n < 2) throw Error(ErrorKind::kInput, "paired_t_test: need at least two pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += paired.treated[i] - paired.control[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = paired.treated[i] - paired.control[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TestResult r;
  r.direction = mean > 0 ? 1 : (mean < 0 ? -1 : 0);
  if (sd == 0.0) {
    r.degenerate = true;
    if (mean == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = std::copysign(std::numeric_limits<double>::infinity(), mean);
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_value = student_t_two_sided_p(r.statistic, static_cast<double>(n - 1));
  return r;
}

}  // namespace cfs
