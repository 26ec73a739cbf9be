#pragma once

#include <cstddef>
#include <vector>

namespace cfs {

/// Outcomes of matched pairs; element i of each list belongs to pair i.
struct PairedOutcomes {
  std::vector<double> treated;
  std::vector<double> control;

  std::size_t n_pairs() const { return treated.size(); }
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  // McNemar discordant counts: tn = pairs whose treated member is negative
  // while its control is positive; cp = pairs whose treated member is
  // positive while its control is negative. Zero for the t-test.
  std::size_t tn = 0;
  std::size_t cp = 0;
  // +1 when treatment raises the outcome, -1 when it lowers it, 0 for none.
  int direction = 0;
  bool degenerate = false;
};

enum class McNemarCounting {
  // Classical table: only discordant pairs contribute.
  kDiscordantPairs,
  // Marginal reading: tn = treated members with a negative outcome,
  // cp = control members with a positive outcome.
  kMarginal,
};

struct McNemarOptions {
  bool continuity_correction = false;
  McNemarCounting counting = McNemarCounting::kDiscordantPairs;
};

/// chi^2 = (tn - cp)^2 / (tn + cp), p from the 1-df chi-square tail.
/// tn + cp == 0 gives statistic 0, p 1 and the degenerate flag.
TestResult mcnemar_from_counts(std::size_t tn, std::size_t cp,
                               bool continuity_correction = false);

/// Throws ErrorKind::kInput on non-binary outcomes or unequal lengths.
TestResult mcnemar(const PairedOutcomes& paired,
                   const McNemarOptions& options = {});

/// P(chi^2_1 > x) = erfc(sqrt(x / 2)). Throws ErrorKind::kDomain for x < 0.
double chi2_sf_1df(double x);

/// Two-sided tail of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Paired t-test on the per-pair differences treated - control.
/// Needs at least two pairs. Zero-variance differences are flagged
/// degenerate: p = 1 when the mean difference is zero, else p = 0.
TestResult paired_t_test(const PairedOutcomes& paired);

}  // namespace cfs
