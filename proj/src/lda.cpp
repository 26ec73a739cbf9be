#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cfs/dimred.hpp"
#include "cfs/error.hpp"
#include "cfs/random.hpp"

namespace cfs {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

struct TokenStream {
  std::vector<std::uint32_t> doc;
  std::vector<std::uint32_t> word;
  std::vector<std::size_t> doc_length;
};

TokenStream flatten(const MatrixXd& counts) {
  TokenStream ts;
  ts.doc_length.assign(static_cast<std::size_t>(counts.rows()), 0);
  for (Index d = 0; d < counts.rows(); ++d) {
    for (Index w = 0; w < counts.cols(); ++w) {
      const double c = counts(d, w);
      if (c < 0 || c != std::floor(c)) {
        throw Error(ErrorKind::kInput, "lda: counts must be nonnegative integers");
      }
      for (long r = 0; r < static_cast<long>(c); ++r) {
        ts.doc.push_back(static_cast<std::uint32_t>(d));
        ts.word.push_back(static_cast<std::uint32_t>(w));
      }
      ts.doc_length[static_cast<std::size_t>(d)] += static_cast<std::size_t>(c);
    }
  }
  return ts;
}

std::size_t sample_index(const std::vector<double>& cumulative, double u) {
  std::size_t lo = 0;
  std::size_t hi = cumulative.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (u < cumulative[mid]) hi = mid; else lo = mid + 1;
  }
  return lo;
}

}  // namespace

ReducerModel lda_fit_gibbs(const Eigen::MatrixXd& counts, std::size_t k, double alpha,
                           double beta, std::size_t sweeps, std::uint64_t seed,
                           const ReducerOptions& options) {
  if (k == 0) throw Error(ErrorKind::kDimension, "lda: k must be >= 1");
  if (!(alpha > 0) || !(beta > 0)) throw Error(ErrorKind::kConfig, "lda: priors must be > 0");
  if (sweeps == 0) throw Error(ErrorKind::kConfig, "lda: sweeps must be >= 1");
  if (counts.rows() == 0 || counts.cols() == 0) throw Error(ErrorKind::kInput, "lda: empty count matrix");

  const std::size_t n_docs = static_cast<std::size_t>(counts.rows());
  const std::size_t vocab = static_cast<std::size_t>(counts.cols());
  const TokenStream ts = flatten(counts);
  const std::size_t n_tokens = ts.word.size();
  const double vbeta = static_cast<double>(vocab) * beta;

  Rng rng = make_rng(seed, "lda");
  std::uniform_int_distribution<std::size_t> init(0, k - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::uint32_t> z(n_tokens);
  std::vector<int> n_dk(n_docs * k, 0);
  std::vector<int> n_wk(vocab * k, 0);
  std::vector<int> n_k(k, 0);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    z[i] = static_cast<std::uint32_t>(init(rng));
    ++n_dk[ts.doc[i] * k + z[i]];
    ++n_wk[ts.word[i] * k + z[i]];
    ++n_k[z[i]];
  }

  ReducerModel m;
  m.method = ReducerMethod::kLda;
  m.k = k;
  m.n_features = vocab;
  m.seed = seed;
  m.options = options;
  m.options.lda_alpha = alpha;
  m.options.lda_beta = beta;
  m.options.lda_sweeps = sweeps;
  m.stats.total_tokens = n_tokens;

  const std::size_t average_last = std::clamp<std::size_t>(options.lda_average_last, 1, sweeps);
  MatrixXd phi_sum = MatrixXd::Zero(static_cast<Index>(vocab), static_cast<Index>(k));
  MatrixXd theta_sum = MatrixXd::Zero(static_cast<Index>(n_docs), static_cast<Index>(k));
  std::vector<double> cumulative(k);
  const double lgamma_const = static_cast<double>(k) * (std::lgamma(vbeta) - static_cast<double>(vocab) * std::lgamma(beta));

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const std::size_t d = ts.doc[i];
      const std::size_t w = ts.word[i];
      const std::size_t old = z[i];
      --n_dk[d * k + old];
      --n_wk[w * k + old];
      --n_k[old];
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        total += (n_dk[d * k + t] + alpha) * (n_wk[w * k + t] + beta) / (n_k[t] + vbeta);
        cumulative[t] = total;
      }
      const std::size_t fresh = sample_index(cumulative, unif(rng) * total);
      z[i] = static_cast<std::uint32_t>(fresh);
      ++n_dk[d * k + fresh];
      ++n_wk[w * k + fresh];
      ++n_k[fresh];
    }

    std::size_t assigned = 0;
    for (int c : n_k) assigned += static_cast<std::size_t>(c);
    if (assigned == n_tokens) ++m.stats.conserved_sweeps;

    double loglik = lgamma_const;
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t w = 0; w < vocab; ++w) loglik += std::lgamma(n_wk[w * k + t] + beta);
      loglik -= std::lgamma(n_k[t] + vbeta);
    }
    m.stats.objective_trace.push_back(loglik);

    if (sweep + average_last >= sweeps) {
      for (std::size_t t = 0; t < k; ++t) {
        const double denom = n_k[t] + vbeta;
        for (std::size_t w = 0; w < vocab; ++w) {
          phi_sum(static_cast<Index>(w), static_cast<Index>(t)) += (n_wk[w * k + t] + beta) / denom;
        }
      }
      for (std::size_t d = 0; d < n_docs; ++d) {
        const double denom = static_cast<double>(ts.doc_length[d]) + static_cast<double>(k) * alpha;
        for (std::size_t t = 0; t < k; ++t) {
          theta_sum(static_cast<Index>(d), static_cast<Index>(t)) += (n_dk[d * k + t] + alpha) / denom;
        }
      }
    }
  }

  m.components = phi_sum / static_cast<double>(average_last);
  m.training_latent = theta_sum / static_cast<double>(average_last);
  for (std::size_t d = 0; d < n_docs; ++d) {
    if (ts.doc_length[d] == 0) {
      m.stats.flagged_documents.push_back(d);
      m.training_latent.row(static_cast<Index>(d)).setConstant(1.0 / static_cast<double>(k));
    }
  }
  m.stats.iterations = sweeps;
  m.stats.converged = true;
  return m;
}

// Held-out inference: Gibbs over each document's topic assignments with the
// topic-word distributions fixed. Each document has its own random stream.
Eigen::MatrixXd lda_transform(const ReducerModel& model, const Eigen::MatrixXd& counts) {
  const std::size_t k = model.k;
  const double alpha = model.options.lda_alpha > 0 ? model.options.lda_alpha
                                                   : 50.0 / static_cast<double>(k);
  const std::size_t sweeps = std::max<std::size_t>(model.options.lda_inference_sweeps, 1);
  const std::size_t average_last = std::max<std::size_t>(sweeps / 2, 1);
  MatrixXd theta(counts.rows(), static_cast<Index>(k));
  std::vector<double> cumulative(k);
  for (Index d = 0; d < counts.rows(); ++d) {
    std::vector<std::uint32_t> words;
    for (Index w = 0; w < counts.cols(); ++w) {
      for (long r = 0; r < static_cast<long>(counts(d, w)); ++r) words.push_back(static_cast<std::uint32_t>(w));
    }
    if (words.empty()) {
      theta.row(d).setConstant(1.0 / static_cast<double>(k));
      continue;
    }
    Rng rng = make_rng(model.seed, "lda-infer", static_cast<std::uint64_t>(d));
    std::uniform_int_distribution<std::size_t> init(0, k - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint32_t> z(words.size());
    std::vector<int> n_k(k, 0);
    for (std::size_t i = 0; i < words.size(); ++i) {
      z[i] = static_cast<std::uint32_t>(init(rng));
      ++n_k[z[i]];
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Index>(k));
    const double denom = static_cast<double>(words.size()) + static_cast<double>(k) * alpha;
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t i = 0; i < words.size(); ++i) {
        --n_k[z[i]];
        double total = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
          total += (n_k[t] + alpha) * model.components(static_cast<Index>(words[i]), static_cast<Index>(t));
          cumulative[t] = total;
        }
        const std::size_t fresh = sample_index(cumulative, unif(rng) * total);
        z[i] = static_cast<std::uint32_t>(fresh);
        ++n_k[fresh];
      }
      if (sweep + average_last >= sweeps) {
        for (std::size_t t = 0; t < k; ++t) acc(static_cast<Index>(t)) += (n_k[t] + alpha) / denom;
      }
    }
    theta.row(d) = acc.transpose() / static_cast<double>(average_last);
  }
  return theta;
}

}  // namespace cfs
