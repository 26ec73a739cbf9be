#include "cfs/matching.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include "cfs/error.hpp"
#include "cfs/kdtree.hpp"
#include "cfs/random.hpp"

namespace cfs {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

GroupSplit split_groups(std::span<const std::uint8_t> treatment) {
  GroupSplit g;
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    if (treatment[i] > 1) throw Error(ErrorKind::kInput, "split_groups: treatment must be 0/1");
    (treatment[i] ? g.treated : g.control).push_back(i);
  }
  if (g.treated.empty() || g.control.empty()) {
    throw Error(ErrorKind::kDegenerate, "degenerate treatment");
  }
  return g;
}

MatchStrategy parse_match_strategy(const std::string& name) {
  if (name == "latent_nnm") return MatchStrategy::kLatentNnm;
  if (name == "surface_nnm") return MatchStrategy::kSurfaceNnm;
  if (name == "psm") return MatchStrategy::kPsm;
  if (name == "mdm") return MatchStrategy::kMdm;
  if (name == "random") return MatchStrategy::kRandom;
  if (name == "ground_truth") return MatchStrategy::kGroundTruth;
  throw Error(ErrorKind::kConfig, "unknown matching strategy: " + name);
}

std::string to_string(MatchStrategy strategy) {
  switch (strategy) {
    case MatchStrategy::kLatentNnm: return "latent_nnm";
    case MatchStrategy::kSurfaceNnm: return "surface_nnm";
    case MatchStrategy::kPsm: return "psm";
    case MatchStrategy::kMdm: return "mdm";
    case MatchStrategy::kRandom: return "random";
    case MatchStrategy::kGroundTruth: return "ground_truth";
  }
  return "unknown";
}

void write_pairs_csv(const MatchPairList& list, std::ostream& out) {
  out << "treated_idx,control_idx,similarity,strategy\n";
  const auto old = out.precision(17);
  for (const auto& p : list.pairs) {
    out << p.treated << ',' << p.control << ',' << p.similarity << ',' << to_string(list.strategy) << '\n';
  }
  out.precision(old);
}

Cosine cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorKind::kDimension, "cosine: length mismatch");
  double uu = 0, vv = 0, uv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0 || vv == 0) return {0.0, true};
  return {std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0), false};
}

namespace {

void check_rows(const GroupSplit& split, Index rows) {
  if (split.control.empty()) throw Error(ErrorKind::kDegenerate, "empty control group");
  for (auto i : split.treated) {
    if (static_cast<Index>(i) >= rows) throw Error(ErrorKind::kDimension, "matching: sample index out of range");
  }
  for (auto i : split.control) {
    if (static_cast<Index>(i) >= rows) throw Error(ErrorKind::kDimension, "matching: sample index out of range");
  }
}

RowMatrix gather_rows(const RowMatrix& x, const std::vector<std::size_t>& idx) {
  RowMatrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(idx[i]));
  return out;
}

}  // namespace

MatchPairList nnm_match(const GroupSplit& split, const MatrixXd& representation,
                        const NnmOptions& options, MatchStrategy label) {
  check_rows(split, representation.rows());
  MatchPairList out;
  out.strategy = label;
  const RowMatrix unit = normalize_rows(representation);
  const std::size_t dim = static_cast<std::size_t>(unit.cols());
  auto is_zero = [&](std::size_t i) { return unit.row(static_cast<Index>(i)).squaredNorm() == 0.0; };

  if (options.with_replacement) {
    const CosineKdTree tree(gather_rows(unit, split.control));
    for (auto t : split.treated) {
      const Neighbor nb = tree.nearest({unit.row(static_cast<Index>(t)).data(), dim});
      const std::size_t c = split.control[nb.index];
      if (is_zero(t) || is_zero(c)) ++out.degenerate_similarities;
      if (nb.similarity > options.beta) out.pairs.push_back({t, c, nb.similarity});
    }
    return out;
  }

  struct Candidate {
    double sim;
    std::size_t t, c;
  };
  std::vector<Candidate> all;
  all.reserve(split.treated.size() * split.control.size());
  for (auto t : split.treated) {
    for (auto c : split.control) {
      all.push_back({unit_dot(unit.row(static_cast<Index>(t)).data(), unit.row(static_cast<Index>(c)).data(), dim), t, c});
    }
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.t != b.t) return a.t < b.t;
    return a.c < b.c;
  });
  const std::size_t n = static_cast<std::size_t>(representation.rows());
  std::vector<bool> used_t(n, false), used_c(n, false);
  for (const auto& cand : all) {
    if (used_t[cand.t] || used_c[cand.c]) continue;
    used_t[cand.t] = used_c[cand.c] = true;
    if (is_zero(cand.t) || is_zero(cand.c)) ++out.degenerate_similarities;
    if (cand.sim > options.beta) out.pairs.push_back({cand.t, cand.c, cand.sim});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.treated < b.treated; });
  return out;
}

VectorXd PropensityModel::scores(const MatrixXd& x) const {
  if (x.cols() != coefficients.size()) throw Error(ErrorKind::kDimension, "propensity: feature count mismatch");
  VectorXd z = (x * coefficients).array() + intercept;
  // Keep scores strictly inside (0, 1) even where the logit saturates.
  return z.unaryExpr([](double v) { return std::clamp(sigmoid(v), 1e-15, 1.0 - 1e-15); });
}

PropensityModel fit_propensity(const MatrixXd& x, std::span<const std::uint8_t> treatment, double l2,
                               const LbfgsOptions& options) {
  if (!(l2 > 0)) throw Error(ErrorKind::kConfig, "propensity: l2 must be > 0");
  if (static_cast<Index>(treatment.size()) != x.rows()) {
    throw Error(ErrorKind::kDimension, "propensity: treatment length mismatch");
  }
  VectorXd y(x.rows());
  for (std::size_t i = 0; i < treatment.size(); ++i) y(static_cast<Index>(i)) = treatment[i];
  split_groups(treatment);
  const LogisticFit fit = fit_logistic_l2(x, y, l2, options);
  PropensityModel m;
  m.coefficients = fit.weights;
  m.intercept = fit.intercept;
  m.l2 = l2;
  m.grad_norm = fit.grad_norm;
  return m;
}

MatchPairList psm_match(const GroupSplit& split, const VectorXd& scores, double caliper) {
  check_rows(split, scores.size());
  MatchPairList out;
  out.strategy = MatchStrategy::kPsm;
  std::vector<std::size_t> ctrl = split.control;
  std::sort(ctrl.begin(), ctrl.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores(static_cast<Index>(a)), sb = scores(static_cast<Index>(b));
    return sa != sb ? sa < sb : a < b;
  });
  auto score = [&](std::size_t pos) { return scores(static_cast<Index>(ctrl[pos])); };
  for (auto t : split.treated) {
    const double s = scores(static_cast<Index>(t));
    const std::size_t hi = static_cast<std::size_t>(
        std::lower_bound(ctrl.begin(), ctrl.end(), s,
                         [&](std::size_t c, double v) { return scores(static_cast<Index>(c)) < v; }) -
        ctrl.begin());
    double best = INFINITY;
    if (hi < ctrl.size()) best = std::min(best, std::abs(score(hi) - s));
    if (hi > 0) best = std::min(best, std::abs(score(hi - 1) - s));
    // Every control at the minimal difference sits in one of two runs of
    // equal scores next to the insertion point; take the lowest index.
    std::size_t chosen = SIZE_MAX;
    for (std::size_t p = hi; p < ctrl.size() && std::abs(score(p) - s) == best; ++p) chosen = std::min(chosen, ctrl[p]);
    for (std::size_t p = hi; p-- > 0 && std::abs(score(p) - s) == best;) chosen = std::min(chosen, ctrl[p]);
    if (best <= caliper) out.pairs.push_back({t, chosen, -best});
  }
  return out;
}

double mahalanobis(const VectorXd& u, const VectorXd& v, const MatrixXd& s_inv) {
  if (u.size() != v.size() || s_inv.rows() != u.size() || s_inv.cols() != u.size()) {
    throw Error(ErrorKind::kDimension, "mahalanobis: dimension mismatch");
  }
  const VectorXd d = u - v;
  return std::sqrt(std::max(0.0, d.dot(s_inv * d)));
}

double covariance_regularizer(const MatrixXd& x, double factor) {
  if (x.rows() < 2) throw Error(ErrorKind::kDegenerate, "covariance needs at least two samples");
  const MatrixXd xc = x.rowwise() - x.colwise().mean();
  const double trace = xc.squaredNorm() / static_cast<double>(x.rows() - 1);
  return factor * trace / static_cast<double>(x.cols());
}

MatrixXd mahalanobis_whiten(const MatrixXd& x, double lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::kDegenerate, "mahalanobis: covariance is singular (lambda must be > 0)");
  const double n1 = static_cast<double>(x.rows() - 1);
  const MatrixXd xc = x.rowwise() - x.colwise().mean();
  if (x.cols() <= x.rows()) {
    MatrixXd s = xc.transpose() * xc / n1;
    s.diagonal().array() += lambda;
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::kDegenerate, "mahalanobis: covariance not positive definite");
    // (S + lambda I) = L L^T, so d' (L L^T)^{-1} d = |L^{-1} d|^2.
    return llt.matrixL().solve(xc.transpose()).transpose();
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(xc * xc.transpose());
  const VectorXd sv2 = eig.eigenvalues().cwiseMax(0.0);
  VectorXd scale(sv2.size());
  for (Index r = 0; r < sv2.size(); ++r) scale(r) = std::sqrt(sv2(r)) / std::sqrt(sv2(r) / n1 + lambda);
  return eig.eigenvectors() * scale.asDiagonal();
}

MatchPairList mdm_match(const GroupSplit& split, const MatrixXd& x, double reg_factor) {
  check_rows(split, x.rows());
  MatchPairList out;
  out.strategy = MatchStrategy::kMdm;
  const MatrixXd y = mahalanobis_whiten(x, covariance_regularizer(x, reg_factor));
  for (auto t : split.treated) {
    double best = INFINITY;
    std::size_t chosen = split.control.front();
    for (auto c : split.control) {
      const double d2 = (y.row(static_cast<Index>(t)) - y.row(static_cast<Index>(c))).squaredNorm();
      if (d2 < best || (d2 == best && c < chosen)) {
        best = d2;
        chosen = c;
      }
    }
    out.pairs.push_back({t, chosen, -std::sqrt(best)});
  }
  return out;
}

MatchPairList random_match(const GroupSplit& split, std::uint64_t seed) {
  if (split.control.empty()) throw Error(ErrorKind::kDegenerate, "empty control group");
  MatchPairList out;
  out.strategy = MatchStrategy::kRandom;
  Rng rng = make_rng(seed, "random-match");
  std::uniform_int_distribution<std::size_t> pick(0, split.control.size() - 1);
  for (auto t : split.treated) out.pairs.push_back({t, split.control[pick(rng)], 0.0});
  return out;
}

MatchPairList ground_truth_match(const GroupSplit& split,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& twins,
                                 std::size_t n_samples) {
  std::vector<std::size_t> partner(n_samples, SIZE_MAX);
  for (const auto& [a, b] : twins) {
    if (a >= n_samples || b >= n_samples) throw Error(ErrorKind::kDimension, "twin index out of range");
    partner[a] = b;
    partner[b] = a;
  }
  std::vector<bool> is_control(n_samples, false);
  for (auto c : split.control) {
    if (c >= n_samples) throw Error(ErrorKind::kDimension, "matching: sample index out of range");
    is_control[c] = true;
  }
  MatchPairList out;
  out.strategy = MatchStrategy::kGroundTruth;
  for (auto t : split.treated) {
    if (t >= n_samples || partner[t] == SIZE_MAX) {
      throw Error(ErrorKind::kInput, "sample " + std::to_string(t) + " has no twin");
    }
    if (is_control[partner[t]]) out.pairs.push_back({t, partner[t], 1.0});
  }
  return out;
}

MatchPairList apply_beta_gate(MatchPairList list, double beta) {
  std::erase_if(list.pairs, [&](const MatchPair& p) { return !(p.similarity > beta); });
  return list;
}

}  // namespace cfs
