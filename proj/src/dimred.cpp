#include "cfs/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfs/error.hpp"
#include "cfs/random.hpp"

namespace cfs {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Flip each column so its largest-magnitude entry is positive.
void fix_signs(MatrixXd& components) {
  for (Index j = 0; j < components.cols(); ++j) {
    Index arg = 0;
    components.col(j).cwiseAbs().maxCoeff(&arg);
    if (components(arg, j) < 0) components.col(j) *= -1.0;
  }
}

struct PcaBasis {
  MatrixXd components;  // D x k, orthonormal
  VectorXd variance;    // k
};

// Top-k principal axes of the centered matrix, through whichever of the
// covariance (D x D) or Gram (N x N) eigenproblems is smaller.
PcaBasis principal_axes(const MatrixXd& centered, std::size_t k) {
  const Index n = centered.rows();
  const Index d = centered.cols();
  const auto kk = static_cast<Index>(k);
  const double denom = static_cast<double>(std::max<Index>(n - 1, 1));
  PcaBasis basis;
  basis.variance.resize(kk);
  if (d <= n) {
    MatrixXd cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    basis.components.resize(d, kk);
    for (Index j = 0; j < kk; ++j) {
      basis.components.col(j) = eig.eigenvectors().col(d - 1 - j);
      basis.variance(j) = std::max(0.0, eig.eigenvalues()(d - 1 - j));
    }
  } else {
    MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    MatrixXd raw(d, kk);
    const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
    for (Index j = 0; j < kk; ++j) {
      const double lambda = eig.eigenvalues()(n - 1 - j);
      basis.variance(j) = std::max(0.0, lambda) / denom;
      if (lambda > 1e-12 * top && lambda > 0) {
        raw.col(j) = centered.transpose() * eig.eigenvectors().col(n - 1 - j) / std::sqrt(lambda);
      } else {
        raw.col(j).setZero();
      }
    }
    // Re-orthonormalize; also completes the basis past the data's rank.
    Eigen::HouseholderQR<MatrixXd> qr(raw);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, kk);
    for (Index j = 0; j < kk; ++j) {
      if (q.col(j).dot(raw.col(j)) < 0) q.col(j) *= -1.0;
    }
    basis.components = std::move(q);
  }
  fix_signs(basis.components);
  return basis;
}

void check_k(const MatrixXd& x, std::size_t k) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::kInput, "fit: empty matrix");
  const auto limit = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
  if (k == 0 || k > limit) {
    throw Error(ErrorKind::kDimension,
                "fit: k=" + std::to_string(k) + " must be in [1, min(N, D)=" + std::to_string(limit) + "]");
  }
}

ReducerModel fit_npca(const MatrixXd& x, std::size_t k) {
  ReducerModel m;
  m.mean = x.colwise().mean().transpose();
  MatrixXd centered = x.rowwise() - m.mean.transpose();
  PcaBasis basis = principal_axes(centered, k);
  m.components = std::move(basis.components);
  m.explained_variance = std::move(basis.variance);
  m.training_latent = centered * m.components;
  m.stats.iterations = 1;
  m.stats.converged = true;
  m.stats.objective_trace.assign(m.explained_variance.data(),
                                 m.explained_variance.data() + m.explained_variance.size());
  return m;
}

// Sparse PCA in the elastic-net formulation with the ridge weight taken to
// infinity, where each loading update reduces to soft-thresholding
// Sigma * a_j; the orthonormal A then comes from the SVD of Sigma * B.
ReducerModel fit_spca(const MatrixXd& x, std::size_t k, const ReducerOptions& opt) {
  ReducerModel m;
  m.mean = x.colwise().mean().transpose();
  MatrixXd centered = x.rowwise() - m.mean.transpose();
  const double n = static_cast<double>(x.rows());
  auto cov_times = [&](const MatrixXd& a) -> MatrixXd {
    return centered.transpose() * (centered * a) / n;
  };

  MatrixXd a = principal_axes(centered, k).components;
  const double threshold = opt.spca_l1 / 2.0;
  MatrixXd loadings;
  MatrixXd previous;
  for (std::size_t it = 0; it < opt.spca_max_iter; ++it) {
    MatrixXd b = cov_times(a).unaryExpr([&](double v) { return soft_threshold(v, threshold); });
    MatrixXd normalized = b;
    for (Index j = 0; j < normalized.cols(); ++j) {
      const double norm = normalized.col(j).norm();
      if (norm > 0) normalized.col(j) /= norm;
    }
    m.stats.iterations = it + 1;
    if (it > 0) {
      const double change = (normalized - previous).cwiseAbs().maxCoeff();
      m.stats.objective_trace.push_back(change);
      if (change < opt.spca_tol) {
        loadings = std::move(normalized);
        m.stats.converged = true;
        break;
      }
    }
    previous = normalized;
    loadings = std::move(normalized);
    Eigen::JacobiSVD<MatrixXd> svd(cov_times(b), Eigen::ComputeThinU | Eigen::ComputeThinV);
    a = svd.matrixU() * svd.matrixV().transpose();
  }
  fix_signs(loadings);
  m.components = std::move(loadings);
  m.training_latent = centered * m.components;
  return m;
}

ReducerModel fit_grp(const MatrixXd& x, std::size_t k, std::uint64_t seed) {
  ReducerModel m;
  Rng rng = make_rng(seed, "grp");
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
  m.components.resize(x.cols(), static_cast<Index>(k));
  for (Index i = 0; i < m.components.rows(); ++i) {
    for (Index j = 0; j < m.components.cols(); ++j) m.components(i, j) = dist(rng);
  }
  m.training_latent = x * m.components;
  m.stats.converged = true;
  return m;
}

double mbdl_objective(const MatrixXd& x, const MatrixXd& atoms, const ReducerOptions& opt,
                      MatrixXd* codes_out) {
  const MatrixXd gram = atoms * atoms.transpose();
  double total = 0.0;
  if (codes_out) codes_out->resize(x.rows(), atoms.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const VectorXd xi = x.row(i).transpose();
    VectorXd code = lasso_code(atoms, gram, xi, opt.mbdl_l1, opt.lasso_max_sweeps, opt.lasso_tol);
    total += 0.5 * (xi - atoms.transpose() * code).squaredNorm() + opt.mbdl_l1 * code.lpNorm<1>();
    if (codes_out) codes_out->row(i) = code.transpose();
  }
  return total / static_cast<double>(x.rows());
}

// Online dictionary learning with mini-batches: sparse-code a batch, fold it
// into the sufficient statistics, then one block-coordinate pass over atoms.
ReducerModel fit_mbdl(const MatrixXd& x, std::size_t k, std::uint64_t seed,
                      const ReducerOptions& opt) {
  const Index n = x.rows();
  const Index d = x.cols();
  const auto kk = static_cast<Index>(k);
  Rng rng = make_rng(seed, "mbdl");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  MatrixXd atoms(kk, d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index j = 0; j < kk; ++j) {
    VectorXd row = x.row(order[static_cast<std::size_t>(j)]).transpose();
    if (row.norm() == 0.0) {
      for (Index c = 0; c < d; ++c) row(c) = gauss(rng);
    }
    atoms.row(j) = row.transpose() / row.norm();
  }

  ReducerModel m;
  m.stats.objective_trace.push_back(mbdl_objective(x, atoms, opt, nullptr));
  MatrixXd a_stat = MatrixXd::Zero(kk, kk);
  MatrixXd b_stat = MatrixXd::Zero(d, kk);
  const auto batch = static_cast<Index>(std::max<std::size_t>(opt.mbdl_batch_size, 1));
  for (std::size_t epoch = 0; epoch < opt.mbdl_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += batch) {
      const Index stop = std::min(n, start + batch);
      const MatrixXd gram = atoms * atoms.transpose();
      for (Index s = start; s < stop; ++s) {
        const VectorXd xi = x.row(order[static_cast<std::size_t>(s)]).transpose();
        const VectorXd code = lasso_code(atoms, gram, xi, opt.mbdl_l1, opt.lasso_max_sweeps, opt.lasso_tol);
        a_stat.noalias() += code * code.transpose();
        b_stat.noalias() += xi * code.transpose();
      }
      for (Index j = 0; j < kk; ++j) {
        if (a_stat(j, j) <= 1e-12) continue;
        VectorXd u = atoms.row(j).transpose() +
                     (b_stat.col(j) - atoms.transpose() * a_stat.col(j)) / a_stat(j, j);
        atoms.row(j) = u.transpose() / std::max(u.norm(), 1.0);
      }
    }
    m.stats.objective_trace.push_back(mbdl_objective(x, atoms, opt, nullptr));
  }
  m.stats.iterations = opt.mbdl_epochs;
  m.stats.converged = true;
  m.components = atoms.transpose();
  mbdl_objective(x, atoms, opt, &m.training_latent);
  return m;
}

bool is_integer_valued(const MatrixXd& x) {
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      if (v < 0 || v != std::floor(v)) return false;
    }
  }
  return true;
}

}  // namespace

ReducerMethod parse_reducer_method(const std::string& name) {
  if (name == "npca") return ReducerMethod::kNpca;
  if (name == "spca") return ReducerMethod::kSpca;
  if (name == "grp") return ReducerMethod::kGrp;
  if (name == "mbdl") return ReducerMethod::kMbdl;
  if (name == "lda") return ReducerMethod::kLda;
  throw Error(ErrorKind::kConfig, "unknown reducer '" + name + "' (npca|spca|grp|mbdl|lda)");
}

std::string to_string(ReducerMethod method) {
  switch (method) {
    case ReducerMethod::kNpca: return "npca";
    case ReducerMethod::kSpca: return "spca";
    case ReducerMethod::kGrp: return "grp";
    case ReducerMethod::kMbdl: return "mbdl";
    case ReducerMethod::kLda: return "lda";
  }
  return "unknown";
}

Eigen::VectorXd lasso_code(const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& gram,
                           const Eigen::VectorXd& x, double l1, std::size_t max_sweeps,
                           double tol) {
  const Index k = atoms.rows();
  const VectorXd corr = atoms * x;
  VectorXd code = VectorXd::Zero(k);
  VectorXd gram_code = VectorXd::Zero(k);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Index j = 0; j < k; ++j) {
      const double g = gram(j, j);
      if (g <= 0) continue;
      const double rho = corr(j) - gram_code(j) + g * code(j);
      const double updated = soft_threshold(rho, l1) / g;
      const double delta = updated - code(j);
      if (delta != 0.0) {
        gram_code += delta * gram.col(j);
        code(j) = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) break;
  }
  return code;
}

ReducerModel fit(ReducerMethod method, const Eigen::MatrixXd& x, std::size_t k,
                 std::uint64_t seed, const ReducerOptions& options) {
  check_k(x, k);
  if (!x.allFinite()) throw Error(ErrorKind::kInput, "fit: matrix has non-finite values");
  ReducerModel m;
  switch (method) {
    case ReducerMethod::kNpca: m = fit_npca(x, k); break;
    case ReducerMethod::kSpca: m = fit_spca(x, k, options); break;
    case ReducerMethod::kGrp: m = fit_grp(x, k, seed); break;
    case ReducerMethod::kMbdl: m = fit_mbdl(x, k, seed, options); break;
    case ReducerMethod::kLda: {
      MatrixXd counts = x;
      if (!is_integer_valued(counts)) {
        if (!options.lda_round_inputs || counts.minCoeff() < 0) {
          throw Error(ErrorKind::kInput, "lda: input must be a nonnegative integer count matrix");
        }
        counts = counts.array().round();
      }
      const double alpha = options.lda_alpha > 0 ? options.lda_alpha : 50.0 / static_cast<double>(k);
      return lda_fit_gibbs(counts, k, alpha, options.lda_beta, options.lda_sweeps, seed, options);
    }
  }
  m.method = method;
  m.k = k;
  m.n_features = static_cast<std::size_t>(x.cols());
  m.seed = seed;
  m.options = options;
  return m;
}

Eigen::MatrixXd lda_transform(const ReducerModel& model, const Eigen::MatrixXd& counts);

Eigen::MatrixXd transform(const ReducerModel& model, const Eigen::MatrixXd& x,
                          std::optional<std::size_t> excluded_column) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) {
    throw Error(ErrorKind::kDimension, "transform: expected " + std::to_string(model.n_features) +
                                           " features, got " + std::to_string(x.cols()));
  }
  if (excluded_column && *excluded_column >= model.n_features) {
    throw Error(ErrorKind::kDimension, "transform: excluded column out of range");
  }
  const auto drop = [&](MatrixXd& m) {
    if (excluded_column) m.col(static_cast<Index>(*excluded_column)).setZero();
  };
  switch (model.method) {
    case ReducerMethod::kNpca:
    case ReducerMethod::kSpca: {
      MatrixXd centered = x.rowwise() - model.mean.transpose();
      drop(centered);
      return centered * model.components;
    }
    case ReducerMethod::kGrp: {
      MatrixXd input = x;
      drop(input);
      return input * model.components;
    }
    case ReducerMethod::kMbdl: {
      MatrixXd input = x;
      drop(input);
      MatrixXd atoms = model.components.transpose();
      if (excluded_column) atoms.col(static_cast<Index>(*excluded_column)).setZero();
      const MatrixXd gram = atoms * atoms.transpose();
      MatrixXd codes(x.rows(), atoms.rows());
      for (Index i = 0; i < x.rows(); ++i) {
        codes.row(i) = lasso_code(atoms, gram, input.row(i).transpose(), model.options.mbdl_l1,
                                  model.options.lasso_max_sweeps, model.options.lasso_tol)
                           .transpose();
      }
      return codes;
    }
    case ReducerMethod::kLda: {
      MatrixXd input = x;
      if (!is_integer_valued(input)) {
        if (!model.options.lda_round_inputs || input.minCoeff() < 0) {
          throw Error(ErrorKind::kInput, "lda transform: input must be nonnegative integer counts");
        }
        input = input.array().round();
      }
      drop(input);
      return lda_transform(model, input);
    }
  }
  throw Error(ErrorKind::kConfig, "transform: unknown method");
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows ? static_cast<Index>(j[0].size()) : Index{0};
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw Error(ErrorKind::kInput, "model json: ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

VectorXd vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json to_json(const ReducerModel& m) {
  const auto& o = m.options;
  return {
      {"method", to_string(m.method)},
      {"k", m.k},
      {"seed", m.seed},
      {"n_features", m.n_features},
      {"options",
       {{"spca_l1", o.spca_l1}, {"spca_max_iter", o.spca_max_iter}, {"spca_tol", o.spca_tol},
        {"mbdl_batch_size", o.mbdl_batch_size}, {"mbdl_epochs", o.mbdl_epochs}, {"mbdl_l1", o.mbdl_l1},
        {"lasso_max_sweeps", o.lasso_max_sweeps}, {"lasso_tol", o.lasso_tol},
        {"lda_alpha", o.lda_alpha}, {"lda_beta", o.lda_beta}, {"lda_sweeps", o.lda_sweeps},
        {"lda_average_last", o.lda_average_last}, {"lda_inference_sweeps", o.lda_inference_sweeps},
        {"lda_round_inputs", o.lda_round_inputs}}},
      {"mean", to_std(m.mean)},
      {"components", matrix_json(m.components)},
      {"explained_variance", to_std(m.explained_variance)},
      {"training_latent", matrix_json(m.training_latent)},
      {"fit_stats",
       {{"iterations", m.stats.iterations}, {"converged", m.stats.converged},
        {"objective_trace", m.stats.objective_trace}, {"conserved_sweeps", m.stats.conserved_sweeps},
        {"total_tokens", m.stats.total_tokens}, {"flagged_documents", m.stats.flagged_documents}}},
  };
}

ReducerModel reducer_model_from_json(const nlohmann::json& j) {
  try {
    ReducerModel m;
    m.method = parse_reducer_method(j.at("method").get<std::string>());
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    const auto& o = j.at("options");
    m.options.spca_l1 = o.at("spca_l1");
    m.options.spca_max_iter = o.at("spca_max_iter");
    m.options.spca_tol = o.at("spca_tol");
    m.options.mbdl_batch_size = o.at("mbdl_batch_size");
    m.options.mbdl_epochs = o.at("mbdl_epochs");
    m.options.mbdl_l1 = o.at("mbdl_l1");
    m.options.lasso_max_sweeps = o.at("lasso_max_sweeps");
    m.options.lasso_tol = o.at("lasso_tol");
    m.options.lda_alpha = o.at("lda_alpha");
    m.options.lda_beta = o.at("lda_beta");
    m.options.lda_sweeps = o.at("lda_sweeps");
    m.options.lda_average_last = o.at("lda_average_last");
    m.options.lda_inference_sweeps = o.at("lda_inference_sweeps");
    m.options.lda_round_inputs = o.at("lda_round_inputs");
    m.mean = vector_from_json(j.at("mean"));
    m.components = matrix_from_json(j.at("components"));
    m.explained_variance = vector_from_json(j.at("explained_variance"));
    m.training_latent = matrix_from_json(j.at("training_latent"));
    const auto& s = j.at("fit_stats");
    m.stats.iterations = s.at("iterations");
    m.stats.converged = s.at("converged");
    m.stats.objective_trace = s.at("objective_trace").get<std::vector<double>>();
    m.stats.conserved_sweeps = s.at("conserved_sweeps");
    m.stats.total_tokens = s.at("total_tokens");
    m.stats.flagged_documents = s.at("flagged_documents").get<std::vector<std::size_t>>();
    if (static_cast<std::size_t>(m.components.rows()) != m.n_features) {
      throw Error(ErrorKind::kInput, "model json: components rows != n_features");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInput, std::string("model json: ") + e.what());
  }
}

}  // namespace cfs
