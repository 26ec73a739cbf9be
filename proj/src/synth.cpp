#include "cfs/synth.hpp"

#include <cmath>
#include <random>

#include "cfs/error.hpp"
#include "cfs/random.hpp"

namespace cfs {

namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Row-major draw order so that the values do not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sd * dist(rng);
  }
  return m;
}

Eigen::VectorXd normal_vector(Eigen::Index n, double sd, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = sd * dist(rng);
  return v;
}

// Base samples plus noisy twins stacked below them.
Eigen::MatrixXd twinned_latent(std::uint64_t seed, const SynthConfig& c) {
  const auto n = static_cast<Eigen::Index>(c.n_base);
  const auto k = static_cast<Eigen::Index>(c.latent_dim);
  Rng base_rng = make_rng(seed, "latent");
  Rng noise_rng = make_rng(seed, "twin-noise");
  Eigen::MatrixXd base = normal_matrix(n, k, 1.0, base_rng);
  Eigen::MatrixXd latent(2 * n, k);
  latent.topRows(n) = base;
  latent.bottomRows(n) = base + normal_matrix(n, k, c.twin_noise, noise_rng);
  return latent;
}

std::vector<std::uint8_t> half_treatment(std::size_t n_base) {
  std::vector<std::uint8_t> t(2 * n_base, 0);
  std::fill(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n_base), 1);
  return t;
}

void validate(const SynthConfig& c) {
  if (c.n_base == 0 || c.latent_dim == 0) {
    throw Error(ErrorKind::kConfig, "synth: n_base and latent_dim must be positive");
  }
  if (c.twin_noise < 0 || c.observation_noise < 0 || c.map_scale <= 0) {
    throw Error(ErrorKind::kConfig, "synth: noise scales must be >= 0 and map_scale > 0");
  }
}

GroundTruth twin_truth(const SynthConfig& c) {
  GroundTruth truth;
  for (std::size_t i = 0; i < c.n_base; ++i) truth.twin_pairs.emplace_back(i, i + c.n_base);
  return truth;
}

}  // namespace

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "latent") return SynthKind::kLatent;
  if (name == "surface") return SynthKind::kSurface;
  throw Error(ErrorKind::kConfig, "unknown dataset kind '" + name + "' (latent|surface)");
}

std::string to_string(SynthKind kind) {
  return kind == SynthKind::kLatent ? "latent" : "surface";
}

std::vector<int> logistic_outcome(const Eigen::MatrixXd& z, const Eigen::VectorXd& weights,
                                  double bias, std::span<const std::uint8_t> treatment,
                                  double treatment_weight, std::uint64_t seed) {
  if (z.cols() != weights.size() || static_cast<std::size_t>(z.rows()) != treatment.size()) {
    throw Error(ErrorKind::kDimension, "logistic_outcome: dimensions disagree");
  }
  Rng rng = make_rng(seed, "outcome");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::VectorXd logits = z * weights;
  std::vector<int> y(treatment.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double eta = logits(static_cast<Eigen::Index>(i)) + treatment_weight * treatment[i] + bias;
    const double p = 1.0 / (1.0 + std::exp(-eta));
    y[i] = unif(rng) < p ? 1 : 0;
  }
  return y;
}

SyntheticDataset gen_latent_dataset(std::uint64_t seed, const SynthConfig& c) {
  validate(c);
  const auto n = static_cast<Eigen::Index>(2 * c.n_base);
  const auto k = static_cast<Eigen::Index>(c.latent_dim);
  const auto n_irr = static_cast<Eigen::Index>(c.latent_irrelevant);

  Eigen::MatrixXd latent = twinned_latent(seed, c);
  const auto treatment = half_treatment(c.n_base);
  Rng weight_rng = make_rng(seed, "outcome-weights");
  Eigen::VectorXd w = normal_vector(k, c.outcome_weight_scale / std::sqrt(static_cast<double>(k)), weight_rng);
  Rng irr_rng = make_rng(seed, "irrelevant");
  Eigen::MatrixXd irrelevant = normal_matrix(n, n_irr, 1.0, irr_rng);

  SyntheticDataset out;
  out.kind = SynthKind::kLatent;
  out.seed = seed;
  auto& f = out.data.features;
  f.values.resize(n, k + 1 + n_irr);
  f.values.leftCols(k) = latent;
  for (Eigen::Index i = 0; i < n; ++i) f.values(i, k) = treatment[static_cast<std::size_t>(i)];
  f.values.rightCols(n_irr) = irrelevant;
  for (Eigen::Index j = 0; j < k; ++j) f.feature_names.push_back("L" + std::to_string(j));
  f.feature_names.push_back("XT");
  for (Eigen::Index j = 0; j < n_irr; ++j) f.feature_names.push_back("XO" + std::to_string(j));

  out.data.labels = logistic_outcome(latent, w, c.bias, treatment, c.treatment_weight, seed);

  GroundTruth truth = twin_truth(c);
  truth.treatment_index = static_cast<std::size_t>(k);
  for (Eigen::Index j = 0; j < k; ++j) truth.causal_indices.push_back(static_cast<std::size_t>(j));
  for (Eigen::Index j = 0; j < n_irr; ++j) truth.irrelevant_indices.push_back(static_cast<std::size_t>(k + 1 + j));
  truth.latent = std::move(latent);
  out.data.truth = std::move(truth);
  return out;
}

SyntheticDataset gen_surface_dataset(std::uint64_t seed, const SynthConfig& c) {
  validate(c);
  const auto n = static_cast<Eigen::Index>(2 * c.n_base);
  const auto k = static_cast<Eigen::Index>(c.latent_dim);
  const auto n_obs = static_cast<Eigen::Index>(c.surface_observed);
  const auto n_irr = static_cast<Eigen::Index>(c.surface_irrelevant);

  Eigen::MatrixXd latent = twinned_latent(seed, c);
  const auto treatment = half_treatment(c.n_base);
  Rng map_rng = make_rng(seed, "linear-map");
  Eigen::MatrixXd map = normal_matrix(n_obs, k, c.map_scale / std::sqrt(static_cast<double>(k)), map_rng);
  Rng obs_rng = make_rng(seed, "observation-noise");
  Eigen::MatrixXd observed = latent * map.transpose() + normal_matrix(n, n_obs, c.observation_noise, obs_rng);
  Rng weight_rng = make_rng(seed, "outcome-weights");
  // Divided by map_scale so the logit spread stays outcome_weight_scale.
  Eigen::VectorXd v = normal_vector(
      n_obs, c.outcome_weight_scale / (c.map_scale * std::sqrt(static_cast<double>(n_obs))), weight_rng);
  Rng irr_rng = make_rng(seed, "irrelevant");
  Eigen::MatrixXd irrelevant = normal_matrix(n, n_irr, 1.0, irr_rng);

  SyntheticDataset out;
  out.kind = SynthKind::kSurface;
  out.seed = seed;
  auto& f = out.data.features;
  f.values.resize(n, n_obs + 1 + n_irr);
  f.values.leftCols(n_obs) = observed;
  for (Eigen::Index i = 0; i < n; ++i) f.values(i, n_obs) = treatment[static_cast<std::size_t>(i)];
  f.values.rightCols(n_irr) = irrelevant;
  for (Eigen::Index j = 0; j < n_obs; ++j) f.feature_names.push_back("XC" + std::to_string(j));
  f.feature_names.push_back("XT");
  for (Eigen::Index j = 0; j < n_irr; ++j) f.feature_names.push_back("XO" + std::to_string(j));

  out.data.labels = logistic_outcome(observed, v, c.bias, treatment, c.treatment_weight, seed);

  GroundTruth truth = twin_truth(c);
  truth.treatment_index = static_cast<std::size_t>(n_obs);
  for (Eigen::Index j = 0; j < n_obs; ++j) truth.causal_indices.push_back(static_cast<std::size_t>(j));
  for (Eigen::Index j = 0; j < n_irr; ++j) truth.irrelevant_indices.push_back(static_cast<std::size_t>(n_obs + 1 + j));
  truth.latent = std::move(latent);
  out.data.truth = std::move(truth);
  return out;
}

SyntheticDataset generate(SynthKind kind, std::uint64_t seed, const SynthConfig& config) {
  return kind == SynthKind::kLatent ? gen_latent_dataset(seed, config)
                                    : gen_surface_dataset(seed, config);
}

}  // namespace cfs
