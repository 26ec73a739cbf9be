#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfs/corpus.hpp"

namespace cfs {

/// Generator constants, kept in one block so experiments can sweep them.
struct SynthConfig {
  std::size_t n_base = 250;            // treated half; twins double it
  std::size_t latent_dim = 50;         // K of the latent space
  std::size_t latent_irrelevant = 10;  // X_O columns of the Latent dataset
  std::size_t surface_observed = 100;  // X_C columns of the Surface dataset
  std::size_t surface_irrelevant = 2900;
  double twin_noise = 0.1;             // per-coordinate sd added to twins
  // The outcome logit's non-treatment part has standard deviation
  // `outcome_weight_scale`: w ~ N(0, scale^2 / M).
  double outcome_weight_scale = 10.0;
  double treatment_weight = 1.0;
  double bias = 0.0;
  double map_scale = 4.0;              // A ~ N(0, map_scale^2 / latent_dim)
  double observation_noise = 0.1;      // sd of eps in X_C = A L + eps
};

enum class SynthKind { kLatent, kSurface };

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

struct SyntheticDataset {
  SynthKind kind = SynthKind::kLatent;
  std::uint64_t seed = 0;
  // Features, labels and ground truth (data.truth is always set).
  LabeledDataset data;

  const GroundTruth& truth() const { return *data.truth; }
};

/// y_i ~ Bernoulli(sigmoid(Z_i . weights + treatment_weight * t_i + bias)).
std::vector<int> logistic_outcome(const Eigen::MatrixXd& z, const Eigen::VectorXd& weights,
                                  double bias, std::span<const std::uint8_t> treatment,
                                  double treatment_weight, std::uint64_t seed);

/// Columns: L_0..L_{K-1}, X_T, X_O_0..; first half treated, second half
/// their noisy twins.
SyntheticDataset gen_latent_dataset(std::uint64_t seed, const SynthConfig& config = {});

/// Columns: X_C_0..X_C_99, X_T, X_O_0..X_O_2899. The latent matrix lives
/// only in the ground truth.
SyntheticDataset gen_surface_dataset(std::uint64_t seed, const SynthConfig& config = {});

SyntheticDataset generate(SynthKind kind, std::uint64_t seed, const SynthConfig& config = {});

}  // namespace cfs
