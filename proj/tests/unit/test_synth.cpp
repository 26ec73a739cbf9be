#include <doctest.h>

#include <cmath>

#include "cfs/error.hpp"
#include "cfs/random.hpp"
#include "cfs/synth.hpp"

using namespace cfs;

TEST_CASE("seed splitting is deterministic and stream-sensitive") {
  CHECK(derive_seed(7, "feature", 3) == derive_seed(7, "feature", 3));
  CHECK(derive_seed(7, "feature", 3) != derive_seed(7, "feature", 4));
  CHECK(derive_seed(7, "feature", 3) != derive_seed(7, "replica", 3));
  CHECK(derive_seed(7, "feature", 3) != derive_seed(8, "feature", 3));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("latent dataset layout") {
  const SyntheticDataset ds = gen_latent_dataset(11);
  const auto& f = ds.data.features;
  CHECK(f.n_samples() == 500);
  CHECK(f.n_features() == 61);
  CHECK(f.feature_names[50] == "XT");
  CHECK(f.feature_names[0] == "L0");
  CHECK(f.feature_names[60] == "XO9");
  const GroundTruth& t = ds.truth();
  CHECK(t.treatment_index == 50);
  CHECK(t.causal_indices.size() == 50);
  CHECK(t.irrelevant_indices.size() == 10);
  CHECK(t.twin_pairs.size() == 250);
  CHECK(t.latent.rows() == 500);
  CHECK(t.latent.cols() == 50);
  ds.data.validate();
  CHECK(ds.data.has_both_labels());
  // treated first half, control second half
  CHECK(f.values.col(50).head(250).sum() == 250.0);
  CHECK(f.values.col(50).tail(250).sum() == 0.0);
  for (const auto& [a, b] : t.twin_pairs) {
    CHECK(b == a + 250);
    const double gap = (t.latent.row(a) - t.latent.row(b)).norm();
    CHECK(gap < 0.1 * std::sqrt(50.0) * 2.0);
  }
}

TEST_CASE("surface dataset layout") {
  const SyntheticDataset ds = gen_surface_dataset(5);
  const auto& f = ds.data.features;
  CHECK(f.n_samples() == 500);
  CHECK(f.n_features() == 3001);
  CHECK(f.feature_names[100] == "XT");
  CHECK(ds.truth().treatment_index == 100);
  CHECK(ds.truth().irrelevant_indices.size() == 2900);
  CHECK(ds.truth().irrelevant_indices.front() == 101);
  CHECK(ds.truth().latent.cols() == 50);
}

TEST_CASE("generation is reproducible per seed") {
  const auto a = gen_latent_dataset(3), b = gen_latent_dataset(3), c = gen_latent_dataset(4);
  CHECK(a.data.features.values == b.data.features.values);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.data.features.values != c.data.features.values);
}

TEST_CASE("twin noise zero gives identical twins") {
  SynthConfig cfg;
  cfg.twin_noise = 0.0;
  const auto ds = gen_latent_dataset(9, cfg);
  const auto& l = ds.truth().latent;
  CHECK(l.topRows(250) == l.bottomRows(250));
}

TEST_CASE("logistic outcome follows the logit") {
  // Huge positive weight on a constant column forces every label to 1.
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(50, 1);
  Eigen::VectorXd w(1);
  w << 60.0;
  std::vector<std::uint8_t> t(50, 0);
  const auto y = logistic_outcome(z, w, 0.0, t, 1.0, 1);
  for (int v : y) CHECK(v == 1);
  w << -60.0;
  for (int v : logistic_outcome(z, w, 0.0, t, 1.0, 1)) CHECK(v == 0);
}

TEST_CASE("bad generator constants are rejected") {
  SynthConfig cfg;
  cfg.n_base = 0;
  CHECK_THROWS_AS(gen_latent_dataset(1, cfg), Error);
  CHECK_THROWS_AS(parse_synth_kind("planar"), Error);
  CHECK(parse_synth_kind("surface") == SynthKind::kSurface);
}
