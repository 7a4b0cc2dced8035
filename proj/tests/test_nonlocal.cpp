#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"
#include "vbreg/errors.hpp"
#include "vbreg/gradcheck.hpp"
#include "vbreg/nonlocal.hpp"

using namespace vbreg;

namespace {

using EM = Eigen::MatrixXd;

EM E(const Matrix& m) {
  EM e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

EM lin(const ParamStore& p, const std::string& pre, const EM& x) {
  return (x * E(p.value(pre + "/W"))).rowwise() + E(p.value(pre + "/b")).row(0);
}

VBNetConfig micro_cfg() {
  VBNetConfig c;
  c.iterations = 2;
  c.feature_dim = 8;
  c.latent_dim = 4;
  c.hidden_dim = 6;
  c.label_tile_k = 3;
  return c;
}

}  // namespace

TEST_SUITE("nonlocal") {

TEST_CASE("SCNonlocal matches a step-by-step dense oracle") {
  const auto scene = vbreg::testing::small_scene(12, 0.5, 21, 0.01);
  const Matrix beta = geometric_compatibility(scene.set);
  SCNonlocalConfig cfg;
  cfg.iterations = 2;
  cfg.feature_dim = 5;
  const ParamStore p = init_sc_nonlocal_params(cfg, 3);
  const auto feats = sc_nonlocal_forward(scene.set, beta, cfg, p);
  REQUIRE(feats.size() == 3);

  EM x(12, 6);
  for (std::size_t i = 0; i < 12; ++i) {
    x.block<1, 3>(i, 0) = scene.set.source(i).transpose();
    x.block<1, 3>(i, 3) = scene.set.target(i).transpose();
  }
  EM f = lin(p, "init", x);
  CHECK((f - E(feats[0])).cwiseAbs().maxCoeff() < 1e-12);
  const EM b = E(beta);
  for (int l = 0; l < 2; ++l) {
    const std::string pre = "iter" + std::to_string(l);
    const EM q = lin(p, pre + "/q", f), k = lin(p, pre + "/k", f), v = lin(p, pre + "/v", f);
    EM s = ((q * k.transpose()) / std::sqrt(5.0)).cwiseProduct(b);
    for (int i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - m).exp();
      s.row(i) /= s.row(i).sum();
    }
    const EM msg = s * v;
    const EM hidden = lin(p, pre + "/mlp/l0", msg).cwiseMax(0.0);
    f = f + lin(p, pre + "/mlp/l1", hidden);
    CHECK((f - E(feats[l + 1])).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("prior forward shapes and determinism") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(7, 0.5, 2);
  const Matrix beta = geometric_compatibility(scene.set);
  const ParamStore p = init_vbnet_params(cfg, 1);
  const auto a = vb_forward_prior(scene.set, beta, cfg, p, 99);
  const auto b = vb_forward_prior(scene.set, beta, cfg, p, 99);
  CHECK(a.features.size() == cfg.iterations + 1);
  CHECK(a.latents.size() == cfg.iterations + 1);
  CHECK(a.label_mean.rows() == 7);
  CHECK(a.features.back().cols() == cfg.feature_dim);
  CHECK(a.latents[1][kKey].latent.cols() == cfg.latent_dim);
  CHECK(a.features == b.features);
  CHECK(a.label_mean == b.label_mean);
  const auto c = vb_forward_prior(scene.set, beta, cfg, p, 100);
  CHECK_FALSE(c.features.back() == a.features.back());
  CHECK(extract_voter_features(a).size() == cfg.iterations);
  for (double v : inlier_confidence(a)) CHECK((v > 0.0 && v < 1.0));
}

TEST_CASE("bootstrap latents start from a zero hidden state") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(5, 0.5, 3);
  const ParamStore p = init_vbnet_params(cfg, 1);
  const auto s = vb_forward_prior(scene.set, geometric_compatibility(scene.set), cfg, p, 1);
  for (double v : s.latents[0][kQuery].hidden.data()) CHECK(v == 0.0);
}

TEST_CASE("tied posterior gives zero KL and the prior forward, bit for bit") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(9, 0.4, 5);
  const Matrix beta = geometric_compatibility(scene.set);
  ParamStore p = init_vbnet_params(cfg, 8);
  tie_posterior_to_prior(p, cfg);
  const auto noise = LatentNoise::sample(9, cfg, 17);
  const auto prior = vb_forward_prior(scene.set, beta, cfg, p, noise);
  const auto post = vb_forward_posterior(scene.set, scene.set.labels(), beta, cfg, p, noise);
  REQUIRE(post.elbo.kl_terms.size() == cfg.iterations);
  for (double k : post.elbo.kl_terms) CHECK(std::abs(k) <= 1e-10);
  CHECK(post.state.features == prior.features);
  CHECK(post.state.label_mean == prior.label_mean);
  CHECK(post.elbo.total == post.elbo.log_likelihood_term - post.elbo.kl_total());
}

TEST_CASE("untied posterior has positive KL") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(9, 0.4, 5);
  const ParamStore p = init_vbnet_params(cfg, 8);
  const auto post = vb_forward_posterior(scene.set, scene.set.labels(),
                                         geometric_compatibility(scene.set), cfg, p, 3);
  CHECK(post.elbo.kl_total() > 0.0);
}

TEST_CASE("permuting correspondences permutes the features") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(10, 0.5, 6);
  const ParamStore p = init_vbnet_params(cfg, 2);
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto noise = LatentNoise::sample(10, cfg, 4);
  const auto permuted_set = scene.set.select(perm);
  const auto a = vb_forward_prior(scene.set, geometric_compatibility(scene.set), cfg, p, noise);
  const auto b = vb_forward_prior(permuted_set, geometric_compatibility(permuted_set), cfg, p,
                                  noise.permuted(perm));
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t k = 0; k < cfg.feature_dim; ++k)
      CHECK(b.features.back()(i, k) == doctest::Approx(a.features.back()(perm[i], k)).epsilon(1e-10));
}

TEST_CASE("micro network gradients match finite differences") {
  auto cfg = micro_cfg();
  cfg.iterations = 1;
  const auto scene = vbreg::testing::small_scene(4, 0.5, 8, 0.01);
  const Matrix beta = geometric_compatibility(scene.set);
  const ParamStore p = init_vbnet_params(cfg, 5);
  const auto noise = LatentNoise::sample(4, cfg, 6);
  auto loss = [&](ad::Tape& t, const ParamStore& s) {
    return negative_elbo(t, scene.set, scene.set.labels(), beta, cfg, s, noise);
  };
  const auto r = grad_check(loss, p, 1e-5);
  CHECK(r.scalars_checked == p.scalar_count());
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("config recovered from parameter shapes") {
  auto cfg = micro_cfg();
  cfg.iterations = 3;
  const ParamStore p = init_vbnet_params(cfg, 1);
  const auto got = infer_vbnet_config(p);
  CHECK(got.iterations == 3);
  CHECK(got.feature_dim == cfg.feature_dim);
  CHECK(got.latent_dim == cfg.latent_dim);
  CHECK(got.hidden_dim == cfg.hidden_dim);
  CHECK(got.label_tile_k == cfg.label_tile_k);
  CHECK(got.input_mode == InputMode::coords);
  CHECK_THROWS_AS(infer_vbnet_config(ParamStore{}), DataError);
}

TEST_CASE("bad shapes are rejected") {
  const auto cfg = micro_cfg();
  const auto scene = vbreg::testing::small_scene(5, 0.5, 3);
  const ParamStore p = init_vbnet_params(cfg, 1);
  CHECK_THROWS_AS(vb_forward_prior(scene.set, Matrix(4, 4), cfg, p, 1), UsageError);
  VBNetConfig bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

}  // TEST_SUITE
