#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vbreg/errors.hpp"
#include "vbreg/training.hpp"

using namespace vbreg;

namespace {

VBNetConfig toy() {
  VBNetConfig c;
  c.iterations = 2;
  c.feature_dim = 8;
  c.latent_dim = 4;
  c.hidden_dim = 8;
  c.label_tile_k = 4;
  return c;
}

std::vector<CorrespondenceSet> scenes(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::vector<CorrespondenceSet> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(vbreg::testing::small_scene(n, 0.5, seed + i, 0.005).set);
  return out;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("training raises the ELBO and is reproducible") {
  const auto train_sets = scenes(4, 40, 100);
  TrainOptions opt;
  opt.epochs = 15;
  opt.adam.lr = 3e-3;
  opt.seed = 7;
  const auto a = train(train_sets, {}, toy(), opt);
  REQUIRE(a.curve.size() == 15);
  CHECK(a.curve.back().elbo > a.curve.front().elbo);
  const auto b = train(train_sets, {}, toy(), opt);
  CHECK(a.params.same_values(b.params));
  std::ostringstream ca, cb;
  write_training_curve(ca, a.curve);
  write_training_curve(cb, b.curve);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("epoch,elbo,kl_total,loglik,val_accuracy\n", 0) == 0);
}

TEST_CASE("training needs labelled scenes") {
  auto sets = scenes(1, 10, 1);
  sets[0].clear_labels();
  CHECK_THROWS_AS(train(sets, {}, toy(), TrainOptions{}), DataError);
  CHECK_THROWS_AS(train({}, {}, toy(), TrainOptions{}), UsageError);
}

TEST_CASE("accuracy counts label-mean threshold agreement") {
  const auto sets = scenes(2, 20, 3);
  const ParamStore p = init_vbnet_params(toy(), 1);
  const double acc = inlier_accuracy(sets, toy(), p, 0);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

}  // TEST_SUITE
