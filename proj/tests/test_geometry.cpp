#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "vbreg/errors.hpp"
#include "vbreg/geometry.hpp"

using namespace vbreg;

TEST_SUITE("geometry") {

TEST_CASE("compose and inverse") {
  std::mt19937_64 rng(1);
  const auto a = vbreg::testing::random_transform(rng);
  const auto b = vbreg::testing::random_transform(rng);
  const Point3 x(0.3, -0.2, 0.7);
  CHECK((a.compose(b).apply(x) - a.apply(b.apply(x))).norm() < 1e-12);
  CHECK((a.inverse().apply(a.apply(x)) - x).norm() < 1e-12);
  CHECK(a.is_valid());
  RigidTransform bad;
  bad.rotation(0, 0) = -1.0;  // reflection
  CHECK_FALSE(bad.is_valid());
}

TEST_CASE("rotation error resolves tiny angles") {
  RigidTransform a;
  RigidTransform b;
  b.rotation = rotation_z(1e-10);
  CHECK(rotation_error(a, b) == doctest::Approx(1e-10).epsilon(1e-6));
  b.rotation = rotation_z(M_PI / 2);
  CHECK(rotation_error(a, b) == doctest::Approx(M_PI / 2));
  b.rotation = rotation_z(M_PI);
  CHECK(rotation_error(a, b) == doctest::Approx(M_PI));
  b.translation = {3.0, 4.0, 0.0};
  CHECK(translation_error(a, b) == 5.0);
}

TEST_CASE("inlier predicate is strict") {
  RigidTransform t;
  Correspondence c{{0, 0, 0}, {0.05, 0, 0}, {}};
  CHECK(residual(c, t) == doctest::Approx(0.05));
  CHECK_FALSE(is_inlier(c, t, 0.05));
  CHECK(is_inlier(c, t, 0.0500001));
}

TEST_CASE("correspondence set bookkeeping") {
  CorrespondenceSet s(2);
  const double d0[] = {1.0, 2.0};
  const double d1[] = {3.0, 4.0};
  s.add({0, 0, 0}, {1, 0, 0}, d0);
  s.add({1, 0, 0}, {2, 0, 0}, d1);
  CHECK_THROWS_AS(s.add({0, 0, 0}, {0, 0, 0}), DataError);  // descriptor length
  CHECK_THROWS_AS(s.epsilon(), UsageError);
  CHECK_THROWS_AS(s.set_epsilon(0.0), UsageError);
  s.set_epsilon(0.1);
  CHECK_THROWS_AS(s.set_labels({1}), DataError);
  s.set_labels({1, 0});
  const std::size_t idx[] = {1};
  const auto sub = s.select(idx);
  CHECK(sub.size() == 1);
  CHECK(sub.labels()[0] == 0);
  CHECK(sub.descriptors()(0, 1) == 4.0);
  CHECK(sub.epsilon() == 0.1);
  CHECK(s.item(0).descriptor == std::vector<double>{1.0, 2.0});
}

TEST_CASE("geometric compatibility is invariant to rigid motion of the target") {
  std::mt19937_64 rng(3);
  const auto t = vbreg::testing::random_transform(rng);
  const auto src = vbreg::testing::random_points(30, rng);
  CorrespondenceSet s;
  for (const auto& x : src) s.add(x, t.apply(x));
  s.set_epsilon(0.05);
  const Matrix beta = geometric_compatibility(s);
  for (double v : beta.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("registration recall averages over successes only") {
  const std::vector<RegistrationError> e{{0.01, 0.1}, {0.5, 0.1}, {0.02, 0.3}};
  const auto s = registration_recall(e, 0.1, 0.2);
  CHECK(s.successes == 1);
  CHECK(s.rr == doctest::Approx(1.0 / 3.0));
  CHECK(*s.mean_re == 0.01);
  const auto none = registration_recall(e, 1e-9, 1e-9);
  CHECK(none.rr == 0.0);
  CHECK_FALSE(none.mean_re.has_value());
}

}  // TEST_SUITE
