#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"
#include "vbreg/kernels.hpp"

using namespace vbreg;
using vbreg::testing::random_matrix;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

double max_abs_diff(const Matrix& a, const Eigen::MatrixXd& b) {
  double d = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) d = std::max(d, std::abs(a(r, c) - b(r, c)));
  return d;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matmul variants agree with a dense oracle") {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(17, 9, rng);
  const Matrix b = random_matrix(9, 13, rng);
  const Matrix c = random_matrix(13, 9, rng);
  const Matrix d = random_matrix(17, 5, rng);
  CHECK(max_abs_diff(kernels::matmul(a, b), to_eigen(a) * to_eigen(b)) < 1e-12);
  CHECK(max_abs_diff(kernels::matmul_nt(a, c), to_eigen(a) * to_eigen(c).transpose()) < 1e-12);
  CHECK(max_abs_diff(kernels::matmul_tn(a, d), to_eigen(a).transpose() * to_eigen(d)) < 1e-12);
  CHECK_THROWS_AS(kernels::matmul(a, a), std::invalid_argument);
}

TEST_CASE("parallel kernels are bit-identical to the serial twins") {
  std::mt19937_64 rng(5);
  const std::size_t n = 400;
  const Matrix a = random_matrix(n, 24, rng);
  const Matrix b = random_matrix(24, n, rng);
  CHECK(kernels::matmul(a, b) == kernels::serial::matmul(a, b));
  CHECK(kernels::matmul_nt(a, a) == kernels::serial::matmul_nt(a, a));
  CHECK(kernels::matmul_tn(a, a) == kernels::serial::matmul_tn(a, a));
  const Matrix big = random_matrix(n, n, rng, 5.0);
  CHECK(kernels::softmax_rows(big) == kernels::serial::softmax_rows(big));

  const auto src = vbreg::testing::random_points(n, rng);
  const auto tgt = vbreg::testing::random_points(n, rng);
  const Matrix beta = kernels::length_compatibility(src, tgt, 0.2);
  CHECK(beta == kernels::serial::length_compatibility(src, tgt, 0.2));
  CHECK(kernels::feature_compatibility(a, beta, 0.5) ==
        kernels::serial::feature_compatibility(a, beta, 0.5));
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  Matrix m{{1000.0, 1000.0, -1000.0}, {0.0, 0.0, 0.0}};
  const Matrix s = kernels::softmax_rows(m);
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(s(0, 2) == 0.0);
  CHECK(s(1, 0) + s(1, 1) + s(1, 2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("length compatibility follows the clipped quadratic") {
  // Pair (0, 1): source distance 1, target distance 1.05 -> d = 0.05, eps = 0.1 -> 0.75.
  std::vector<Eigen::Vector3d> src{{0, 0, 0}, {1, 0, 0}, {0, 3, 0}};
  std::vector<Eigen::Vector3d> tgt{{0, 0, 0}, {1.05, 0, 0}, {0, 1, 0}};
  const Matrix beta = kernels::length_compatibility(src, tgt, 0.1);
  CHECK(beta(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(beta(1, 0) == beta(0, 1));
  CHECK(beta(0, 2) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(beta(i, i) == 1.0);
  CHECK_THROWS_AS(kernels::length_compatibility(src, tgt, 0.0), std::invalid_argument);
}

TEST_CASE("feature compatibility boundaries") {
  const double sigma = 0.5;
  // Unit vectors with cos = 1 - sigma^2 = 0.75.
  const double c = 0.75;
  Matrix f{{1.0, 0.0}, {c, std::sqrt(1.0 - c * c)}, {0.0, 0.0}, {1.0, 0.0}};
  Matrix beta(4, 4, 1.0);
  beta(0, 3) = beta(3, 0) = 0.0;
  const Matrix s = kernels::feature_compatibility(f, beta, sigma);
  CHECK(s(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s(0, 1) >= 0.0);
  CHECK(s(0, 3) == 0.0);  // beta gate
  CHECK(s(2, 0) == 0.0);  // zero-norm row: cos 0 -> 1 - 1/0.25 < 0 -> clipped
  CHECK(s(2, 2) == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s(i, i) == 1.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(s(i, j) == s(j, i));
}

}  // TEST_SUITE
