#include "vbreg/distributions.hpp"

#include <cmath>
#include <numbers>

#include "vbreg/errors.hpp"

namespace vbreg {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

Matrix gaussian_sample(const DiagGaussian& g, const Matrix& noise) {
  if (!g.mean.same_shape(noise) || !g.mean.same_shape(g.log_std)) {
    throw UsageError("gaussian_sample: noise " + noise.shape_str() + " vs mean " +
                     g.mean.shape_str());
  }
  Matrix out(noise.rows(), noise.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = g.mean.data()[i] + std::exp(g.log_std.data()[i]) * noise.data()[i];
  }
  return out;
}

double kl_diag_gaussians(const DiagGaussian& q, const DiagGaussian& p) {
  if (!q.mean.same_shape(p.mean) || !q.log_std.same_shape(p.log_std) ||
      !q.mean.same_shape(q.log_std)) {
    throw UsageError("kl_diag_gaussians: shape mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    const double lq = q.log_std.data()[i];
    const double lp = p.log_std.data()[i];
    const double var_q = std::exp(2.0 * lq);
    const double var_p = std::exp(2.0 * lp);
    const double diff = q.mean.data()[i] - p.mean.data()[i];
    kl += lp - lq + (var_q + diff * diff) / (2.0 * var_p) - 0.5;
  }
  return kl;
}

double gaussian_log_likelihood(double b, double mean) {
  const double r = b - mean;
  return -0.5 * r * r - kHalfLog2Pi;
}

Matrix standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

namespace ad {

Var reparam_sample(Var mean, Var log_std, const Matrix& noise) {
  Tape& t = *mean.tape();
  return add(mean, mul(exp(log_std), t.constant(noise)));
}

Var gaussian_log_likelihood_sum(const Matrix& targets, Var mean) {
  Tape& t = *mean.tape();
  Var r = sub(t.constant(targets), mean);
  const double n = static_cast<double>(targets.size());
  return affine(sum(mul(r, r)), -0.5, -n * kHalfLog2Pi);
}

}  // namespace ad
}  // namespace vbreg
