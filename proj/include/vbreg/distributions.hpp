#pragma once

#include <random>

#include "vbreg/autodiff.hpp"
#include "vbreg/matrix.hpp"

namespace vbreg {

/// Diagonal Gaussians, one per row: N(mean, diag(exp(log_std))^2).
struct DiagGaussian {
  Matrix mean;
  Matrix log_std;
};

/// mean + exp(log_std) * noise
Matrix gaussian_sample(const DiagGaussian& g, const Matrix& noise);

/// Closed-form KL(q || p), summed over every entry.
double kl_diag_gaussians(const DiagGaussian& q, const DiagGaussian& p);

/// log N(b; mean, 1)
double gaussian_log_likelihood(double b, double mean);

/// Standard normal noise of the given shape.
Matrix standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

namespace ad {

/// Reparameterised draw mean + exp(log_std) * noise; noise is a constant.
Var reparam_sample(Var mean, Var log_std, const Matrix& noise);

/// 1x1 sum of log N(target_i; mean_i, 1) over all entries.
Var gaussian_log_likelihood_sum(const Matrix& targets, Var mean);

}  // namespace ad
}  // namespace vbreg
