#pragma once

// Data-parallel inner loops. Every kernel in vbreg::kernels has a plainly
// written twin in vbreg::kernels::serial; the two must agree bit for bit
// (tests/test_kernels.cpp). Parallel kernels only split work over output rows,
// so each output element is produced by one thread in a fixed order.

#include <span>

#include <Eigen/Core>

#include "vbreg/matrix.hpp"

namespace vbreg::kernels {

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& m);

/// Pairwise length-consistency compatibility,
/// beta_ij = max(0, 1 - d_ij^2 / eps^2), d_ij = | |x_i - x_j| - |y_i - y_j| |.
Matrix length_compatibility(std::span<const Eigen::Vector3d> source,
                            std::span<const Eigen::Vector3d> target, double eps);

/// Feature-gated compatibility
/// S_ij = clip(1 - (1 - cos(f_i, f_j)) / sigma^2, 0, 1) * beta_ij.
/// Rows with zero norm have cosine 0 against everything (including themselves
/// off the diagonal); the diagonal is fixed to 1.
Matrix feature_compatibility(const Matrix& features, const Matrix& beta, double sigma);

/// Number of threads the parallel kernels will use (1 without OpenMP).
int max_threads();

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix softmax_rows(const Matrix& m);
Matrix length_compatibility(std::span<const Eigen::Vector3d> source,
                            std::span<const Eigen::Vector3d> target, double eps);
Matrix feature_compatibility(const Matrix& features, const Matrix& beta, double sigma);

}  // namespace serial

}  // namespace vbreg::kernels
