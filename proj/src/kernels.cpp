#include "vbreg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#ifdef VBREG_HAVE_OPENMP
#include <omp.h>
#endif

#include "vbreg/errors.hpp"

namespace vbreg {

namespace kernels {
namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw UsageError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

using Index = std::ptrdiff_t;

}  // namespace

int max_threads() {
#ifdef VBREG_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const Index m = static_cast<Index>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  Matrix c(a.rows(), n);
  const double* bp = b.data().data();
#pragma omp parallel for schedule(static) if (m * inner * n > 32768)
  for (Index i = 0; i < m; ++i) {
    double* ci = c.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = bp + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  const Index m = static_cast<Index>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.rows();
  Matrix c(a.rows(), n);
#pragma omp parallel for schedule(static) if (m * inner * n > 32768)
  for (Index i = 0; i < m; ++i) {
    const double* ai = a.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  const Index m = static_cast<Index>(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t n = b.cols();
  Matrix c(a.cols(), n);
#pragma omp parallel for schedule(static) if (m * inner * n > 32768)
  for (Index i = 0; i < m; ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = a(k, i);
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  const Index rows = static_cast<Index>(m.rows());
  const std::size_t cols = m.cols();
#pragma omp parallel for schedule(static) if (rows * cols > 32768)
  for (Index i = 0; i < rows; ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    if (cols == 0) continue;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

Matrix length_compatibility(std::span<const Eigen::Vector3d> source,
                            std::span<const Eigen::Vector3d> target, double eps) {
  if (source.size() != target.size()) throw UsageError("length_compatibility: size mismatch");
  if (!(eps > 0.0)) throw UsageError("length_compatibility: eps must be > 0");
  const Index n = static_cast<Index>(source.size());
  const double inv_eps2 = 1.0 / (eps * eps);
  Matrix beta(source.size(), source.size());
#pragma omp parallel for schedule(dynamic, 16) if (n > 256)
  for (Index i = 0; i < n; ++i) {
    auto row = beta.row(i);
    for (Index j = 0; j < n; ++j) {
      const double ds = (source[i] - source[j]).norm();
      const double dt = (target[i] - target[j]).norm();
      const double d = std::abs(ds - dt);
      row[j] = std::max(0.0, 1.0 - d * d * inv_eps2);
    }
  }
  return beta;
}

Matrix feature_compatibility(const Matrix& features, const Matrix& beta, double sigma) {
  const std::size_t n = features.rows();
  if (beta.rows() != n || beta.cols() != n) {
    throw UsageError("feature_compatibility: beta must be " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
  if (!(sigma > 0.0)) throw UsageError("feature_compatibility: sigma must be > 0");
  const std::size_t dim = features.cols();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* fi = features.row(i).data();
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += fi[k] * fi[k];
    norms[i] = std::sqrt(s);
  }
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  Matrix out(n, n);
  const Index rows = static_cast<Index>(n);
#pragma omp parallel for schedule(dynamic, 16) if (rows > 256)
  for (Index i = 0; i < rows; ++i) {
    const double* fi = features.row(i).data();
    auto o = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<std::size_t>(i) == j) {
        o[j] = 1.0;
        continue;
      }
      double cos = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        const double* fj = features.row(j).data();
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += fi[k] * fj[k];
        cos = dot / (norms[i] * norms[j]);
      }
      const double gate = std::clamp(1.0 - (1.0 - cos) * inv_sigma2, 0.0, 1.0);
      o[j] = gate * beta(i, j);
    }
  }
  return out;
}

// Reference versions: textbook loops, no threading, no hoisting.
namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.cols() == 0) continue;
    double mx = m(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out(i, j) = std::exp(m(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

Matrix length_compatibility(std::span<const Eigen::Vector3d> source,
                            std::span<const Eigen::Vector3d> target, double eps) {
  if (source.size() != target.size()) throw UsageError("length_compatibility: size mismatch");
  if (!(eps > 0.0)) throw UsageError("length_compatibility: eps must be > 0");
  const std::size_t n = source.size();
  Matrix beta(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs((source[i] - source[j]).norm() - (target[i] - target[j]).norm());
      beta(i, j) = std::max(0.0, 1.0 - d * d * (1.0 / (eps * eps)));
    }
  return beta;
}

Matrix feature_compatibility(const Matrix& features, const Matrix& beta, double sigma) {
  const std::size_t n = features.rows();
  if (beta.rows() != n || beta.cols() != n) throw UsageError("feature_compatibility: bad beta");
  if (!(sigma > 0.0)) throw UsageError("feature_compatibility: sigma must be > 0");
  auto norm = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = 0; k < features.cols(); ++k) s += features(i, k) * features(i, k);
    return std::sqrt(s);
  };
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        out(i, j) = 1.0;
        continue;
      }
      const double ni = norm(i);
      const double nj = norm(j);
      double cos = 0.0;
      if (ni > 0.0 && nj > 0.0) {
        double dot = 0.0;
        for (std::size_t k = 0; k < features.cols(); ++k) dot += features(i, k) * features(j, k);
        cos = dot / (ni * nj);
      }
      out(i, j) = std::clamp(1.0 - (1.0 - cos) * (1.0 / (sigma * sigma)), 0.0, 1.0) * beta(i, j);
    }
  return out;
}

}  // namespace serial
}  // namespace kernels
}  // namespace vbreg
