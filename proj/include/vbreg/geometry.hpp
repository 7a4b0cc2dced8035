#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vbreg/matrix.hpp"

namespace vbreg {

using Point3 = Eigen::Vector3d;

/// x -> rotation * x + translation. rotation is expected to be in SO(3).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  /// (this o other)(x) = this(other(x))
  RigidTransform compose(const RigidTransform& other) const;
  RigidTransform inverse() const;
  /// Orthonormal with det +1, both within tol.
  bool is_valid(double tol = 1e-9) const;

  friend bool operator==(const RigidTransform& a, const RigidTransform& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

/// Rotation about z by angle radians.
Eigen::Matrix3d rotation_z(double angle);

struct Correspondence {
  Point3 source;
  Point3 target;
  std::vector<double> descriptor;
};

/// Putative matches stored column-wise so kernels can take spans.
class CorrespondenceSet {
 public:
  CorrespondenceSet() = default;
  explicit CorrespondenceSet(std::size_t descriptor_dim) : descriptors_(0, descriptor_dim) {}

  void add(const Point3& source, const Point3& target, std::span<const double> descriptor = {});

  std::size_t size() const { return source_.size(); }
  bool empty() const { return source_.empty(); }
  Correspondence item(std::size_t i) const;

  std::span<const Point3> sources() const { return source_; }
  std::span<const Point3> targets() const { return target_; }
  const Point3& source(std::size_t i) const { return source_[i]; }
  const Point3& target(std::size_t i) const { return target_[i]; }

  std::size_t descriptor_dim() const { return descriptors_.cols(); }
  /// N x descriptor_dim, row i belongs to correspondence i.
  const Matrix& descriptors() const { return descriptors_; }

  bool has_labels() const { return labels_.has_value(); }
  const std::vector<std::uint8_t>& labels() const;
  void set_labels(std::vector<std::uint8_t> labels);
  void clear_labels() { labels_.reset(); }

  bool has_epsilon() const { return epsilon_.has_value(); }
  /// Inlier threshold; throws UsageError when unset.
  double epsilon() const;
  void set_epsilon(double eps);
  std::optional<double> epsilon_if_set() const { return epsilon_; }

  /// Subset in the given order (labels and epsilon carried over).
  CorrespondenceSet select(std::span<const std::size_t> indices) const;

 private:
  std::vector<Point3> source_;
  std::vector<Point3> target_;
  Matrix descriptors_;
  std::optional<std::vector<std::uint8_t>> labels_;
  std::optional<double> epsilon_;
};

/// N x N, symmetric, unit diagonal, entries in [0, 1].
using CompatibilityMatrix = Matrix;

Point3 apply_transform(const RigidTransform& t, const Point3& p);
double residual(const Correspondence& c, const RigidTransform& t);
/// |R x + t - y| < epsilon (strict).
bool is_inlier(const Correspondence& c, const RigidTransform& t, double epsilon);
/// Labels from the inlier predicate for every correspondence.
std::vector<std::uint8_t> inlier_labels(const CorrespondenceSet& set, const RigidTransform& t,
                                        double epsilon);

CompatibilityMatrix geometric_compatibility(const CorrespondenceSet& set);

/// Radians, the angle of R_est^T R_gt, i.e. arccos((tr - 1) / 2).
double rotation_error(const RigidTransform& est, const RigidTransform& gt);
double translation_error(const RigidTransform& est, const RigidTransform& gt);

struct RegistrationError {
  double re = 0.0;
  double te = 0.0;
};

struct RecallSummary {
  double rr = 0.0;
  std::size_t successes = 0;
  std::size_t total = 0;
  // Averages over successful pairs only; absent when nothing succeeded.
  std::optional<double> mean_re;
  std::optional<double> mean_te;
};

RecallSummary registration_recall(std::span<const RegistrationError> errors, double re_thresh,
                                  double te_thresh);

}  // namespace vbreg
