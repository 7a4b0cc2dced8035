#include "vbreg/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "vbreg/errors.hpp"
#include "vbreg/kernels.hpp"

namespace vbreg {

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d rotation_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

void CorrespondenceSet::add(const Point3& source, const Point3& target,
                            std::span<const double> descriptor) {
  if (!source.allFinite() || !target.allFinite()) {
    throw DataError("correspondence " + std::to_string(size()) + " has non-finite coordinates");
  }
  if (descriptor.size() != descriptor_dim()) {
    throw DataError("correspondence " + std::to_string(size()) + ": descriptor length " +
                    std::to_string(descriptor.size()) + " != " + std::to_string(descriptor_dim()));
  }
  if (labels_) throw UsageError("CorrespondenceSet::add: add items before labels");
  source_.push_back(source);
  target_.push_back(target);
  descriptors_.append_row(descriptor);
}

Correspondence CorrespondenceSet::item(std::size_t i) const {
  Correspondence c{source_.at(i), target_.at(i), {}};
  if (descriptor_dim() > 0) {
    const auto r = descriptors_.row(i);
    c.descriptor.assign(r.begin(), r.end());
  }
  return c;
}

const std::vector<std::uint8_t>& CorrespondenceSet::labels() const {
  if (!labels_) throw UsageError("correspondence set has no labels");
  return *labels_;
}

void CorrespondenceSet::set_labels(std::vector<std::uint8_t> labels) {
  if (labels.size() != size()) {
    throw DataError("labels length " + std::to_string(labels.size()) + " != " +
                    std::to_string(size()));
  }
  for (auto b : labels) {
    if (b > 1) throw DataError("labels must be 0 or 1");
  }
  labels_ = std::move(labels);
}

double CorrespondenceSet::epsilon() const {
  if (!epsilon_) throw UsageError("inlier threshold epsilon is not set");
  return *epsilon_;
}

void CorrespondenceSet::set_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw UsageError("epsilon must be a positive finite number");
  }
  epsilon_ = eps;
}

CorrespondenceSet CorrespondenceSet::select(std::span<const std::size_t> indices) const {
  CorrespondenceSet out(descriptor_dim());
  out.source_.reserve(indices.size());
  out.target_.reserve(indices.size());
  Matrix desc(indices.size(), descriptor_dim());
  std::vector<std::uint8_t> labels;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    out.source_.push_back(source_.at(i));
    out.target_.push_back(target_.at(i));
    if (descriptor_dim() > 0) {
      std::copy(descriptors_.row(i).begin(), descriptors_.row(i).end(), desc.row(k).begin());
    }
    if (labels_) labels.push_back((*labels_)[i]);
  }
  out.descriptors_ = std::move(desc);
  if (labels_) out.labels_ = std::move(labels);
  out.epsilon_ = epsilon_;
  return out;
}

Point3 apply_transform(const RigidTransform& t, const Point3& p) { return t.apply(p); }

double residual(const Correspondence& c, const RigidTransform& t) {
  return (t.apply(c.source) - c.target).norm();
}

bool is_inlier(const Correspondence& c, const RigidTransform& t, double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("is_inlier: epsilon must be > 0");
  return residual(c, t) < epsilon;
}

std::vector<std::uint8_t> inlier_labels(const CorrespondenceSet& set, const RigidTransform& t,
                                        double epsilon) {
  std::vector<std::uint8_t> out(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out[i] = (t.apply(set.source(i)) - set.target(i)).norm() < epsilon ? 1 : 0;
  }
  return out;
}

CompatibilityMatrix geometric_compatibility(const CorrespondenceSet& set) {
  return kernels::length_compatibility(set.sources(), set.targets(), set.epsilon());
}

double rotation_error(const RigidTransform& est, const RigidTransform& gt) {
  // Same angle as arccos((tr - 1) / 2), but atan2 keeps precision near 0.
  const Eigen::Matrix3d r = est.rotation.transpose() * gt.rotation;
  const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(0.5 * axis.norm(), c);
}

double translation_error(const RigidTransform& est, const RigidTransform& gt) {
  return (est.translation - gt.translation).norm();
}

RecallSummary registration_recall(std::span<const RegistrationError> errors, double re_thresh,
                                  double te_thresh) {
  if (!(re_thresh > 0.0) || !(te_thresh > 0.0)) {
    throw UsageError("registration_recall: thresholds must be > 0");
  }
  RecallSummary s;
  s.total = errors.size();
  double sum_re = 0.0;
  double sum_te = 0.0;
  for (const auto& e : errors) {
    if (e.re < re_thresh && e.te < te_thresh) {
      ++s.successes;
      sum_re += e.re;
      sum_te += e.te;
    }
  }
  if (s.total > 0) s.rr = static_cast<double>(s.successes) / static_cast<double>(s.total);
  if (s.successes > 0) {
    s.mean_re = sum_re / static_cast<double>(s.successes);
    s.mean_te = sum_te / static_cast<double>(s.successes);
  }
  return s;
}

}  // namespace vbreg
