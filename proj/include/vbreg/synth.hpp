#pragma once

#include <cstdint>
#include <random>

#include "vbreg/geometry.hpp"

namespace vbreg {

struct SynthConfig {
  std::size_t n = 1000;
  double inlier_ratio = 0.3;  // per-correspondence inlier probability
  double noise_std = 0.01;    // Gaussian, added to inlier targets
  double extent = 1.0;        // source cube side; translations in [-extent/2, extent/2]^3
  double epsilon = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  CorrespondenceSet set;  // labels and epsilon filled in
  RigidTransform ground_truth;
};

/// Random rigid motion, inliers y = R x + t + noise, outliers uniform in the bounding
/// box of the transformed source cloud. Labels come from the epsilon predicate against
/// the ground truth, not from which branch generated the pair.
Scene generate_scene(const SynthConfig& cfg);

/// Uniform rotation from a normalised Gaussian quaternion.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

}  // namespace vbreg
