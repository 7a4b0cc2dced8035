#include "vbreg/synth.hpp"

#include <random>

#include <Eigen/Geometry>

#include "vbreg/errors.hpp"

namespace vbreg {

void SynthConfig::validate() const {
  if (n < 1) throw UsageError("synth: n must be >= 1");
  if (!(inlier_ratio > 0.0 && inlier_ratio <= 1.0)) throw UsageError("synth: inlier_ratio must be in (0, 1]");
  if (!(noise_std >= 0.0)) throw UsageError("synth: noise_std must be >= 0");
  if (!(extent > 0.0)) throw UsageError("synth: extent must be > 0");
  if (!(epsilon > 0.0)) throw UsageError("synth: epsilon must be > 0");
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng));
  } while (q.norm() < 1e-8);
  return q.normalized().toRotationMatrix();
}

Scene generate_scene(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> half(-0.5 * cfg.extent, 0.5 * cfg.extent);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Scene scene;
  scene.ground_truth.rotation = random_rotation(rng);
  scene.ground_truth.translation = {half(rng), half(rng), half(rng)};

  std::vector<Point3> src(cfg.n);
  std::vector<std::uint8_t> is_in(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    src[i] = {half(rng), half(rng), half(rng)};
    is_in[i] = unit(rng) < cfg.inlier_ratio ? 1 : 0;
  }
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& x : src) {
    const Point3 y = scene.ground_truth.apply(x);
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  scene.set = CorrespondenceSet(0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Point3 y;
    if (is_in[i]) {
      y = scene.ground_truth.apply(src[i]) +
          cfg.noise_std * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    } else {
      for (int c = 0; c < 3; ++c) y(c) = lo(c) + (hi(c) - lo(c)) * unit(rng);
    }
    scene.set.add(src[i], y);
  }
  scene.set.set_epsilon(cfg.epsilon);
  scene.set.set_labels(inlier_labels(scene.set, scene.ground_truth, cfg.epsilon));
  return scene;
}

}  // namespace vbreg
