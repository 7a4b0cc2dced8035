#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vbreg/geometry.hpp"
#include "vbreg/nonlocal.hpp"
#include "vbreg/params.hpp"

namespace vbreg {

struct TrainOptions {
  std::size_t epochs = 50;
  AdamOptions adam;  // lr 1e-4, weight decay 1e-6
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct EpochStats {
  std::size_t epoch = 0;
  double elbo = 0.0;  // mean over training scenes
  double kl_total = 0.0;
  double loglik = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ParamStore params;
  std::vector<EpochStats> curve;
};

/// Fraction of correspondences whose label mean rounds to the true label
/// (prior path, fixed noise seed).
double inlier_accuracy(std::span<const CorrespondenceSet> sets, const VBNetConfig& cfg,
                       const ParamStore& params, std::uint64_t seed);

/// Maximises the ELBO with Adam, one step per labelled scene. When validation is
/// empty the training scenes are scored instead.
TrainResult train(std::span<const CorrespondenceSet> training,
                  std::span<const CorrespondenceSet> validation, const VBNetConfig& cfg,
                  const TrainOptions& opt);
/// Same, continuing from existing parameters.
TrainResult train(std::span<const CorrespondenceSet> training,
                  std::span<const CorrespondenceSet> validation, const VBNetConfig& cfg,
                  const TrainOptions& opt, ParamStore initial);

/// CSV with header epoch,elbo,kl_total,loglik,val_accuracy.
void write_training_curve(std::ostream& os, std::span<const EpochStats> curve);

}  // namespace vbreg
