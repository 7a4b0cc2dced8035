#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vbreg/geometry.hpp"
#include "vbreg/matrix.hpp"

namespace vbreg {

/// Seed indices sorted by descending confidence.
struct SeedSet {
  std::vector<std::size_t> indices;
  std::vector<double> confidences;

  std::size_t size() const { return indices.size(); }
};

struct SeedOptions {
  double ratio = 0.1;             // v
  std::size_t lower_bar = 1000;   // n; 0 disables the conservative floor
  double nms_radius = 0.10;       // scene units
};

/// min(N, max(floor(ratio * N), lower_bar))
std::size_t seed_count(std::size_t n, double ratio, std::size_t lower_bar);

/// Greedy confidence-ordered selection with radius suppression on source points.
/// If suppression leaves too few candidates the suppressed ones are re-admitted in
/// confidence order until the target count is met.
SeedSet select_seeds(const CorrespondenceSet& set, std::span<const double> confidences,
                     const SeedOptions& opt);

/// One N x N compatibility matrix per voter.
using VoterCompatibility = std::vector<Matrix>;

VoterCompatibility voter_compatibility(std::span<const Matrix> voters, const Matrix& beta,
                                       double sigma);

/// Per-seed clusters; members[s] starts with seeds[s] and has exactly kappa entries.
struct HypotheticalInliers {
  std::vector<std::size_t> seeds;
  std::vector<std::vector<std::size_t>> members;
};

/// Indices of the k largest entries of row, skipping `exclude`; ties go to the lower
/// index. Result is ordered best first.
std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t exclude,
                                       std::size_t k);

/// One HypotheticalInliers per voter, in voter order.
std::vector<HypotheticalInliers> coarse_vote(const VoterCompatibility& vc, const SeedSet& seeds,
                                             std::size_t kappa);

inline constexpr double kWilsonZ95 = 1.96;

/// Lower Wilson bound at acceptance ratio p_hat over n trials.
double wilson_score_ratio(double p_hat, std::size_t n, double z = kWilsonZ95);
/// p_hat is the mean of the first n acceptances.
double wilson_score(std::span<const std::uint8_t> acceptances, std::size_t n,
                    double z = kWilsonZ95);

/// Final Wilson score per seed (row) and correspondence (column).
struct WilsonTable {
  std::vector<std::vector<double>> rows;
};

struct FineClusters {
  WilsonTable wilson;
  HypotheticalInliers inliers;
};

/// Fuses the per-voter votes. Voters are taken last-iteration first when forming the
/// top-n prefixes; each candidate keeps max over n of its Wilson score.
FineClusters fine_cluster(std::span<const HypotheticalInliers> votes, std::size_t n_correspondences,
                          std::size_t kappa, double z = kWilsonZ95);

}  // namespace vbreg
