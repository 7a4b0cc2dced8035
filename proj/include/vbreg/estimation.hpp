#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vbreg/geometry.hpp"
#include "vbreg/matrix.hpp"

namespace vbreg {

struct Hypothesis {
  RigidTransform transform;
  std::size_t seed = 0;
  std::vector<std::size_t> members;
};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct RegistrationReport {
  std::string method;
  RigidTransform transform;
  std::vector<std::uint8_t> inlier_mask;
  double score = 0.0;
  std::size_t hypotheses = 0;
  // Set when refinement hit a mask with fewer than 3 points and kept its input.
  bool refine_degenerate = false;
  std::optional<double> re;
  std::optional<double> te;
  std::vector<StageTiming> timings;
};

/// Leading eigenvector of a symmetric non-negative matrix by power iteration from the
/// all-ones vector, sign-fixed so the sum is positive, absolute-valued and scaled to
/// max 1. An all-zero matrix gives uniform weights.
std::vector<double> spectral_weights(const Matrix& m, int max_iterations = 200,
                                     double tolerance = 1e-10);

/// Weighted least-squares rigid fit of target ~ R source + t.
RigidTransform weighted_procrustes(std::span<const Point3> source, std::span<const Point3> target,
                                   std::span<const double> weights);
/// Fit on set members; an empty weight span means unit weights.
RigidTransform weighted_procrustes(const CorrespondenceSet& set,
                                   std::span<const std::size_t> members,
                                   std::span<const double> weights = {});

/// sum_j (1 - r_j^2 / eps^2) [r_j < eps]
double hypothesis_score(const RigidTransform& t, const CorrespondenceSet& set, double epsilon);

struct HypothesisChoice {
  std::size_t index = 0;
  double score = 0.0;
};

/// Argmax of hypothesis_score; ties go to the lower seed index.
HypothesisChoice select_hypothesis(std::span<const Hypothesis> hypotheses,
                                   const CorrespondenceSet& set, double epsilon);

struct Refinement {
  RigidTransform transform;
  std::vector<std::uint8_t> inlier_mask;
  std::size_t rounds = 0;
  bool degenerate = false;
};

Refinement refine(const RigidTransform& start, const CorrespondenceSet& set, double epsilon,
                  std::size_t iterations = 3);

/// k distinct indices from [0, n), uniform, by partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k);

struct RansacOptions {
  std::size_t iterations = 1000;
  std::size_t sample_size = 3;
  std::uint64_t seed = 0;
  std::size_t refine_iterations = 3;
};

RegistrationReport ransac_register(const CorrespondenceSet& set, double epsilon,
                                   const RansacOptions& opt);

/// Leading eigenvector of beta as confidence, top_k correspondences fitted and refined.
RegistrationReport spectral_matching_register(const CorrespondenceSet& set, const Matrix& beta,
                                              double epsilon, std::size_t top_k = 40,
                                              std::size_t refine_iterations = 3);

/// Fills re/te from a ground-truth transform.
void attach_errors(RegistrationReport& report, const RigidTransform& gt);

/// JSON text; timings only when requested since they vary between runs.
std::string report_to_json(const RegistrationReport& report, bool include_timings);

}  // namespace vbreg
