#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vbreg/geometry.hpp"
#include "vbreg/matrix.hpp"
#include "vbreg/nonlocal.hpp"

namespace vbreg {

/// Fraction of (inlier, outlier) pairs with beta > 0. Absent when either class is empty.
std::optional<double> diag_ambiguity_ratio(std::span<const std::uint8_t> labels, const Matrix& beta);

struct SimilarityHistogram {
  std::vector<std::size_t> counts;  // equal-width bins over [-1, 1]
  std::size_t pairs = 0;
  double mean = 0.0;

  double bin_lower(std::size_t b) const;
  double bin_upper(std::size_t b) const;
};

/// Cosine similarity of every unordered inlier pair (zero-norm rows count as 0).
/// Absent with fewer than two inliers.
std::optional<SimilarityHistogram> inlier_similarity_histogram(const Matrix& features,
                                                               std::span<const std::uint8_t> labels,
                                                               std::size_t bins = 50);

/// Histogram at the last-iteration features.
std::optional<SimilarityHistogram> diag_feature_similarity(const VBNetState& state,
                                                           std::span<const std::uint8_t> labels);

/// bin_lo,bin_hi,count
void write_histogram_csv(std::ostream& os, const SimilarityHistogram& h);

}  // namespace vbreg
