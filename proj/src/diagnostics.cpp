#include "vbreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"

namespace vbreg {

std::optional<double> diag_ambiguity_ratio(std::span<const std::uint8_t> labels, const Matrix& beta) {
  if (beta.rows() != labels.size() || beta.cols() != labels.size()) {
    throw UsageError("diag_ambiguity_ratio: beta must be N x N");
  }
  std::size_t pairs = 0;
  std::size_t positive = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      positive += beta(i, j) > 0.0 ? 1 : 0;
    }
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(pairs);
}

double SimilarityHistogram::bin_lower(std::size_t b) const {
  return -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(counts.size());
}

double SimilarityHistogram::bin_upper(std::size_t b) const { return bin_lower(b + 1); }

std::optional<SimilarityHistogram> inlier_similarity_histogram(const Matrix& features,
                                                               std::span<const std::uint8_t> labels,
                                                               std::size_t bins) {
  if (features.rows() != labels.size()) throw UsageError("inlier_similarity_histogram: row count != labels");
  if (bins < 1) throw UsageError("inlier_similarity_histogram: bins must be >= 1");
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) in.push_back(i);
  if (in.size() < 2) return std::nullopt;

  std::vector<double> norms(features.rows(), 0.0);
  for (std::size_t i : in) {
    double s = 0.0;
    for (double v : features.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  SimilarityHistogram h;
  h.counts.assign(bins, 0);
  double total = 0.0;
  for (std::size_t a = 0; a < in.size(); ++a) {
    for (std::size_t b = a + 1; b < in.size(); ++b) {
      const std::size_t i = in[a];
      const std::size_t j = in[b];
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        const auto fi = features.row(i);
        const auto fj = features.row(j);
        double dot = 0.0;
        for (std::size_t k = 0; k < fi.size(); ++k) dot += fi[k] * fj[k];
        c = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      }
      const auto bin = std::min(bins - 1, static_cast<std::size_t>((c + 1.0) * 0.5 * static_cast<double>(bins)));
      ++h.counts[bin];
      total += c;
      ++h.pairs;
    }
  }
  h.mean = total / static_cast<double>(h.pairs);
  return h;
}

std::optional<SimilarityHistogram> diag_feature_similarity(const VBNetState& state,
                                                           std::span<const std::uint8_t> labels) {
  if (state.features.empty()) throw UsageError("diag_feature_similarity: empty state");
  return inlier_similarity_histogram(state.features.back(), labels);
}

void write_histogram_csv(std::ostream& os, const SimilarityHistogram& h) {
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << format_real(h.bin_lower(b)) << ',' << format_real(h.bin_upper(b)) << ',' << h.counts[b]
       << '\n';
  }
}

}  // namespace vbreg
