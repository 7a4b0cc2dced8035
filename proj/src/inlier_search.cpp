#include "vbreg/inlier_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vbreg/errors.hpp"
#include "vbreg/kernels.hpp"

namespace vbreg {

std::size_t seed_count(std::size_t n, double ratio, std::size_t lower_bar) {
  const auto by_ratio = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  return std::min(n, std::max(by_ratio, lower_bar));
}

SeedSet select_seeds(const CorrespondenceSet& set, std::span<const double> confidences,
                     const SeedOptions& opt) {
  const std::size_t n = set.size();
  if (confidences.size() != n) throw UsageError("select_seeds: confidences length != N");
  if (!(opt.ratio > 0.0 && opt.ratio <= 1.0)) throw UsageError("select_seeds: ratio must be in (0, 1]");
  if (opt.nms_radius < 0.0) throw UsageError("select_seeds: nms_radius must be >= 0");
  const std::size_t target = seed_count(n, opt.ratio, opt.lower_bar);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });

  std::vector<std::uint8_t> taken(n, 0);
  SeedSet seeds;
  const double r2 = opt.nms_radius * opt.nms_radius;
  for (std::size_t i : order) {
    if (seeds.size() == target) break;
    bool suppressed = false;
    if (opt.nms_radius > 0.0) {
      for (std::size_t s : seeds.indices) {
        if ((set.source(s) - set.source(i)).squaredNorm() < r2) {
          suppressed = true;
          break;
        }
      }
    }
    if (!suppressed) {
      seeds.indices.push_back(i);
      taken[i] = 1;
    }
  }
  for (std::size_t i : order) {
    if (seeds.size() == target) break;
    if (!taken[i]) {
      seeds.indices.push_back(i);
      taken[i] = 1;
    }
  }
  std::stable_sort(seeds.indices.begin(), seeds.indices.end(), [&](std::size_t a, std::size_t b) {
    return confidences[a] > confidences[b] || (confidences[a] == confidences[b] && a < b);
  });
  for (std::size_t i : seeds.indices) seeds.confidences.push_back(confidences[i]);
  return seeds;
}

VoterCompatibility voter_compatibility(std::span<const Matrix> voters, const Matrix& beta,
                                       double sigma) {
  if (!(sigma > 0.0)) throw UsageError("voter_compatibility: sigma must be > 0");
  VoterCompatibility out;
  out.reserve(voters.size());
  for (const Matrix& f : voters) out.push_back(kernels::feature_compatibility(f, beta, sigma));
  return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t exclude,
                                       std::size_t k) {
  std::vector<std::size_t> idx;
  idx.reserve(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    if (j != exclude) idx.push_back(j);
  k = std::min(k, idx.size());
  auto better = [&](std::size_t a, std::size_t b) {
    return row[a] > row[b] || (row[a] == row[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::vector<HypotheticalInliers> coarse_vote(const VoterCompatibility& vc, const SeedSet& seeds,
                                             std::size_t kappa) {
  if (kappa < 1) throw UsageError("coarse_vote: kappa must be >= 1");
  std::vector<HypotheticalInliers> out;
  for (const Matrix& s : vc) {
    if (kappa > s.rows()) {
      throw UsageError("coarse_vote: kappa " + std::to_string(kappa) + " exceeds N = " +
                       std::to_string(s.rows()));
    }
    HypotheticalInliers h;
    h.seeds = seeds.indices;
    h.members.resize(seeds.size());
    const auto count = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const std::size_t seed = seeds.indices[i];
      auto& m = h.members[i];
      m.push_back(seed);
      const auto best = top_k_indices(s.row(seed), seed, kappa - 1);
      m.insert(m.end(), best.begin(), best.end());
    }
    out.push_back(std::move(h));
  }
  return out;
}

double wilson_score_ratio(double p_hat, std::size_t n, double z) {
  if (n == 0) throw UsageError("wilson_score: n must be >= 1");
  if (p_hat <= 0.0) return 0.0;
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double centre = p_hat + z2 / (2.0 * nn);
  const double spread = z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn));
  return std::clamp((centre - spread) / (1.0 + z2 / nn), 0.0, 1.0);
}

double wilson_score(std::span<const std::uint8_t> acceptances, std::size_t n, double z) {
  if (n < 1 || n > acceptances.size()) {
    throw UsageError("wilson_score: n must be in [1, number of voters]");
  }
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) accepted += acceptances[i] ? 1 : 0;
  return wilson_score_ratio(static_cast<double>(accepted) / static_cast<double>(n), n, z);
}

FineClusters fine_cluster(std::span<const HypotheticalInliers> votes, std::size_t n_correspondences,
                          std::size_t kappa, double z) {
  if (votes.empty()) throw UsageError("fine_cluster: no voters");
  if (kappa < 1 || kappa > n_correspondences) throw UsageError("fine_cluster: kappa out of range");
  const std::size_t voters = votes.size();
  const std::size_t n_seeds = votes.front().seeds.size();
  for (const auto& v : votes) {
    if (v.seeds != votes.front().seeds) throw UsageError("fine_cluster: voters disagree on seeds");
  }

  // best[c] = max over n of W(prefix count / n, n) is not separable, so tabulate
  // W(c, n) for every count c <= n.
  std::vector<std::vector<double>> w_table(voters + 1);
  for (std::size_t n = 1; n <= voters; ++n) {
    w_table[n].resize(n + 1);
    for (std::size_t c = 0; c <= n; ++c) {
      w_table[n][c] = wilson_score_ratio(static_cast<double>(c) / static_cast<double>(n), n, z);
    }
  }

  FineClusters out;
  out.wilson.rows.assign(n_seeds, std::vector<double>(n_correspondences, 0.0));
  out.inliers.seeds = votes.front().seeds;
  out.inliers.members.resize(n_seeds);
  const auto count = static_cast<std::ptrdiff_t>(n_seeds);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const std::size_t seed = out.inliers.seeds[s];
    // accept[tau][j] with tau = 0 the last voter.
    std::vector<std::vector<std::uint8_t>> accept(voters, std::vector<std::uint8_t>(n_correspondences, 0));
    std::vector<std::size_t> touched;
    for (std::size_t tau = 0; tau < voters; ++tau) {
      for (std::size_t j : votes[voters - 1 - tau].members[s]) {
        if (!accept[tau][j]) {
          accept[tau][j] = 1;
          touched.push_back(j);
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    auto& row = out.wilson.rows[s];
    for (std::size_t j : touched) {
      std::size_t c = 0;
      double best = 0.0;
      for (std::size_t n = 1; n <= voters; ++n) {
        c += accept[n - 1][j];
        best = std::max(best, w_table[n][c]);
      }
      row[j] = best;
    }
    auto& m = out.inliers.members[s];
    m.push_back(seed);
    const auto top = top_k_indices(row, seed, kappa - 1);
    m.insert(m.end(), top.begin(), top.end());
  }
  return out;
}

}  // namespace vbreg
