#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace vbreg {

struct TheoremParams {
  double p_in = 0.1;
  std::size_t kappa = 4;
  std::size_t J = 100;
  std::size_t seed_inliers = 5;  // |C~_in|
  double alpha = 0.0;            // Poisson rate factor
  std::size_t n = 1000;          // correspondences, simulation only

  void validate_for_simulation() const;
};

/// U = -(1/kappa) ln[1 - (1 - p_in^kappa)^(J / |C~_in|)]
double bound_U(const TheoremParams& p);
/// 1 - (1 - p_in^kappa)^J
double ransac_success_upper(const TheoremParams& p);
/// 1 - (1 - exp(-alpha kappa))^|C~_in|
double ours_success_lower(const TheoremParams& p);
/// Exact success probability of J draws of kappa-subsets without replacement from n
/// correspondences with floor(p_in n) inliers: 1 - (1 - C(I, kappa) / C(n, kappa))^J.
double ransac_success_exact(const TheoremParams& p);

struct MonteCarloResult {
  std::size_t trials = 0;
  double empirical_ours = 0.0;
  double empirical_ransac = 0.0;
  double se_ours = 0.0;  // binomial standard errors of the empirical frequencies
  double se_ransac = 0.0;
  double analytic_ours = 0.0;
  double analytic_ransac = 0.0;  // the (1 - p^kappa)^J bound
  double exact_ransac = 0.0;     // hypergeometric
};

/// Trials are split into fixed blocks with derived seeds, so results do not depend
/// on the thread count.
MonteCarloResult monte_carlo_theorem1(const TheoremParams& p, std::size_t trials,
                                      std::uint64_t seed);

struct TheoremGrid {
  std::vector<double> p_in{0.05, 0.1, 0.2, 0.5};
  std::vector<std::size_t> kappa{2, 4, 8};
  std::vector<std::size_t> J{10, 100};
  std::vector<std::size_t> seed_inliers{5, 50};
  double alpha_fraction = 0.99;  // alpha = alpha_fraction * U per cell
  std::size_t n = 1000;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
};

struct TheoremRow {
  TheoremParams params;
  double U = 0.0;
  MonteCarloResult mc;
};

std::vector<TheoremRow> run_theorem_grid(const TheoremGrid& grid);

/// p_in,kappa,J,seed_inliers,alpha,U,analytic_ours,analytic_ransac,empirical_ours,
/// empirical_ransac,se_ours,se_ransac,exact_ransac
void write_theorem_csv(std::ostream& os, std::span<const TheoremRow> rows);

}  // namespace vbreg
