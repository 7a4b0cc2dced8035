#include "vbreg/theory.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"
#include "vbreg/seeding.hpp"

namespace vbreg {

namespace {

void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("p_in must be in (0, 1)");
}

// 1 - (1 - q)^e without cancellation.
double one_minus_pow_complement(double q, double e) {
  if (e == 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return -std::expm1(e * std::log1p(-q));
}

constexpr std::size_t kBlock = 4096;

}  // namespace

void TheoremParams::validate_for_simulation() const {
  check_p(p_in);
  if (kappa < 1) throw UsageError("kappa must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("alpha must be finite and >= 0");
  if (static_cast<double>(std::floor(p_in * static_cast<double>(n))) < static_cast<double>(kappa)) {
    throw UsageError("simulation needs floor(p_in * N) >= kappa");
  }
}

double bound_U(const TheoremParams& p) {
  check_p(p.p_in);
  if (p.kappa < 1 || p.J < 1 || p.seed_inliers < 1) {
    throw UsageError("bound_U: kappa, J and |C~_in| must be >= 1");
  }
  const double pk = std::pow(p.p_in, static_cast<double>(p.kappa));
  const double e = static_cast<double>(p.J) / static_cast<double>(p.seed_inliers);
  // x = ln (1 - p^k)^(J/C); U = -ln(1 - e^x) / kappa, split for precision.
  const double x = e * std::log1p(-pk);
  if (!(x < 0.0)) throw NumericalError("bound_U: p_in^kappa underflows");
  const double log_inner = x < -M_LN2 ? std::log1p(-std::exp(x)) : std::log(-std::expm1(x));
  return -log_inner / static_cast<double>(p.kappa);
}

double ransac_success_upper(const TheoremParams& p) {
  const double pk = std::pow(p.p_in, static_cast<double>(p.kappa));
  return one_minus_pow_complement(pk, static_cast<double>(p.J));
}

double ours_success_lower(const TheoremParams& p) {
  if (p.seed_inliers == 0) return 0.0;
  const double hit = std::exp(-p.alpha * static_cast<double>(p.kappa));
  return one_minus_pow_complement(hit, static_cast<double>(p.seed_inliers));
}

double ransac_success_exact(const TheoremParams& p) {
  const auto inliers = static_cast<std::size_t>(std::floor(p.p_in * static_cast<double>(p.n)));
  if (inliers < p.kappa) return 0.0;
  // C(I, k) / C(N, k) = prod_{i<k} (I - i) / (N - i)
  double log_ratio = 0.0;
  for (std::size_t i = 0; i < p.kappa; ++i) {
    log_ratio += std::log(static_cast<double>(inliers - i)) - std::log(static_cast<double>(p.n - i));
  }
  return one_minus_pow_complement(std::exp(log_ratio), static_cast<double>(p.J));
}

MonteCarloResult monte_carlo_theorem1(const TheoremParams& p, std::size_t trials,
                                      std::uint64_t seed) {
  if (trials < 1) throw UsageError("monte_carlo_theorem1: trials must be >= 1");
  p.validate_for_simulation();
  const auto inliers = static_cast<std::size_t>(std::floor(p.p_in * static_cast<double>(p.n)));
  const double rate = p.alpha * static_cast<double>(p.kappa);

  const std::size_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<std::size_t> ours(blocks, 0);
  std::vector<std::size_t> ransac(blocks, 0);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<long> outliers(rate > 0.0 ? rate : 1.0);
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t end = std::min(trials, begin + kBlock);
    for (std::size_t t = begin; t < end; ++t) {
      bool ok = rate == 0.0 && p.seed_inliers > 0;
      for (std::size_t s = 0; !ok && s < p.seed_inliers; ++s) ok = outliers(rng) == 0;
      ours[b] += ok ? 1 : 0;

      bool found = false;
      for (std::size_t j = 0; !found && j < p.J; ++j) {
        // Sequential draw without replacement; stop at the first outlier.
        std::size_t i = 0;
        while (i < p.kappa &&
               unit(rng) * static_cast<double>(p.n - i) < static_cast<double>(inliers - i)) {
          ++i;
        }
        found = i == p.kappa;
      }
      ransac[b] += found ? 1 : 0;
    }
  }
  std::size_t ours_total = 0;
  std::size_t ransac_total = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    ours_total += ours[b];
    ransac_total += ransac[b];
  }
  MonteCarloResult r;
  r.trials = trials;
  const double n = static_cast<double>(trials);
  r.empirical_ours = static_cast<double>(ours_total) / n;
  r.empirical_ransac = static_cast<double>(ransac_total) / n;
  r.se_ours = std::sqrt(r.empirical_ours * (1.0 - r.empirical_ours) / n);
  r.se_ransac = std::sqrt(r.empirical_ransac * (1.0 - r.empirical_ransac) / n);
  r.analytic_ours = ours_success_lower(p);
  r.analytic_ransac = ransac_success_upper(p);
  r.exact_ransac = ransac_success_exact(p);
  return r;
}

std::vector<TheoremRow> run_theorem_grid(const TheoremGrid& grid) {
  if (!(grid.alpha_fraction >= 0.0)) throw UsageError("alpha_fraction must be >= 0");
  std::vector<TheoremRow> rows;
  std::uint64_t cell = 0;
  for (double p : grid.p_in)
    for (std::size_t k : grid.kappa)
      for (std::size_t j : grid.J)
        for (std::size_t c : grid.seed_inliers) {
          TheoremRow row;
          row.params = {p, k, j, c, 0.0, grid.n};
          row.U = bound_U(row.params);
          row.params.alpha = grid.alpha_fraction * row.U;
          row.mc = monte_carlo_theorem1(row.params, grid.trials, derive_seed(grid.seed, cell++));
          rows.push_back(row);
        }
  return rows;
}

void write_theorem_csv(std::ostream& os, std::span<const TheoremRow> rows) {
  os << "p_in,kappa,J,seed_inliers,alpha,U,analytic_ours,analytic_ransac,empirical_ours,"
        "empirical_ransac,se_ours,se_ransac,exact_ransac\n";
  for (const auto& r : rows) {
    os << format_real(r.params.p_in) << ',' << r.params.kappa << ',' << r.params.J << ','
       << r.params.seed_inliers << ',' << format_real(r.params.alpha) << ',' << format_real(r.U)
       << ',' << format_real(r.mc.analytic_ours) << ',' << format_real(r.mc.analytic_ransac) << ','
       << format_real(r.mc.empirical_ours) << ',' << format_real(r.mc.empirical_ransac) << ','
       << format_real(r.mc.se_ours) << ',' << format_real(r.mc.se_ransac) << ','
       << format_real(r.mc.exact_ransac) << '\n';
  }
}

}  // namespace vbreg
