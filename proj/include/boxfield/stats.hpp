#pragma once
// Empirical characteristic functions, CF/KS distances, and the quadrature
// cross-check of the small-scale asymptotic lemma that drives every scaling
// plan.  Everything here is pure over immutable sample arrays, with fixed
// reduction order so verdicts never depend on sample order or thread count.

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "boxfield/limits.hpp"
#include "boxfield/tails.hpp"

namespace boxfield {

// (1/N) sum_j exp(i t X_j).  Throws std::invalid_argument on empty input.
std::complex<double> empirical_cf(const std::vector<double>& samples, double t);

// Per-grid-point comparison of an empirical CF against a reference CF.
// Pass criterion: max gap <= mc_band + extra_tol, where mc_band = 2/sqrt(N)
// and extra_tol carries quadrature tolerance plus any truncation budget the
// caller is accountable for.
struct CfComparison {
  std::vector<double> t_grid;
  std::vector<std::complex<double>> empirical;
  std::vector<std::complex<double>> reference;
  std::vector<bool> pass_at;
  double max_abs_gap = 0.0;
  double mc_band = 0.0;
  double extra_tol = 0.0;
  bool pass = false;
};

CfComparison cf_distance(const std::vector<double>& samples,
                         const std::function<std::complex<double>(double)>& reference,
                         const std::vector<double>& t_grid, double extra_tol = 0.0);
CfComparison cf_distance(const std::vector<double>& samples, const LimitLaw& reference,
                         const std::vector<double>& t_grid, double extra_tol = 0.0);

// 41 equispaced points on [-5/s, 5/s] where s is a robust spread estimate
// (1.4826 * median absolute deviation, falling back to 1 for degenerate
// samples): the informative CF band for Gaussian and stable targets alike.
std::vector<double> default_t_grid(const std::vector<double>& samples);

// One rung of the small-scale asymptotic check:
//   lhs  = E[g(rho U1, rho U2)]            (exact law, quadrature)
//   rhs  = rho^{g1+g2} * integral of g u1^{-g1-1} u2^{-g2-1} du
// ratio -> 1 as rho -> 0 for g inside the min-power class.  When the limit
// integral vanishes (relative to the same integral of |g|) the ratio is
// conventionally 1 with zero_flag set, and
// scaled_lhs = lhs / rho^{g1+g2} carries the decay the second asymptotic
// statement asserts.
struct LemmaRatio {
  double rho = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 1.0;
  double scaled_lhs = 0.0;
  bool zero_flag = false;
};

std::vector<LemmaRatio> lemma_ratio_check(
    const std::function<double(double, double)>& g, double gamma1, double gamma2,
    const std::vector<double>& rho_ladder, double tol = 1e-6);

// Kolmogorov-Smirnov distances with the asymptotic 1% critical value
// (1.628 / sqrt(n), or 1.628 * sqrt((n+m)/(nm)) for two samples).
struct KsResult {
  double statistic = 0.0;
  double critical_1pct = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;  // 0 for the one-sample form
};

KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace boxfield
