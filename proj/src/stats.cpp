#include "boxfield/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "boxfield/quadrature.hpp"

namespace boxfield {

namespace {

constexpr double kKs1pct = 1.628;

double robust_spread(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double med = v[n / 2];
  for (double& x : v) x = std::abs(x - med);
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  return 1.4826 * v[n / 2];
}

}  // namespace

std::complex<double> empirical_cf(const std::vector<double>& samples, double t) {
  if (samples.empty()) {
    throw std::invalid_argument("empirical_cf: empty sample array");
  }
  std::complex<double> s{0.0, 0.0};
  for (double x : samples) {
    s += std::complex<double>(std::cos(t * x), std::sin(t * x));
  }
  return s / static_cast<double>(samples.size());
}

CfComparison cf_distance(const std::vector<double>& samples,
                         const std::function<std::complex<double>(double)>& reference,
                         const std::vector<double>& t_grid, double extra_tol) {
  if (samples.empty()) {
    throw std::invalid_argument("cf_distance: empty sample array");
  }
  if (t_grid.empty()) {
    throw std::invalid_argument("cf_distance: empty t grid");
  }
  if (!(extra_tol >= 0.0)) {
    throw std::invalid_argument("cf_distance: extra_tol must be >= 0");
  }
  CfComparison out;
  out.t_grid = t_grid;
  out.mc_band = 2.0 / std::sqrt(static_cast<double>(samples.size()));
  out.extra_tol = extra_tol;
  out.empirical.reserve(t_grid.size());
  out.reference.reserve(t_grid.size());
  out.pass_at.reserve(t_grid.size());
  const double allowed = out.mc_band + out.extra_tol;
  for (double t : t_grid) {
    const std::complex<double> e = empirical_cf(samples, t);
    const std::complex<double> r = reference(t);
    const double gap = std::abs(e - r);
    out.empirical.push_back(e);
    out.reference.push_back(r);
    out.pass_at.push_back(gap <= allowed);
    out.max_abs_gap = std::max(out.max_abs_gap, gap);
  }
  out.pass = out.max_abs_gap <= allowed;
  return out;
}

CfComparison cf_distance(const std::vector<double>& samples, const LimitLaw& reference,
                         const std::vector<double>& t_grid, double extra_tol) {
  return cf_distance(
      samples, [&reference](double t) { return reference.cf(t); }, t_grid, extra_tol);
}

std::vector<double> default_t_grid(const std::vector<double>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("default_t_grid: empty sample array");
  }
  double s = robust_spread(samples);
  if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  const double hi = 5.0 / s;
  std::vector<double> grid(41);
  for (int i = 0; i < 41; ++i) {
    grid[static_cast<std::size_t>(i)] = -hi + (2.0 * hi) * i / 40.0;
  }
  grid[20] = 0.0;  // exact centre regardless of rounding
  return grid;
}

std::vector<LemmaRatio> lemma_ratio_check(
    const std::function<double(double, double)>& g, double gamma1, double gamma2,
    const std::vector<double>& rho_ladder, double tol) {
  const EdgeLawDescriptor law1 = make_pareto_unit_tail(gamma1);
  const EdgeLawDescriptor law2 = make_pareto_unit_tail(gamma2);
  const double limit_integral = product_power_weighted(g, gamma1, gamma2, tol);
  // The limit integral counts as zero when it vanishes relative to the
  // integral of |g| under the same weight (scale-invariant, and robust to
  // the nested quadrature's noise floor): ratios against it are
  // meaningless, the decaying scaled_lhs is the informative number.
  const double abs_scale = product_power_weighted(
      [&g](double a, double b) { return std::abs(g(a, b)); }, gamma1, gamma2, tol);
  const bool zero =
      abs_scale == 0.0 || std::abs(limit_integral) <= 1e-4 * abs_scale;
  std::vector<LemmaRatio> out;
  out.reserve(rho_ladder.size());
  for (double rho : rho_ladder) {
    if (!(rho > 0.0)) {
      throw std::invalid_argument("lemma_ratio_check: rho must be positive");
    }
    LemmaRatio r;
    r.rho = rho;
    const double scale = std::pow(rho, gamma1 + gamma2);
    // Condition the expectation by the known decay so the quadrature works
    // at unit magnitude; the route through the exact law is unchanged.
    r.lhs = scale * scaled_law_expectation(
                        [&g, scale](double a, double b) { return g(a, b) / scale; },
                        law1, law2, rho, tol);
    r.rhs = scale * limit_integral;
    r.scaled_lhs = r.lhs / scale;
    r.zero_flag = zero;
    r.ratio = zero ? 1.0 : r.lhs / r.rhs;
    out.push_back(r);
  }
  return out;
}

KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf) {
  if (samples.empty()) {
    throw std::invalid_argument("ks_one_sample: empty sample array");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  KsResult r;
  r.statistic = d;
  r.critical_1pct = kKs1pct / std::sqrt(n);
  r.n1 = samples.size();
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: empty sample array");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    // Consume whole tie groups so the gap is measured between jump points.
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.critical_1pct = kKs1pct * std::sqrt((na + nb) / (na * nb));
  r.n1 = a.size();
  r.n2 = b.size();
  return r;
}

}  // namespace boxfield
