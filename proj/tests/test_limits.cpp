#include "boxfield/limits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "boxfield/quadrature.hpp"
#include "boxfield/rng.hpp"
#include "boxfield/tails.hpp"
#include "doctest.h"

// PlanKnobs defaults every field; partial designated initializers are the
// intended spelling.
#pragma GCC diagnostic ignored "-Wmissing-field-initializers"

using namespace boxfield;

namespace {

// Double-exponential product measure with density exp(-|x1|-|x2|): the
// closed-form workhorse for every cross-checked constant below.
MeasureDescriptor lap() { return MeasureDescriptor::laplace_product(1.0, 1.0); }

// Frozen values from an independent midpoint-grid evaluation of
// int u^{-g-1} int (F(x+u/2)-F(x-u/2))^2 dx du with the analytic
// double-exponential CDF (grids refined until stable to ~1e-5):
//   V(1.2) = 17.4634, V(1.3) = 11.3164, V(1.5) = 7.08979, V(1.6) = 6.46957,
// and the products entering the limits.
constexpr double kVarHigh_13_16 = 73.212053;    // V(1.3) * V(1.6)
constexpr double kVarLines_15_35 = 8.085605;    // E[U^2]_{3.5} * V(1.5) * 1
constexpr double kVarLines_12_35 = 19.916264;   // E[U^2]_{3.5} * V(1.2) * 1

// The same axis factor in closed form, Gamma(2-g) + Gamma(3-g) scaled: kept
// as a second, sharper cross-check of the quadrature route.
double axis_factor_closed_form(double g) {
  return 2.0 / (g * (g - 1.0)) * (std::tgamma(2.0 - g) + std::tgamma(3.0 - g));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::complex<double> empirical_cf(const std::vector<double>& v, double t) {
  std::complex<double> s{0.0, 0.0};
  for (double x : v) s += std::complex<double>(std::cos(t * x), std::sin(t * x));
  return s / static_cast<double>(v.size());
}

// Second derivative of the CF at 0 by the 5-point stencil; -curvature
// estimates the variance when it exists.
template <typename Cf>
double cf_curvature(Cf&& cf, double h) {
  const std::complex<double> c0 = cf(0.0), c1 = cf(h), c2 = cf(2.0 * h),
                             m1 = cf(-h), m2 = cf(-2.0 * h);
  return ((-c2 + 16.0 * c1 - 30.0 * c0 + 16.0 * m1 - m2) / (12.0 * h * h)).real();
}

}  // namespace

TEST_CASE("limit law containers enforce their domains") {
  const LimitLaw g = LimitLaw::gaussian(4.0, "high");
  CHECK(g.kind() == LimitKind::gaussian);
  CHECK(g.variance() == doctest::Approx(4.0));
  CHECK(g.spread_hint() == doctest::Approx(2.0));
  CHECK(g.provenance() == "high");
  // exp(-v t^2 / 2) with v = 4 at t = 0.7
  CHECK(g.cf(0.7).real() == doctest::Approx(std::exp(-2.0 * 0.49)));
  CHECK(g.cf(0.7).imag() == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)g.stable_law(), std::logic_error);

  const LimitLaw s = LimitLaw::stable(1.5, 2.0, 0.5, "points");
  CHECK(s.kind() == LimitKind::stable);
  CHECK(s.stable_law().alpha == doctest::Approx(1.5));
  CHECK(s.spread_hint() == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)s.variance(), std::logic_error);
  {
    // 1-parameterization at t = 1: exponent -sigma^a (1 - i beta tan(pi a/2)).
    const double mag = std::pow(2.0, 1.5);
    const std::complex<double> want =
        std::exp(std::complex<double>(-mag, mag * 0.5 * std::tan(0.75 * std::acos(-1.0))));
    CHECK(std::abs(s.cf(1.0) - want) < 1e-12);
    // Conjugate symmetry across t -> -t.
    CHECK(std::abs(s.cf(-1.0) - std::conj(s.cf(1.0))) < 1e-12);
    CHECK(std::abs(s.cf(0.0) - std::complex<double>(1.0, 0.0)) < 1e-15);
  }

  const LimitLaw o = LimitLaw::cf_oracle(
      [](double t) { return std::complex<double>(std::cos(t), 0.0); }, "demo");
  CHECK(o.kind() == LimitKind::cf_oracle);
  CHECK(o.cf(0.3).real() == doctest::Approx(std::cos(0.3)));
  CHECK(o.spread_hint() == 0.0);

  CHECK_THROWS_AS(LimitLaw::gaussian(-1.0, "x"), std::invalid_argument);
  CHECK_THROWS_AS(LimitLaw::stable(2.5, 1.0, 0.0, "x"), std::invalid_argument);
  CHECK_THROWS_AS(LimitLaw::stable(1.5, -1.0, 0.0, "x"), std::invalid_argument);
  CHECK_THROWS_AS(LimitLaw::stable(1.5, 1.0, 1.5, "x"), std::invalid_argument);
  CHECK_THROWS_AS(LimitLaw::cf_oracle(nullptr, "x"), std::invalid_argument);
}

TEST_CASE("high-intensity variance matches the independent grid value") {
  const double v = variance_high(lap(), lap(), 1.3, 1.6, 1e-7);
  CHECK(v == doctest::Approx(kVarHigh_13_16).epsilon(1e-2));
  CHECK(v == doctest::Approx(axis_factor_closed_form(1.3) *
                             axis_factor_closed_form(1.6))
                 .epsilon(1e-4));

  // Bilinearity: flipping the sign of one argument flips the form.
  const MeasureDescriptor neg = lap().scale(-1.0);
  CHECK(variance_high(lap(), neg, 1.3, 1.6, 1e-7) ==
        doctest::Approx(-v).epsilon(1e-6));

  // Symmetry in the two measures.
  const MeasureDescriptor b1 = MeasureDescriptor::box_indicator(-1.0, -1.0, 1.0, 1.0);
  const double v12 = variance_high(lap(), b1, 1.4, 1.7, 1e-7);
  const double v21 = variance_high(b1, lap(), 1.4, 1.7, 1e-7);
  CHECK(v12 == doctest::Approx(v21).epsilon(1e-6));

  CHECK_THROWS_AS(variance_high(lap(), lap(), 2.3, 1.6, 1e-6), HypothesisError);
  CHECK_THROWS_AS(variance_high(lap(), lap(), 1.3, 1.0, 1e-6), HypothesisError);
}

TEST_CASE("dilation moves every limit by its exponent") {
  const double g1 = 1.3, g2 = 1.6;
  const double base = variance_high(lap(), lap(), g1, g2, 1e-7);
  const double a = 2.0;
  const double scaled = variance_high(lap().dilate(a), lap().dilate(a), g1, g2, 1e-7);
  CHECK(scaled / base == doctest::Approx(std::pow(a, 2.0 - g1 - g2)).epsilon(1e-5));

  // Aggregating m independent unit patches is one dilated patch:
  // a_m = m^{1/(2-g1-g2)} multiplies the variance by exactly m.
  for (double m : {2.0, 5.0}) {
    const double am = std::pow(m, 1.0 / (2.0 - g1 - g2));
    const double vm = variance_high(lap().dilate(am), lap().dilate(am), g1, g2, 1e-7);
    CHECK(vm / base == doctest::Approx(m).epsilon(1e-5));
  }

  const double fv = variance_finite(lap(), lap(), 1e-7);
  const double fv2 = variance_finite(lap().dilate(a), lap().dilate(a), 1e-7);
  CHECK(fv2 / fv == doctest::Approx(std::pow(a, -2.0)).epsilon(1e-5));

  // Point-regime scale: sigma^{g1} carries the a^{2-2 g1} dilation exponent
  // (the dilated density is a^{-2} f(x/a)).
  const LimitLaw p = stable_limit(lap(), 1.5, 2.5, make_pareto_unit_tail(2.5));
  const LimitLaw pd = stable_limit(lap().dilate(a), 1.5, 2.5, make_pareto_unit_tail(2.5));
  CHECK(pd.stable_law().sigma / p.stable_law().sigma ==
        doctest::Approx(std::pow(a, (2.0 - 2.0 * 1.5) / 1.5)).epsilon(1e-5));
}

TEST_CASE("translation never changes a limit") {
  const MeasureDescriptor shifted = lap().translate({0.7, -1.3});
  CHECK(variance_high(shifted, shifted, 1.3, 1.6, 1e-7) ==
        doctest::Approx(variance_high(lap(), lap(), 1.3, 1.6, 1e-7)).epsilon(1e-6));
  CHECK(variance_finite(shifted, shifted, 1e-7) ==
        doctest::Approx(variance_finite(lap(), lap(), 1e-7)).epsilon(1e-6));

  const auto sp0 = lap().stable_params(1.5);
  const auto sp1 = shifted.stable_params(1.5);
  CHECK(sp1.sigma == doctest::Approx(sp0.sigma).epsilon(1e-6));
  CHECK(sp1.beta == doctest::Approx(sp0.beta).epsilon(1e-6));

  const std::complex<double> c0 = cf_intermediate(lap(), 1.3, 1.6, 0.11, 1e-7);
  const std::complex<double> c1 = cf_intermediate(shifted, 1.3, 1.6, 0.11, 1e-7);
  CHECK(std::abs(c0 - c1) < 1e-5);
}

TEST_CASE("intermediate characteristic function is a centred law with the expected curvature") {
  CHECK(std::abs(cf_intermediate(lap(), 1.3, 1.6, 0.0, 1e-7) -
                 std::complex<double>(1.0, 0.0)) < 1e-12);

  auto cf = [&](double t) { return cf_intermediate(lap(), 1.3, 1.6, t, 1e-8); };
  const std::complex<double> c = cf(0.13);
  CHECK(std::abs(c) <= 1.0 + 1e-9);
  CHECK(std::abs(cf(-0.13) - std::conj(c)) < 1e-7);

  // -d^2/dt^2 at 0 equals the second moment of the limit, which is the
  // high-regime bilinear form evaluated at (mu, mu).
  const double h = 0.05 / std::sqrt(kVarHigh_13_16);
  CHECK(-cf_curvature(cf, h) == doctest::Approx(kVarHigh_13_16).epsilon(2e-2));

  CHECK_THROWS_AS(cf_intermediate(lap(), 1.3, 2.4, 0.1, 1e-6), HypothesisError);
}

TEST_CASE("line-regime variance requires a square-integrable second edge") {
  const double v = variance_gaussian_lines(lap(), 1.5, make_pareto_unit_tail(3.5), 1e-7);
  CHECK(v == doctest::Approx(kVarLines_15_35).epsilon(1e-2));

  CHECK_THROWS_WITH_AS(
      (void)variance_gaussian_lines(lap(), 1.5, make_pareto_unit_tail(1.8), 1e-7),
      doctest::Contains("gamma2 > 2"), HypothesisError);
  CHECK_THROWS_AS(variance_gaussian_lines(lap(), 2.2, make_pareto_unit_tail(3.5), 1e-7),
               HypothesisError);
}

TEST_CASE("line-regime characteristic function curvature matches the finite-variance case") {
  const EdgeLawDescriptor law2 = make_pareto_unit_tail(3.5);
  auto cf = [&](double t) { return cf_poisson_lines(lap(), 1.5, law2, t, 1e-8); };
  CHECK(std::abs(cf(0.0) - std::complex<double>(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(cf(-0.21) - std::conj(cf(0.21))) < 1e-7);

  const double h = 0.05 / std::sqrt(kVarLines_15_35);
  CHECK(-cf_curvature(cf, h) == doctest::Approx(kVarLines_15_35).epsilon(2e-2));

  // With 1 < gamma2 < 2 the line limit has infinite variance: the stencil
  // estimate must blow up under refinement instead of stabilizing.
  const EdgeLawDescriptor heavy = make_pareto_unit_tail(1.7);
  auto cfh = [&](double t) { return cf_poisson_lines(lap(), 1.2, heavy, t, 1e-8); };
  const double c1 = -cf_curvature(cfh, 0.04);
  const double c2 = -cf_curvature(cfh, 0.01);
  CHECK(c2 > 1.3 * c1);

  CHECK_THROWS_WITH_AS((void)cf_poisson_lines(lap(), 1.5, make_pareto_unit_tail(1.4),
                                              0.1, 1e-6),
                       doctest::Contains("gamma2 > gamma1"), HypothesisError);
}

TEST_CASE("point-regime law carries the measure's stable parameters") {
  const EdgeLawDescriptor law2 = make_pareto_unit_tail(2.5);
  const LimitLaw p = stable_limit(lap(), 1.5, 2.5, law2);
  CHECK(p.kind() == LimitKind::stable);
  CHECK(p.stable_law().alpha == doctest::Approx(1.5));

  const auto sp = lap().stable_params(1.5);
  CHECK(p.stable_law().sigma == doctest::Approx(sp.sigma));
  CHECK(p.stable_law().beta == doctest::Approx(sp.beta));
  // A nonnegative measure is totally skewed to the right.
  CHECK(p.stable_law().beta == doctest::Approx(1.0).epsilon(1e-6));

  // Flipping the measure's sign flips the skew and keeps the scale.
  const LimitLaw q = stable_limit(lap().scale(-1.0), 1.5, 2.5, law2);
  CHECK(q.stable_law().beta == doctest::Approx(-p.stable_law().beta).epsilon(1e-6));
  CHECK(q.stable_law().sigma == doctest::Approx(p.stable_law().sigma).epsilon(1e-6));

  // Boundary-supported measures sit outside the point-regime class.
  const MeasureDescriptor box = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  CHECK_THROWS_AS(stable_limit(box, 1.5, 2.5, law2), HypothesisError);
  CHECK_THROWS_WITH_AS((void)stable_limit(lap(), 1.5, 1.2, make_pareto_unit_tail(1.2)),
                       doctest::Contains("gamma2 > gamma1"), HypothesisError);
}

TEST_CASE("finite-variance limit is the overlap of the densities") {
  // exp(-2|x|-2|y|) integrates to 1 over the plane.
  CHECK(variance_finite(lap(), lap(), 1e-8) == doctest::Approx(1.0).epsilon(1e-6));

  const MeasureDescriptor u = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  CHECK(variance_finite(u, u, 1e-8) == doctest::Approx(1.0).epsilon(1e-6));

  // Disjoint supports are orthogonal.
  const MeasureDescriptor far = MeasureDescriptor::box_indicator(5.0, 5.0, 6.0, 6.0);
  CHECK(std::abs(variance_finite(u, far, 1e-8)) < 1e-8);

  CHECK(variance_finite(lap(), u, 1e-8) ==
        doctest::Approx(variance_finite(u, lap(), 1e-8)).epsilon(1e-6));
}

TEST_CASE("limit_law dispatches every regime to its law") {
  const MeasureDescriptor mu = lap();

  const LimitLaw hi = limit_law(plan_regime(Regime::high, 1.3, 1.6, 0.01, {.delta = 0.4}),
                                mu, 1.0, 1e-7);
  CHECK(hi.kind() == LimitKind::gaussian);
  CHECK(hi.variance() == doctest::Approx(variance_high(mu, mu, 1.3, 1.6, 1e-7)).epsilon(1e-6));
  CHECK(hi.provenance() == "high");

  const LimitLaw in = limit_law(plan_regime(Regime::intermediate, 1.3, 1.6, 0.01, {}),
                                mu, 1.0, 1e-7);
  CHECK(in.kind() == LimitKind::cf_oracle);
  CHECK(std::abs(in.cf(0.13) - cf_intermediate(mu, 1.3, 1.6, 0.13, 1e-7)) < 1e-5);

  const LimitLaw gl = limit_law(
      plan_regime(Regime::gaussian_lines, 1.5, 3.5, 0.01, {.eta = 1.0}), mu, 1.0, 1e-7);
  CHECK(gl.kind() == LimitKind::gaussian);
  CHECK(gl.variance() == doctest::Approx(kVarLines_15_35).epsilon(1e-2));

  const LimitLaw pl = limit_law(plan_regime(Regime::poisson_lines, 1.5, 3.5, 0.01, {}),
                                mu, 1.0, 1e-7);
  CHECK(pl.kind() == LimitKind::cf_oracle);
  CHECK(std::abs(pl.cf(0.21) -
                 cf_poisson_lines(mu, 1.5, make_pareto_unit_tail(3.5), 0.21, 1e-7)) < 1e-5);

  const LimitLaw pt = limit_law(plan_regime(Regime::points, 1.5, 2.5, 0.01, {.delta = 0.4}),
                                mu, 1.0, 1e-7);
  CHECK(pt.kind() == LimitKind::stable);

  const LimitLaw fv = limit_law(
      plan_regime(Regime::finite_variance, 3.0, 4.0, 0.01, {.lambda_override = 10.0}),
      mu, 1.0, 1e-7);
  CHECK(fv.kind() == LimitKind::gaussian);
  CHECK(fv.variance() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("stable sampler reproduces its characteristic function") {
  RngStream rng(404, 0);
  CHECK(sample_stable(1.5, 0.0, 0.7, rng) == 0.0);
  CHECK_THROWS_AS(sample_stable(2.5, 1.0, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_stable(1.5, 1.0, 1.7, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_stable(1.5, -1.0, 0.0, rng), std::invalid_argument);

  const int n = 400000;
  for (const auto& [alpha, sigma, beta] :
       std::vector<std::tuple<double, double, double>>{
           {1.5, 1.0, 0.0}, {1.3, 2.0, 1.0}, {1.7, 0.5, -0.6}}) {
    std::vector<double> x(n);
    RngStream r(505, static_cast<std::uint64_t>(alpha * 100));
    for (auto& v : x) v = sample_stable(alpha, sigma, beta, r);

    const LimitLaw law = LimitLaw::stable(alpha, sigma, beta, "check");
    for (double t : {-2.0, -0.7, 0.4, 1.0}) {
      const double ts = t / sigma;  // probe on the law's own scale
      CHECK(std::abs(empirical_cf(x, ts) - law.cf(ts)) < 3.0 / std::sqrt(double(n)));
    }
    if (beta == 0.0) {
      // Symmetric law: the sample median sits at 0.
      std::nth_element(x.begin(), x.begin() + n / 2, x.end());
      CHECK(std::abs(x[n / 2]) < 0.01 * sigma);
    }
  }
}

TEST_CASE("compensated sampler validates its spec") {
  RngStream rng(7, 7);
  CHECK_THROWS_AS(sample_compensated_poisson(
                      {.regime = Regime::high, .gamma1 = 1.5, .gamma2 = 1.5}, lap(), rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_compensated_poisson(
                      {.regime = Regime::intermediate, .gamma1 = 2.5, .gamma2 = 1.5},
                      lap(), rng),
                  HypothesisError);
  CHECK_THROWS_WITH_AS(
      (void)sample_compensated_poisson({.regime = Regime::intermediate,
                                        .gamma1 = 1.5,
                                        .gamma2 = 1.5,
                                        .eps_cut = 1e-6,
                                        .max_expected_points = 1e5},
                                       lap(), rng),
      doctest::Contains("max_expected_points"), std::runtime_error);

  // Determinism: equal streams give equal draws.
  const CompensatedSpec spec{.regime = Regime::intermediate,
                             .gamma1 = 1.5,
                             .gamma2 = 1.5,
                             .eps_cut = 0.6,
                             .eps_window = 1e-2};
  RngStream a(11, 3), b(11, 3);
  CHECK(sample_compensated_poisson(spec, lap(), a) ==
        sample_compensated_poisson(spec, lap(), b));
}

TEST_CASE("compensated intermediate sampler is centred and tracks the limit CF") {
  const CompensatedSpec spec{.regime = Regime::intermediate,
                             .gamma1 = 1.5,
                             .gamma2 = 1.5,
                             .eps_cut = 0.25,
                             .eps_window = 1e-3};
  const MeasureDescriptor mu = lap();
  const int n = 1200;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng(606, static_cast<std::uint64_t>(i));
    x[i] = sample_compensated_poisson(spec, mu, rng);
  }
  const double m = mean_of(x), v = variance_of(x);
  // Window residual can bias the mean by at most ~2 eps_window.
  CHECK(std::abs(m) < 4.0 * std::sqrt(v / n) + 2.0 * spec.eps_window);

  for (double t : {0.10, 0.15}) {
    const std::complex<double> want = cf_intermediate(mu, 1.5, 1.5, t, 1e-7);
    const double tol =
        2.0 / std::sqrt(double(n)) + compensated_cf_bias(spec, mu, t) + 1e-3;
    CHECK(std::abs(empirical_cf(x, t) - want) < tol);
  }
}

TEST_CASE("compensated line sampler matches the line limit in variance and CF") {
  const CompensatedSpec spec{.regime = Regime::poisson_lines,
                             .gamma1 = 1.2,
                             .gamma2 = 3.5,
                             .law2 = make_pareto_unit_tail(3.5),
                             .eps_cut = 0.086,
                             .eps_window = 1e-3};
  const MeasureDescriptor mu = lap();
  const int n = 8000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng(707, static_cast<std::uint64_t>(i));
    x[i] = sample_compensated_poisson(spec, mu, rng);
  }

  // The limit variance E[U2^2] V(1.2); the cut removes at most ~1% of it.
  const double v = variance_of(x);
  CHECK(std::abs(v / kVarLines_12_35 - 1.0) < 0.05);

  auto reference = [&](double t) {
    return cf_poisson_lines(mu, 1.2, spec.law2, t, 1e-7);
  };
  for (double t : {0.10, 0.20, 0.30, 0.45, 0.60}) {
    const double tol =
        2.0 / std::sqrt(double(n)) + compensated_cf_bias(spec, mu, t) + 1e-3;
    CHECK(std::abs(empirical_cf(x, t) - reference(t)) < tol);
  }
}
