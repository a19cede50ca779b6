#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "boxfield/quadrature.hpp"
#include "boxfield/tails.hpp"
#include "doctest.h"

using namespace boxfield;
using cd = std::complex<double>;

namespace {

// Reference values below were produced by a standalone program using exact
// trapezoid primitives of Psi for interval kernels, quantile-transformed
// Pareto expectations, and graded Riemann sums, each at two resolutions.

ScalingPlan make_plan(Regime r, double g1, double g2, double rho, double lambda, double n) {
  ScalingPlan p;
  p.regime = r;
  p.gamma1 = g1;
  p.gamma2 = g2;
  p.rho = rho;
  p.lambda_rho = lambda;
  p.n_rho = n;
  p.law1 = make_pareto_unit_tail(g1);
  p.law2 = make_pareto_unit_tail(g2);
  return p;
}

// Axis variance of the two-sided exponential kernel e^{-|y|} against itself:
// correlation is e^{-|d|}(1+|d|), and the |d|^{1-g} moment is Gamma-closed.
double exp_kernel_axis_variance(double g) {
  return 2.0 * (std::tgamma(2.0 - g) + std::tgamma(3.0 - g)) / (g * (g - 1.0));
}

double rel_gap(cd a, cd b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Kernel1D interval_kernel(double lo, double hi, double amp) {
  Kernel1D k;
  k.kind = Kernel1D::Kind::interval;
  k.amp = amp;
  k.lo = lo;
  k.hi = hi;
  return k;
}

Kernel1D gaussian_kernel(double amp, double sigma, double centre) {
  Kernel1D k;
  k.kind = Kernel1D::Kind::gaussian;
  k.amp = amp;
  k.par = sigma;
  k.shift = centre;
  return k;
}

Kernel1D exp_kernel(double amp, double rate, double centre) {
  Kernel1D k;
  k.kind = Kernel1D::Kind::exp_decay;
  k.amp = amp;
  k.par = rate;
  k.shift = centre;
  return k;
}

}  // namespace

TEST_CASE("power-weighted integral of min(u,u^2) matches the closed form") {
  auto f = [](double u) { return std::min(u, u * u); };
  for (double g : {1.2, 1.5, 1.8}) {
    const double exact = 1.0 / (2.0 - g) + 1.0 / (g - 1.0);
    CHECK(power_weighted_integral(f, g, 1e-9) == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("product power-weighted integral: separable and mixed integrands") {
  auto sep = [](double a, double b) { return std::min(a, a * a) * std::min(b, b * b); };
  const double e1 = 1.0 / 0.7 + 1.0 / 0.3, e2 = 1.0 / 0.3 + 1.0 / 0.7;
  CHECK(product_power_weighted(sep, 1.3, 1.7, 1e-7) ==
        doctest::Approx(e1 * e2).epsilon(1e-6));
  auto mixed = [](double a, double b) {
    return std::min(a, a * a) * std::min(b, b * b) * std::exp(-0.3 * a * b);
  };
  // reference from an incomplete-gamma reduction of the inner integral,
  // evaluated at 30 digits
  CHECK(product_power_weighted(mixed, 1.3, 1.7, 1e-6) ==
        doctest::Approx(12.7549101).epsilon(1e-4));
}

TEST_CASE("scaled two-law expectation: moment closed form and frozen reference") {
  const auto law1 = make_pareto_unit_tail(1.3), law2 = make_pareto_unit_tail(1.7);
  const double rho = 0.05;
  auto powg = [](double a, double b) { return std::pow(a, 0.8) * std::pow(b, 0.9); };
  const double exact = std::pow(rho, 1.7) * law1.moment(0.8) * law2.moment(0.9);
  CHECK(scaled_law_expectation(powg, law1, law2, rho, 1e-9 * exact) ==
        doctest::Approx(exact).epsilon(1e-7));
  auto sat = [](double a, double b) { return a * b / (1.0 + a * b); };
  CHECK(scaled_law_expectation(sat, law1, law2, rho, 1e-8) ==
        doctest::Approx(0.01149363).epsilon(5e-4));
}

TEST_CASE("kernel correlations match closed forms") {
  const Kernel1D ia = interval_kernel(0.0, 1.0, 2.0);
  const Kernel1D ib = interval_kernel(0.5, 2.0, 3.0);
  // interval-interval: amp product times overlap length
  CHECK(kernel_correlation(ia, ib, 0.0) == doctest::Approx(6.0 * 0.5).epsilon(1e-12));
  CHECK(kernel_correlation(ia, ib, 0.75) == doctest::Approx(6.0 * 1.0).epsilon(1e-12));
  CHECK(kernel_correlation(ia, ib, 10.0) == 0.0);
  // gaussian-gaussian closed form
  const Kernel1D ga = gaussian_kernel(1.5, 0.7, 0.2);
  const Kernel1D gb = gaussian_kernel(0.8, 1.1, -0.4);
  auto gg = [&](double d) {
    const double s2 = 0.7 * 0.7 + 1.1 * 1.1;
    const double delta = 0.2 - (-0.4) + d;
    return 1.5 * 0.8 * std::sqrt(2.0 * std::numbers::pi * 0.7 * 0.7 * 1.1 * 1.1 / s2) *
           std::exp(-delta * delta / (2.0 * s2));
  };
  for (double d : {0.0, 0.9, -2.3})
    CHECK(kernel_correlation(ga, gb, d) == doctest::Approx(gg(d)).epsilon(1e-9));
}

TEST_CASE("correlation absolute moment flattens the endpoint singularity") {
  const Kernel1D u = interval_kernel(0.0, 1.0, 1.0);
  // G(d) = (1-|d|)_+, integral G(d)|d|^p dd = 2/((p+1)(p+2))
  CHECK(correlation_abs_moment(u, u, -0.5, 1e-9) ==
        doctest::Approx(2.0 / (0.5 * 1.5)).epsilon(1e-7));
  CHECK(correlation_abs_moment(u, u, 0.0, 1e-9) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS((void)correlation_abs_moment(u, u, -1.2, 1e-6), QuadratureError);
}

TEST_CASE("axis variance integrals agree with Gamma-function closed forms") {
  const Kernel1D box = interval_kernel(0.0, 1.0, 1.0);
  for (double g : {1.3, 1.5, 1.8}) {
    const double exact = 2.0 / ((2.0 - g) * (3.0 - g) * g * (g - 1.0));
    CHECK(axis_variance_integral(box, box, g, 1e-8) == doctest::Approx(exact).epsilon(1e-6));
  }
  const Kernel1D ek = exp_kernel(1.0, 1.0, 0.0);
  for (double g : {1.3, 1.5})
    CHECK(axis_variance_integral(ek, ek, g, 1e-7) ==
          doctest::Approx(exp_kernel_axis_variance(g)).epsilon(1e-6));
  // mixed kernels: frozen brute-force reference
  CHECK(axis_variance_integral(box, ek, 1.5, 1e-6) ==
        doctest::Approx(4.0395517).epsilon(1e-5));
  CHECK_THROWS_AS((void)axis_variance_integral(box, box, 2.3, 1e-6), QuadratureError);
}

TEST_CASE("oscillatory power integral agrees with the analytic transform") {
  for (double g : {1.2, 1.5, 1.8}) {
    double err = 0.0;
    const cd quad = psi_power_integral(g, 1e-9, &err);
    const cd exact = psi_tail_transform(g);
    CHECK(std::abs(quad - exact) <= 1e-8 + err);
    CHECK(err < 1e-7);
  }
}

TEST_CASE("intermediate-limit exponent matches the trapezoid-primitive reference") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  struct Case {
    double g1, g2, t;
    cd ref;
    double slack, acc_cap;
  };
  const Case cases[] = {
      {1.5, 1.5, 0.3, {-0.5677630, -0.0204217}, 5e-4, 1e-4},
      {1.5, 1.5, 0.7, {-3.0642574, -0.2561927}, 1.5e-3, 1e-4},
      {1.5, 1.5, 1.5, {-13.5568, -2.386643}, 6e-3, 2e-4},
      {1.3, 1.7, 0.7, {-4.5092676, -0.3182621}, 1.5e-3, 1e-3},
  };
  for (const auto& c : cases) {
    CAPTURE(c.g1);
    CAPTURE(c.g2);
    CAPTURE(c.t);
    const CfEngine eng = CfEngine::intermediate_limit(mu, c.g1, c.g2, c.t, 1e-3);
    const cd got = eng.exponent(c.t);
    const double acc = eng.accuracy(c.t).total();
    CHECK(acc < c.acc_cap);
    CHECK(std::abs(got - c.ref) <= acc + c.slack);
  }
}

TEST_CASE("prelimit exponent at finite rho matches the reference") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  const double rho = 0.05;
  const auto plan = make_plan(Regime::intermediate, 1.3, 1.7, rho, std::pow(rho, -3.0), 1.0);
  const CfEngine eng = CfEngine::prelimit(plan, mu, 1.0, 1e-3);
  const cd ref(-6.2313065, -0.9070126);
  const double acc = eng.accuracy(1.0).total();
  CHECK(acc < 1e-4);
  CHECK(std::abs(eng.exponent(1.0) - ref) <= acc + 5e-4);
  // the characteristic function wrapper exponentiates the same engine
  const cd via = prelimit_cf(plan, mu, 1.0, 1e-3 + acc);
  CHECK(std::abs(via - std::exp(ref)) < 1e-3);
}

TEST_CASE("poisson-lines exponent matches the reference") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  struct Case {
    double g1, g2, t;
    cd ref;
    double slack, acc_cap;
  };
  const Case cases[] = {
      {1.3, 1.7, 0.5, {-2.1229838, -1.8782529}, 2e-3, 5e-4},
      {1.3, 1.7, 2.0, {-13.9114774, -17.9954325}, 8e-3, 3e-3},
      {1.5, 2.5, 1.0, {-2.6287028, -1.0812924}, 2e-3, 1e-4},
  };
  for (const auto& c : cases) {
    CAPTURE(c.g1);
    CAPTURE(c.g2);
    CAPTURE(c.t);
    const auto law2 = make_pareto_unit_tail(c.g2);
    const CfEngine eng = CfEngine::poisson_lines_limit(mu, c.g1, law2, c.t, 1e-3);
    const cd got = eng.exponent(c.t);
    const double acc = eng.accuracy(c.t).total();
    CHECK(acc < c.acc_cap);
    CHECK(std::abs(got - c.ref) <= acc + c.slack);
  }
}

TEST_CASE("exponent curvature at zero reproduces the variance reduction") {
  // box kernels: both routes fully independent of the histogram engine
  const auto lap = MeasureDescriptor::laplace_product(1.0, 1.0);
  const IntegrandSpec vs{.kernel = IntegrandKernel::square_of_box_mass,
                         .mu = lap,
                         .nu = {},
                         .weight = WeightKind::pure_power,
                         .gamma1 = 1.3,
                         .gamma2 = 1.6,
                         .law2 = {},
                         .t = 1.0};
  const double cz = integrate(vs, 1e-6).real();
  CHECK(cz == doctest::Approx(exp_kernel_axis_variance(1.3) * exp_kernel_axis_variance(1.6))
                  .epsilon(1e-5));
  const double t0 = 0.01;
  const CfEngine eng = CfEngine::intermediate_limit(lap, 1.3, 1.6, t0, 1e-4);
  const double curv = eng.exponent(t0).real() / (-0.5 * t0 * t0);
  CHECK(curv == doctest::Approx(cz).epsilon(2e-2));
}

TEST_CASE("line-functional curvature reproduces the gaussian-lines variance") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  const auto law2 = make_pareto_unit_tail(3.5);
  const IntegrandSpec vs{.kernel = IntegrandKernel::square_of_line_functional,
                         .mu = mu,
                         .nu = {},
                         .weight = WeightKind::f2_squared_style,
                         .gamma1 = 1.5,
                         .gamma2 = 1.5,
                         .law2 = law2,
                         .t = 1.0};
  const double sig2 = integrate(vs, 1e-6).real();
  const double exact = law2.second_moment() * 2.0 / (0.5 * 1.5 * 1.5 * 0.5);
  CHECK(sig2 == doctest::Approx(exact).epsilon(1e-5));
  const double t0 = 0.05;
  const CfEngine eng = CfEngine::poisson_lines_limit(mu, 1.5, law2, t0, 1e-4);
  const double curv = eng.exponent(t0).real() / (-0.5 * t0 * t0);
  CHECK(curv == doctest::Approx(sig2).epsilon(4e-2));
}

TEST_CASE("density products and hypothesis guards") {
  IntegrandSpec dp{.kernel = IntegrandKernel::density_product,
                   .mu = MeasureDescriptor::laplace_product(1.0, 1.0),
                   .nu = {},
                   .weight = WeightKind::pure_power,
                   .gamma1 = 1.5,
                   .gamma2 = 1.5,
                   .law2 = {},
                   .t = 1.0};
  CHECK(integrate(dp, 1e-9).real() == doctest::Approx(1.0).epsilon(1e-9));
  dp.mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  dp.nu = MeasureDescriptor::box_indicator(0.5, 0.0, 1.5, 1.0);
  CHECK(integrate(dp, 1e-9).real() == doctest::Approx(0.5).epsilon(1e-9));

  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  CHECK_THROWS_AS((void)CfEngine::intermediate_limit(mu, 1.5, 2.5, 1.0, 1e-3),
                  HypothesisError);
  CHECK_THROWS_AS(
      (void)CfEngine::poisson_lines_limit(mu, 1.7, make_pareto_unit_tail(1.5), 1.0, 1e-3),
      HypothesisError);
  const IntegrandSpec gl{.kernel = IntegrandKernel::square_of_line_functional,
                         .mu = mu,
                         .nu = {},
                         .weight = WeightKind::f2_squared_style,
                         .gamma1 = 1.3,
                         .gamma2 = 1.5,
                         .law2 = make_pareto_unit_tail(1.8),
                         .t = 1.0};
  CHECK_THROWS_AS((void)integrate(gl, 1e-6), HypothesisError);
  const IntegrandSpec bad{.kernel = IntegrandKernel::psi_of_box_mass,
                          .mu = mu,
                          .nu = {},
                          .weight = WeightKind::power_times_f2,
                          .gamma1 = 1.5,
                          .gamma2 = 1.5,
                          .law2 = {},
                          .t = 1.0};
  CHECK_THROWS_AS((void)integrate(bad, 1e-6), QuadratureError);
}

TEST_CASE("characteristic-function axioms and determinism") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  const auto plan = make_plan(Regime::intermediate, 1.4, 1.6, 0.1, std::pow(0.1, -3.0), 1.0);
  const CfEngine eng = CfEngine::prelimit(plan, mu, 2.0, 1e-3);
  CHECK(eng.exponent(0.0) == cd(0.0, 0.0));
  CHECK(eng.cf(0.0) == cd(1.0, 0.0));
  for (double t : {0.3, 1.1, 2.0}) {
    CHECK(std::abs(eng.cf(t)) <= 1.0 + 1e-12);
    CHECK(std::abs(eng.cf(-t) - std::conj(eng.cf(t))) < 1e-14);
    CHECK(eng.exponent(t).real() <= 1e-12);  // |cf| <= 1 pointwise
  }
  // grid wrapper consistent with single evaluations
  const std::vector<double> grid{-1.5, -0.5, 0.0, 0.5, 1.5};
  const auto vals = prelimit_cf_grid(plan, mu, grid, 1e-3);
  const CfEngine ref = CfEngine::prelimit(plan, mu, 1.5, 1e-3);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(vals[i] - std::exp(ref.exponent(grid[i]))) < 1e-9);
  // identical builds are bit-identical
  const CfEngine e2 = CfEngine::prelimit(plan, mu, 2.0, 1e-3);
  for (double t : {0.4, 1.7}) {
    CHECK(eng.exponent(t).real() == e2.exponent(t).real());
    CHECK(eng.exponent(t).imag() == e2.exponent(t).imag());
  }
}

TEST_CASE("engine accuracy reports shrink as tolerance tightens") {
  const auto mu = MeasureDescriptor::box_indicator(0.0, 0.0, 1.0, 1.0);
  const CfEngine coarse = CfEngine::intermediate_limit(mu, 1.5, 1.5, 0.7, 1e-2);
  const CfEngine fine = CfEngine::intermediate_limit(mu, 1.5, 1.5, 0.7, 1e-6);
  const double ga = std::abs(coarse.exponent(0.7) - fine.exponent(0.7));
  CHECK(ga <= coarse.accuracy(0.7).total() + fine.accuracy(0.7).total());
  CHECK(fine.accuracy(0.7).total() < coarse.accuracy(0.7).total());
  CHECK(rel_gap(fine.exponent(0.7), cd(-3.0642574, -0.2561927)) < 2e-3);
}
