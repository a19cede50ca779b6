#pragma once
// Heavy-tail-aware deterministic integration over R^2 x R_+^2 and the exact
// pre-limit characteristic function.
//
// Two layers:
//  - direct integrals with per-axis transforms (power-weighted 1-D/2-D maps,
//    kernel cross-correlation reductions for all second-moment functionals);
//  - a value-pushforward engine for characteristic-function exponents
//    integral of Psi(s * V) where V is the box mass or the line functional:
//    the (x, w)-intensity is pushed through V into a moment-matched value
//    histogram once, then evaluated for every grid point s.

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "boxfield/tails.hpp"

namespace boxfield {

struct QuadratureError : std::runtime_error {
  double best_estimate;
  double error_bound;
  QuadratureError(const std::string& what, double best, double bound)
      : std::runtime_error(what), best_estimate(best), error_bound(bound) {}
};

// ---------------------------------------------------------------------------
// Power-weighted integrals (split at 1, log maps absorb u^{-gamma-1}).
// ---------------------------------------------------------------------------

// integral_0^inf F(u) u^{-gamma-1} du for F with |F(u)| <= C min(u, u^alpha),
// gamma in (1, alpha).
double power_weighted_integral(const std::function<double(double)>& F, double gamma,
                               double tol);

// integral over (0,inf)^2 of g(u1,u2) u1^{-g1-1} u2^{-g2-1} du (iterated maps).
double product_power_weighted(const std::function<double(double, double)>& g, double g1,
                              double g2, double tol);

// E[ g(rho*U1, rho*U2) ] under the two unit-tail laws (pre-limit side of the
// asymptotic lemma).
double scaled_law_expectation(const std::function<double(double, double)>& g,
                              const EdgeLawDescriptor& law1, const EdgeLawDescriptor& law2,
                              double rho, double tol);

// ---------------------------------------------------------------------------
// Kernel cross-correlation reductions.
//
// For per-axis window masses S_a(x,w) = integral of kappa_a over [x-w/2, x+w/2]:
//   integral S_a S_b dx                 = integral G(d) (w - |d|)_+ dd,
//   integral integral S_a S_b dx w^{-g-1} dw = (1/(g(g-1))) integral G(d)|d|^{1-g} dd,
// with G(d) = integral kappa_a(t) kappa_b(t + d) dt. This turns every
// second-moment functional of the model into 1-D integrals.
// ---------------------------------------------------------------------------

double kernel_correlation(const Kernel1D& a, const Kernel1D& b, double d);

// integral over R of G(d) |d|^p dd for p in (-1, 0]; the |d|^p singularity is
// flattened exactly by the z = d^{p+1} substitution.
double correlation_abs_moment(const Kernel1D& a, const Kernel1D& b, double p, double tol);

// integral integral S_a(x,w) S_b(x,w) dx w^{-gamma-1} dw, gamma in (1,2).
double axis_variance_integral(const Kernel1D& a, const Kernel1D& b, double gamma,
                              double tol);

// ---------------------------------------------------------------------------
// Oscillatory reference integral: integral_0^inf Psi(u) u^{-gamma-1} du
// (independent quadrature route for the stable-constant pipeline; analytic
// Taylor head + pi-length panels + closed-form power tail).
// ---------------------------------------------------------------------------
std::complex<double> psi_power_integral(double gamma, double tol, double* err_out = nullptr);

// ---------------------------------------------------------------------------
// IntegrandSpec dispatch.
// ---------------------------------------------------------------------------

enum class IntegrandKernel {
  psi_of_box_mass,
  square_of_box_mass,
  psi_of_line_functional,
  square_of_line_functional,
  density_product,
};

enum class WeightKind {
  pure_power,      // u1^{-g1-1} u2^{-g2-1}
  power_times_f2,  // u1^{-g1-1} f2(u2)
  f2_squared_style,  // u1^{-g1-1} u2^2 f2(u2)  (Gaussian-lines variance weight)
};

struct IntegrandSpec {
  IntegrandKernel kernel;
  MeasureDescriptor mu;
  std::optional<MeasureDescriptor> nu;  // second measure for bilinear kernels
  WeightKind weight = WeightKind::pure_power;
  double gamma1 = 1.5;
  double gamma2 = 1.5;                  // pure_power only
  std::optional<EdgeLawDescriptor> law2;  // weights involving f2
  double t = 1.0;                       // CF argument for psi kernels
};

// Real kernels return a purely real result. Throws QuadratureError when the
// kernel/weight combination is not one arising in the model.
std::complex<double> integrate(const IntegrandSpec& spec, double tol);

// ---------------------------------------------------------------------------
// Pushforward CF engine.
// ---------------------------------------------------------------------------

struct CfAccuracy {
  double truncation = 0;  // t-independent: neglected domain mass
  double evaluation = 0;  // binning remainder + dephased-bin mass at this t
  double total() const { return truncation + evaluation; }
};

class CfEngine {
 public:
  // Exact exponent of E exp(i t J~_rho(mu)/n_rho):
  //   lambda rho^{g1+g2} * integral Psi((t/n) mu(B(x,w))) w1^{-g1-1} w2^{-g2-1} dx dw
  // over w_i >= rho * u_min,i.
  static CfEngine prelimit(const ScalingPlan& plan, const MeasureDescriptor& mu,
                           double t_max, double tol);

  // Compensated-Poisson limit exponent, w_i > 0 (intermediate regime).
  static CfEngine intermediate_limit(const MeasureDescriptor& mu, double gamma1,
                                     double gamma2, double t_max, double tol);

  // Poisson-lines limit exponent:
  //   integral Psi(t u2 * linemass(x, w1)) w1^{-g1-1} f2(u2) dx dw1 du2.
  static CfEngine poisson_lines_limit(const MeasureDescriptor& mu, double gamma1,
                                      const EdgeLawDescriptor& law2, double t_max,
                                      double tol);

  std::complex<double> exponent(double t) const;
  std::complex<double> cf(double t) const;  // exp(exponent(t))
  CfAccuracy accuracy(double t) const;      // absolute bound on the exponent

  CfEngine(CfEngine&&) noexcept;
  CfEngine& operator=(CfEngine&&) noexcept;
  ~CfEngine();

 private:
  struct Impl;
  explicit CfEngine(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Single-shot wrappers (the engine build is reused across a grid internally).
std::complex<double> prelimit_cf(const ScalingPlan& plan, const MeasureDescriptor& mu,
                                 double t, double tol);
std::vector<std::complex<double>> prelimit_cf_grid(const ScalingPlan& plan,
                                                   const MeasureDescriptor& mu,
                                                   const std::vector<double>& t_grid,
                                                   double tol);

}  // namespace boxfield
