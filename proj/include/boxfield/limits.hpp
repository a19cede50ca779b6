#pragma once
// The six limiting random fields: closed-form variances where the limit is
// Gaussian, characteristic-function oracles where it is not, the stable law
// for the point regime, and Monte Carlo samplers for the non-Gaussian limits.
//
// Variance evaluators ride the kernel cross-correlation reductions from the
// quadrature module; CF oracles ride the pushforward engine.  The compensated
// Poisson sampler is epsilon-truncated: exact above the cut, compensated in
// mean everywhere, with a closed-form bound on the CF error it introduces.

#include <complex>
#include <functional>
#include <string>

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "boxfield/rng.hpp"
#include "boxfield/tails.hpp"

namespace boxfield {

enum class LimitKind { gaussian, stable, cf_oracle };

struct StableLaw {
  double alpha = 1.5;
  double sigma = 0.0;
  double beta = 0.0;
};

class LimitLaw {
 public:
  static LimitLaw gaussian(double variance, std::string provenance);
  static LimitLaw stable(double alpha, double sigma, double beta, std::string provenance);
  static LimitLaw cf_oracle(std::function<std::complex<double>(double)> cf,
                            std::string provenance);

  LimitKind kind() const { return kind_; }
  double variance() const;             // gaussian kind only
  const StableLaw& stable_law() const;  // stable kind only
  std::complex<double> cf(double t) const;
  const std::string& provenance() const { return provenance_; }

  // typical spread, for choosing CF grids (gaussian: sd; stable: sigma);
  // zero for oracle kinds, whose spread the caller estimates from samples
  double spread_hint() const;

 private:
  LimitLaw() = default;
  LimitKind kind_ = LimitKind::gaussian;
  double variance_ = 0.0;
  StableLaw stable_{};
  std::function<std::complex<double>(double)> oracle_;
  std::string provenance_;
};

// covariance of the high-intensity Gaussian field at (mu, nu)
double variance_high(const MeasureDescriptor& mu, const MeasureDescriptor& nu, double gamma1,
                     double gamma2, double tol = 1e-6);

// CF of the intermediate compensated-Poisson field evaluated at mu
std::complex<double> cf_intermediate(const MeasureDescriptor& mu, double gamma1, double gamma2,
                                     double t, double tol = 1e-6);

// variance of the Gaussian-lines field (width second moment factored out)
double variance_gaussian_lines(const MeasureDescriptor& mu, double gamma1,
                               const EdgeLawDescriptor& law2, double tol = 1e-6);

// CF of the Poisson-lines field evaluated at mu
std::complex<double> cf_poisson_lines(const MeasureDescriptor& mu, double gamma1,
                                      const EdgeLawDescriptor& law2, double t,
                                      double tol = 1e-6);

// the point-regime stable law: alpha = gamma1, (sigma, beta) from the density;
// the constant c_{gamma1,gamma2} lives in the plan normalizer, not here
LimitLaw stable_limit(const MeasureDescriptor& mu, double gamma1, double gamma2,
                      const EdgeLawDescriptor& law2);

// covariance of the finite-variance Gaussian field: integral of the densities
double variance_finite(const MeasureDescriptor& mu, const MeasureDescriptor& nu,
                       double tol = 1e-6);

// the limit law matching plan.regime, with CF oracles valid up to |t| <= t_max
LimitLaw limit_law(const ScalingPlan& plan, const MeasureDescriptor& mu, double t_max,
                   double tol = 1e-6);

// one draw with CF exp(-sigma^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha/2)))
double sample_stable(double alpha, double sigma, double beta, RngStream& rng);

// epsilon-truncated compensated-Poisson limit draws (intermediate or
// poisson_lines regime).  eps_cut removes the u1 < eps (and u2 < eps, when the
// width is also a power law) part of the intensity; its mean is compensated
// exactly, and compensated_cf_bias bounds the CF error of cut plus window.
struct CompensatedSpec {
  Regime regime = Regime::intermediate;
  double gamma1 = 1.5;
  double gamma2 = 1.5;       // intermediate: second power; poisson_lines: unused
  EdgeLawDescriptor law2{};  // poisson_lines: width law (gamma > gamma1)
  double eps_cut = 0.1;
  double eps_window = 1e-4;
  double max_expected_points = 5e7;
};

double sample_compensated_poisson(const CompensatedSpec& spec, const MeasureDescriptor& mu,
                                  RngStream& rng);

// bound on |CF of the truncated draw - CF of the limit| at argument t
double compensated_cf_bias(const CompensatedSpec& spec, const MeasureDescriptor& mu, double t);

}  // namespace boxfield
