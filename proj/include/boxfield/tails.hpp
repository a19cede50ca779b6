#pragma once
// Heavy-tailed edge laws and the constants entering the limiting fields.
//
// Every edge law is an exact Pareto with unit tail constant: density
// gamma * u_min^gamma / u^{gamma+1} on [u_min, inf) with u_min = gamma^{-1/gamma},
// so that u^{gamma+1} * density(u) == 1 identically on the support.  That makes
// rescaled-law integrands agree exactly with their scale-free limits above the
// (shrinking) lower endpoint, which is what the convergence ladders measure.

#include <complex>
#include <limits>

#include "boxfield/rng.hpp"

namespace boxfield {

struct EdgeLawDescriptor {
  double gamma = 0.0;
  double u_min = 0.0;

  double tail_constant() const;            // gamma * u_min^gamma (1 for unit-tail laws)
  double density(double u) const;
  double cdf(double u) const;
  double quantile(double p) const;         // inverse cdf, p in [0,1)
  double sample(RngStream& rng) const;     // u_min * (1-U)^{-1/gamma}

  double mean() const { return moment(1.0); }
  // E[u^p], requires p < gamma
  double moment(double p) const;
  // E[u^2] or +inf when gamma <= 2
  double second_moment() const;
  double tail_mass(double cap) const;                  // P(u > cap)
  double partial_moment(double p, double cap) const;   // E[u^p ; u <= cap]
  double mean_above(double cap) const;                 // E[u ; u > cap]

  // Draw from density proportional to u * density(u) on [u_min, cap]
  // (cap = +inf allowed); this is Pareto(gamma-1, u_min), truncated.
  double sample_size_biased(RngStream& rng, double cap) const;
  // Draw conditioned on u <= cap.
  double sample_below(RngStream& rng, double cap) const;
};

EdgeLawDescriptor make_pareto_unit_tail(double gamma);
EdgeLawDescriptor make_pareto(double gamma, double u_min);

// e^{is} - 1 - is, evaluated without cancellation near 0.
std::complex<double> psi(double s);

// integral_0^inf psi(u) u^{-gamma-1} du for gamma in (1,2), closed form:
// Gamma(2-gamma)/(gamma(gamma-1)) * cos(pi gamma/2) * (1 - i tan(pi gamma/2)).
std::complex<double> psi_tail_transform(double gamma);

struct LimitConstants {
  double gamma1 = 0.0, gamma2 = 0.0;
  std::complex<double> d_gamma1;  // psi_tail_transform(gamma1)
  double c_gamma1 = 0.0;          // (-Re d_gamma1)^{1/gamma1}
  double c2 = 0.0;                // (E[u2^{gamma1}])^{1/gamma1} under law2
  double c_gamma12 = 0.0;         // c_gamma1 * c2: the point-regime normalizing constant
  double m1 = 0.0, m2 = 0.0;      // first moments of law1, law2
  double v1 = 0.0, v2 = 0.0;      // second moments (+inf below gamma = 2)
};

// Constants for unit-tail laws with the given indices; requires gamma1 < gamma2.
LimitConstants limit_constants(double gamma1, double gamma2);

}  // namespace boxfield
