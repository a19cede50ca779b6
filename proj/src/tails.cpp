#include "boxfield/tails.hpp"

#include <cmath>
#include <stdexcept>

namespace boxfield {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

double EdgeLawDescriptor::tail_constant() const { return gamma * std::pow(u_min, gamma); }

double EdgeLawDescriptor::density(double u) const {
  if (u < u_min) return 0.0;
  return gamma * std::pow(u_min, gamma) * std::pow(u, -gamma - 1.0);
}

double EdgeLawDescriptor::cdf(double u) const {
  if (u <= u_min) return 0.0;
  return 1.0 - std::pow(u_min / u, gamma);
}

double EdgeLawDescriptor::quantile(double p) const {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("quantile: p must lie in [0,1)");
  return u_min * std::exp(-std::log1p(-p) / gamma);
}

double EdgeLawDescriptor::sample(RngStream& rng) const {
  // 1-U with U in [0,1) is in (0,1], so the log is finite.
  return u_min * std::exp(-std::log(1.0 - rng.uniform01()) / gamma);
}

double EdgeLawDescriptor::moment(double p) const {
  if (p >= gamma) throw std::invalid_argument("moment: order must be below gamma");
  return gamma * std::pow(u_min, p) / (gamma - p);
}

double EdgeLawDescriptor::second_moment() const {
  if (gamma <= 2.0) return std::numeric_limits<double>::infinity();
  return moment(2.0);
}

double EdgeLawDescriptor::tail_mass(double cap) const {
  if (cap <= u_min) return 1.0;
  return std::pow(u_min / cap, gamma);
}

double EdgeLawDescriptor::partial_moment(double p, double cap) const {
  if (cap <= u_min) return 0.0;
  if (!std::isfinite(cap)) {
    return p < gamma ? moment(p) : std::numeric_limits<double>::infinity();
  }
  // gamma u_min^gamma int_{u_min}^{cap} u^{p-gamma-1} du
  double g = gamma * std::pow(u_min, gamma);
  if (std::abs(p - gamma) < 1e-12) return g * std::log(cap / u_min);
  return g * (std::pow(cap, p - gamma) - std::pow(u_min, p - gamma)) / (p - gamma);
}

double EdgeLawDescriptor::mean_above(double cap) const {
  if (cap <= u_min) return mean();
  if (gamma <= 1.0) return std::numeric_limits<double>::infinity();
  return gamma * std::pow(u_min, gamma) * std::pow(cap, 1.0 - gamma) / (gamma - 1.0);
}

double EdgeLawDescriptor::sample_size_biased(RngStream& rng, double cap) const {
  double g = gamma - 1.0;
  if (g <= 0.0) throw std::domain_error("size-biased draw needs gamma > 1");
  double u = rng.uniform01();
  if (std::isfinite(cap)) {
    double fcap = 1.0 - std::pow(u_min / cap, g);
    return u_min * std::pow(1.0 - u * fcap, -1.0 / g);
  }
  return u_min * std::exp(-std::log(1.0 - u) / g);
}

double EdgeLawDescriptor::sample_below(RngStream& rng, double cap) const {
  double u = rng.uniform01();
  if (std::isfinite(cap)) {
    double fcap = 1.0 - std::pow(u_min / cap, gamma);
    return u_min * std::pow(1.0 - u * fcap, -1.0 / gamma);
  }
  return u_min * std::exp(-std::log(1.0 - u) / gamma);
}

EdgeLawDescriptor make_pareto_unit_tail(double gamma) {
  if (gamma <= 1.0) throw std::invalid_argument("edge law requires gamma > 1");
  return EdgeLawDescriptor{gamma, std::pow(gamma, -1.0 / gamma)};
}

EdgeLawDescriptor make_pareto(double gamma, double u_min) {
  if (gamma <= 1.0 || u_min <= 0.0) throw std::invalid_argument("edge law requires gamma > 1, u_min > 0");
  return EdgeLawDescriptor{gamma, u_min};
}

std::complex<double> psi(double s) {
  double re = -2.0 * std::pow(std::sin(0.5 * s), 2);
  double im;
  double a = std::abs(s);
  if (a < 0.05) {
    double s2 = s * s;
    im = -s * s2 / 6.0 * (1.0 - s2 / 20.0 * (1.0 - s2 / 42.0 * (1.0 - s2 / 72.0)));
  } else {
    im = std::sin(s) - s;
  }
  return {re, im};
}

std::complex<double> psi_tail_transform(double gamma) {
  if (gamma <= 1.0 || gamma >= 2.0) throw std::invalid_argument("psi_tail_transform: gamma must lie in (1,2)");
  double re = std::tgamma(2.0 - gamma) / (gamma * (gamma - 1.0)) * std::cos(0.5 * kPi * gamma);
  double im = -re * std::tan(0.5 * kPi * gamma);
  return {re, im};
}

LimitConstants limit_constants(double gamma1, double gamma2) {
  if (!(gamma1 < gamma2)) throw std::invalid_argument("limit_constants: gamma1 < gamma2 required");
  LimitConstants lc;
  lc.gamma1 = gamma1;
  lc.gamma2 = gamma2;
  EdgeLawDescriptor law1 = make_pareto_unit_tail(gamma1);
  EdgeLawDescriptor law2 = make_pareto_unit_tail(gamma2);
  if (gamma1 > 1.0 && gamma1 < 2.0) {
    lc.d_gamma1 = psi_tail_transform(gamma1);
    lc.c_gamma1 = std::pow(-lc.d_gamma1.real(), 1.0 / gamma1);
    lc.c2 = std::pow(law2.moment(gamma1), 1.0 / gamma1);
    lc.c_gamma12 = lc.c_gamma1 * lc.c2;
  }
  lc.m1 = law1.mean();
  lc.m2 = law2.mean();
  lc.v1 = law1.second_moment();
  lc.v2 = law2.second_moment();
  return lc;
}

}  // namespace boxfield
