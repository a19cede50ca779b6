#pragma once
// Signed reference measures on R^2 with closed-form antiderivatives.
//
// Every built-in measure is a finite combination of product terms
// w * k1(x1) * k2(x2), where each 1-D kernel is exponential-decay, Gaussian,
// or an interval indicator.  Product structure is what keeps box masses,
// line masses, L^p norms and the quadrature engine per-axis factorable, and
// it is closed under dilation, translation and scaling.

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace boxfield {

using Point2 = Eigen::Vector2d;
using Edge2 = Eigen::Array2d;

enum class Family { laplace_product, gaussian_product, box_indicator, linear_combination };

struct Kernel1D {
  enum class Kind { exp_decay, gaussian, interval };
  Kind kind = Kind::exp_decay;
  double amp = 1.0;    // peak amplitude, > 0
  double par = 1.0;    // decay rate (exp) or sigma (gaussian)
  double shift = 0.0;  // centre; intervals use lo/hi instead
  double lo = 0.0, hi = 0.0;

  double density(double y) const;
  double segment_mass(double a, double b) const;
  // mass of [x - w/2, x + w/2]
  double box_segment(double x, double w) const { return segment_mass(x - 0.5 * w, x + 0.5 * w); }
  double mass() const;
  double sup_density() const;
  double lp_gamma(double g) const;  // integral of density^g
  double centre() const;
  // r such that the kernel mass outside [centre-r, centre+r] is <= tail_eps * mass
  double half_extent(double tail_eps) const;
  Kernel1D dilated(double a) const;
  Kernel1D translated(double s) const;
};

struct ProductTerm {
  double weight = 1.0;
  Kernel1D k1, k2;
};

// |density(x)| <= C * exp(-c (|x1| + |x2|)) everywhere.
struct DecayEnvelope {
  double C = 1.0;
  double c = 1.0;
};

class MeasureDescriptor {
 public:
  static MeasureDescriptor laplace_product(double C, double c, const Point2& t = Point2::Zero());
  static MeasureDescriptor gaussian_product(double C, double s, const Point2& t = Point2::Zero());
  static MeasureDescriptor box_indicator(double x_lo, double y_lo, double x_hi, double y_hi,
                                         double amp = 1.0);
  static MeasureDescriptor linear_combination(
      const std::vector<std::pair<double, MeasureDescriptor>>& parts);

  Family family() const { return family_; }
  const std::vector<ProductTerm>& terms() const { return terms_; }
  const DecayEnvelope& envelope() const { return env_; }
  Edge2 alpha_exponents() const { return Edge2{2.0, 2.0}; }
  // Calibrated constant with phi(u) <= phi_constant * min(u1,u1^2) min(u2,u2^2).
  double phi_constant() const;

  // Admissibility tags.  Interval kernels are excluded from the point-regime
  // class (their local averages do not converge pointwise to the density).
  bool admissible_high() const { return true; }
  bool admissible_lines() const { return true; }
  bool admissible_points() const;

  double density(const Point2& x) const;
  double box_mass(const Point2& x, const Edge2& u) const;
  double box_mass_rotated(const Point2& x, const Edge2& u, double theta) const;
  double line_mass(const Point2& x, double u1) const;
  double total_mass() const;        // mu(R^2), signed, closed form
  double tv_upper_bound() const;    // sum_j |w_j| * term mass: >= total variation
  double total_variation(double tol = 1e-8) const;  // exact; numeric for mixed signs

  MeasureDescriptor dilate(double a) const;
  MeasureDescriptor translate(const Point2& s) const;
  MeasureDescriptor scale(double k) const;

  // (1/(u1 u2)) sum_j |w_j| (term mass of B(x,u)): dominates |mu|(B)/area.
  double abs_local_average(const Point2& x, const Edge2& u) const;
  // C * prod_i min(1, 2/(c |x_i|)) from the decay envelope.
  double maximal_function_bound(const Point2& x) const;

  // integral over x of mu(B(x,u))^2, via per-axis overlap integrals.
  double phi(const Edge2& u) const;
  // integral over x of S_axis^(j)(x,w) * S_axis^(k)(x,w)
  double axis_overlap(int axis, int j, int k, double w) const;

  // Per-axis coverage interval: every term's kernel keeps all but tail_eps of
  // its mass inside [lo, hi].
  void axis_extent(int axis, double tail_eps, double* lo, double* hi) const;

  struct StableParams {
    double sigma = 0.0;          // ||f||_gamma
    double beta = 0.0;           // skewness in [-1,1]
    double norm_plus_g = 0.0;    // ||f_+||_gamma^gamma
    double norm_minus_g = 0.0;   // ||f_-||_gamma^gamma
  };
  StableParams stable_params(double gamma1, double tol = 1e-8) const;

  std::string format() const;

 private:
  MeasureDescriptor() = default;
  void refresh_envelope();

  Family family_ = Family::laplace_product;
  std::vector<ProductTerm> terms_;
  DecayEnvelope env_;
  mutable double phi_const_ = -1.0;  // lazy
};

// Mini-language: "laplace:C=1,c=1[,tx=..,ty=..]", "gauss:C=1,s=1[,tx,ty]",
// "box:xlo,ylo,xhi,yhi[,amp=..]", "combo:w*SPEC;w*SPEC;...".
MeasureDescriptor parse_measure(const std::string& text);

}  // namespace boxfield
