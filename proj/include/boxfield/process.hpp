#pragma once
// Scaling-regime planning, Poisson box-field sampling over a finite window,
// and evaluation of the centred normalized functional.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "boxfield/measure.hpp"
#include "boxfield/rng.hpp"
#include "boxfield/tails.hpp"

namespace boxfield {

enum class Regime {
  high,
  intermediate,
  gaussian_lines,
  poisson_lines,
  points,
  finite_variance,
};

const char* regime_name(Regime r);
// Accepts both spellings ("poisson-lines", "poisson_lines"); nullopt if unknown.
std::optional<Regime> parse_regime(std::string_view name);

// Thrown when requested parameters violate the regime's limit-theorem hypotheses.
struct HypothesisError : std::domain_error {
  using std::domain_error::domain_error;
};

struct PlanKnobs {
  double delta = 0.5;    // exponent offset: high -> lambda = rho^{-(g1+g2)-delta},
                         // points -> lambda = rho^{-g1+delta}
  double eta = 1.0;      // gaussian_lines only; must lie in (0, gamma2)
  double a_scale = 1.0;  // general-a factor (intermediate / poisson_lines / gaussian_lines)
  std::optional<double> lambda_override;  // finite_variance: free lambda -> infinity
};

struct ScalingPlan {
  Regime regime;
  double gamma1 = 0;
  double gamma2 = 0;
  double rho = 0;
  double lambda_rho = 0;
  double n_rho = 1;  // normalizer of the centred functional
  double eta = 0;    // gaussian_lines only
  double a_scale = 1;
  EdgeLawDescriptor law1, law2;  // unit-tail edge laws

  // Analytic mean of the un-normalized functional: lambda * rho^2 * mu(R^2) * m1 * m2.
  double centring(const MeasureDescriptor& mu) const;
};

// Canonical lambda_rho / n_rho per regime; throws HypothesisError naming the
// violated inequality.
ScalingPlan plan_regime(Regime regime, double gamma1, double gamma2, double rho,
                        const PlanKnobs& knobs = {});

struct Box {
  Eigen::Vector2d centre;
  Eigen::Array2d edge;  // already rho-scaled edge lengths
  double theta = 0.0;   // rotation angle in [0, pi)
  bool rotated = false;
};

struct TruncationReport {
  Eigen::Array2d window_half{0, 0};  // W = [-L1,L1] x [-L2,L2]
  Eigen::Array2d cap{0, 0};          // u-caps (unscaled); +inf when uncapped
  double discarded_mass = 0;         // bound on |E contribution| of boxes never sampled
  double eps_budget = 0;             // target the window/caps were solved for
  double expected_count = 0;
};

struct BoxField {
  std::vector<Box> boxes;
  TruncationReport trunc;
  std::uint64_t plan_token = 0;  // identity check between sampling and evaluation
};

struct FieldOptions {
  bool rotate = false;
  double eps_trunc = 1e-6;  // contribution-mass budget for the window bound
  std::optional<Eigen::Array2d> caps;  // optional u-caps (unscaled)
  double max_expected_boxes = 5e7;     // refusal threshold
};

std::uint64_t plan_token(const ScalingPlan& plan);

// Exact Poisson sample of every box intersecting the measure-adapted window.
// Box centres may fall outside the window (per-u extended strip); the law is
// the restriction of the full field to {boxes hitting W}, no grid bias.
BoxField sample_box_field(const ScalingPlan& plan, const MeasureDescriptor& mu,
                          RngStream& rng, const FieldOptions& options = {});

// (sum_j mu(B_j) - centring) / n_rho, with conditional-moment centring when caps are set.
double evaluate_centred(const BoxField& field, const MeasureDescriptor& mu,
                        const ScalingPlan& plan);

// N i.i.d. replicates; deterministic for fixed seed, independent of thread count
// (per-replicate counter streams, preassigned output slots).
std::vector<double> simulate_normalized(const ScalingPlan& plan, const MeasureDescriptor& mu,
                                        long long n_replicates, std::uint64_t seed,
                                        int threads = 1, const FieldOptions& options = {});

}  // namespace boxfield
