// Regime planning, exact Poisson sampling of the boxes that meet a
// measure-adapted window, and centred evaluation of the normalized functional.
//
// The sampler never discretizes space.  Axis-aligned boxes hitting the window
// W form a Poisson process whose per-axis intensity factor is (2L + rho u)
// f(u) du, so a size-biased two-component mixture per axis reproduces the
// restricted law exactly.  Rotated boxes hit W precisely when the centre lies
// in the zonogon W (+) B(theta), whose area is first-order in each edge; the
// bounding-box relaxation would have infinite intensity for gamma < 2, so the
// sampler draws theta from its exact size-biased marginal and the centre
// uniformly in the zonogon.  Truncation (window, optional caps) is the only
// approximation and carries a closed-form contribution bound in the report.

#include "boxfield/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <thread>

namespace boxfield {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::high: return "high";
    case Regime::intermediate: return "intermediate";
    case Regime::gaussian_lines: return "gaussian-lines";
    case Regime::poisson_lines: return "poisson-lines";
    case Regime::points: return "points";
    case Regime::finite_variance: return "finite-variance";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(std::string_view name) {
  std::string s(name);
  for (char& ch : s)
    if (ch == '_') ch = '-';
  for (Regime r : {Regime::high, Regime::intermediate, Regime::gaussian_lines,
                   Regime::poisson_lines, Regime::points, Regime::finite_variance})
    if (s == regime_name(r)) return r;
  return std::nullopt;
}

namespace {

void require(bool ok, Regime r, const char* inequality) {
  if (!ok)
    throw HypothesisError(std::string(regime_name(r)) + ": requires " + inequality);
}

}  // namespace

double ScalingPlan::centring(const MeasureDescriptor& mu) const {
  return lambda_rho * rho * rho * mu.total_mass() * law1.mean() * law2.mean();
}

ScalingPlan plan_regime(Regime regime, double gamma1, double gamma2, double rho,
                        const PlanKnobs& knobs) {
  require(rho > 0.0, regime, "rho > 0");
  require(knobs.a_scale > 0.0, regime, "a_scale > 0");

  ScalingPlan plan;
  plan.regime = regime;
  plan.gamma1 = gamma1;
  plan.gamma2 = gamma2;
  plan.rho = rho;
  plan.a_scale = knobs.a_scale;

  const double a = knobs.a_scale, delta = knobs.delta;
  switch (regime) {
    case Regime::high:
      require(gamma1 > 1.0 && gamma1 < 2.0, regime, "gamma1 in (1, 2)");
      require(gamma2 > 1.0 && gamma2 < 2.0, regime, "gamma2 in (1, 2)");
      require(delta > 0.0, regime, "delta > 0");
      plan.lambda_rho = std::pow(rho, -(gamma1 + gamma2) - delta);
      plan.n_rho = std::sqrt(plan.lambda_rho * std::pow(rho, gamma1 + gamma2));
      break;
    case Regime::intermediate:
      require(gamma1 > 1.0 && gamma1 < 2.0, regime, "gamma1 in (1, 2)");
      require(gamma2 > 1.0 && gamma2 < 2.0, regime, "gamma2 in (1, 2)");
      plan.lambda_rho =
          std::pow(a, 2.0 - gamma1 - gamma2) * std::pow(rho, -(gamma1 + gamma2));
      plan.n_rho = 1.0;
      break;
    case Regime::gaussian_lines:
      require(gamma1 > 1.0 && gamma1 < 2.0, regime, "gamma1 in (1, 2)");
      require(gamma2 > 2.0, regime, "gamma2 > 2");
      require(knobs.eta > 0.0 && knobs.eta < gamma2, regime, "eta in (0, gamma2)");
      plan.eta = knobs.eta;
      plan.lambda_rho = a * a * std::pow(rho, -(gamma1 + knobs.eta));
      plan.n_rho = std::pow(rho, 1.0 - 0.5 * knobs.eta);
      break;
    case Regime::poisson_lines:
      require(gamma1 > 1.0 && gamma1 < 2.0, regime, "gamma1 in (1, 2)");
      require(gamma2 > gamma1, regime, "gamma2 > gamma1");
      plan.lambda_rho = std::pow(a, 2.0 - gamma1) * std::pow(rho, -gamma1);
      plan.n_rho = a * rho;
      break;
    case Regime::points: {
      require(gamma1 > 1.0 && gamma1 < 2.0, regime, "gamma1 in (1, 2)");
      require(gamma2 > gamma1, regime, "gamma2 > gamma1");
      require(delta > 0.0 && delta < gamma1, regime, "delta in (0, gamma1)");
      plan.lambda_rho = std::pow(rho, -gamma1 + delta);
      const LimitConstants lc = limit_constants(gamma1, gamma2);
      plan.n_rho = lc.c_gamma12 * std::pow(plan.lambda_rho, 1.0 / gamma1) * rho * rho;
      break;
    }
    case Regime::finite_variance: {
      require(gamma1 > 2.0, regime, "gamma1 > 2");
      require(gamma2 > 2.0, regime, "gamma2 > 2");
      require(knobs.lambda_override.has_value() && *knobs.lambda_override > 0.0, regime,
              "lambda_override > 0");
      plan.lambda_rho = *knobs.lambda_override;
      const double v1 = make_pareto_unit_tail(gamma1).second_moment();
      const double v2 = make_pareto_unit_tail(gamma2).second_moment();
      plan.n_rho = rho * rho * std::sqrt(plan.lambda_rho * v1 * v2);
      break;
    }
  }
  plan.law1 = make_pareto_unit_tail(gamma1);
  plan.law2 = make_pareto_unit_tail(gamma2);
  return plan;
}

std::uint64_t plan_token(const ScalingPlan& plan) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t bits) {
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(plan.regime));
  for (double v : {plan.gamma1, plan.gamma2, plan.rho, plan.lambda_rho, plan.n_rho,
                   plan.eta, plan.a_scale, plan.law1.gamma, plan.law1.u_min,
                   plan.law2.gamma, plan.law2.u_min}) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  }
  return h;
}

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

// Everything the sampler needs that is deterministic in (plan, mu, options).
struct SamplerGeometry {
  Eigen::Array2d half{0, 0};  // window [-L1,L1] x [-L2,L2]
  Eigen::Array2d cap{0, 0};
  bool rotate = false;
  double keep1 = 1, keep2 = 1;    // P(u_i <= cap_i)
  double cmean1 = 0, cmean2 = 0;  // E[u_i | u_i <= cap_i]
  // rotated zonogon-area pieces, E over u: wq + |sin| ws + |cos| wc
  double wq = 0, ws = 0, wc = 0;
  double mean_count = 0;
  double discarded = 0;
};

SamplerGeometry solve_geometry(const ScalingPlan& plan, const MeasureDescriptor& mu,
                               const FieldOptions& options) {
  const double eps = options.eps_trunc;
  const DecayEnvelope env = mu.envelope();
  const double m1 = plan.law1.mean(), m2 = plan.law2.mean();
  const double rho2mm = plan.rho * plan.rho * m1 * m2;

  SamplerGeometry g;
  g.rotate = options.rotate;
  // Boxes that miss W contribute at most
  //   4 lambda C rho^2 m1 m2 (exp(-c L1) + exp(-c L2)) / c^2
  // in expected absolute mass (valid for every orientation, since a missing
  // box lies entirely outside W); solve each axis for an eps/4 share.
  const double arg = 16.0 * plan.lambda_rho * env.C * rho2mm / (env.c * env.c * eps);
  const double L = std::max(0.0, std::log(std::max(arg, 1.0)) / env.c);
  g.half = Eigen::Array2d{L, L};
  const double inf = std::numeric_limits<double>::infinity();
  g.cap = options.caps ? *options.caps : Eigen::Array2d{inf, inf};

  g.keep1 = 1.0 - plan.law1.tail_mass(g.cap[0]);
  g.keep2 = 1.0 - plan.law2.tail_mass(g.cap[1]);
  if (!(g.keep1 > 0.0) || !(g.keep2 > 0.0))
    throw std::invalid_argument("sample_box_field: caps leave no admissible edges");
  g.cmean1 = plan.law1.partial_moment(1.0, g.cap[0]) / g.keep1;
  g.cmean2 = plan.law2.partial_moment(1.0, g.cap[1]) / g.keep2;

  const double L1 = g.half[0], L2 = g.half[1], rho = plan.rho;
  if (g.rotate) {
    // E_u area(W (+) B(theta)) split by theta dependence
    g.wq = 4.0 * L1 * L2 + rho * rho * g.cmean1 * g.cmean2;
    g.ws = 2.0 * rho * (L1 * g.cmean1 + L2 * g.cmean2);
    g.wc = 2.0 * rho * (L2 * g.cmean1 + L1 * g.cmean2);
    g.mean_count = plan.lambda_rho * g.keep1 * g.keep2 *
                   (g.wq + kTwoOverPi * (g.ws + g.wc));
  } else {
    g.mean_count = plan.lambda_rho * g.keep1 * (2.0 * L1 + rho * g.cmean1) * g.keep2 *
                   (2.0 * L2 + rho * g.cmean2);
  }

  const double window_bound = 4.0 * plan.lambda_rho * env.C * rho2mm / (env.c * env.c) *
                              (std::exp(-env.c * L1) + std::exp(-env.c * L2));
  const double cap_bound =
      plan.lambda_rho * plan.rho * plan.rho * mu.tv_upper_bound() *
      (plan.law1.mean_above(g.cap[0]) * m2 + m1 * plan.law2.mean_above(g.cap[1]));
  g.discarded = window_bound + cap_bound;
  return g;
}

TruncationReport make_report(const SamplerGeometry& g, const FieldOptions& options) {
  TruncationReport rep;
  rep.window_half = g.half;
  rep.cap = g.cap;
  rep.discarded_mass = g.discarded;
  rep.eps_budget = options.eps_trunc;
  rep.expected_count = g.mean_count;
  return rep;
}

// theta with density proportional to 1, |sin|, |cos| on [0, pi)
double draw_theta(RngStream& rng, double w_const, double w_sin, double w_cos) {
  const double total = w_const + kTwoOverPi * (w_sin + w_cos);
  double pick = rng.uniform01() * total;
  if (pick < w_const) return std::numbers::pi * (pick / w_const);
  pick -= w_const;
  const double v = rng.uniform01();
  if (pick < kTwoOverPi * w_sin) return std::acos(1.0 - 2.0 * v);
  return v < 0.5 ? std::asin(2.0 * v) : std::numbers::pi - std::asin(2.0 * (1.0 - v));
}

// uniform point in the zonogon spanned by the four centred generators
Eigen::Vector2d draw_in_zonogon(RngStream& rng, std::array<Eigen::Vector2d, 4> gen) {
  for (auto& v : gen)  // orient into the upper half-plane, then sort by angle
    if (v.y() < 0.0 || (v.y() == 0.0 && v.x() < 0.0)) v = -v;
  std::sort(gen.begin(), gen.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x());
  });
  std::array<Eigen::Vector2d, 8> vert;
  vert[0] = -0.5 * (gen[0] + gen[1] + gen[2] + gen[3]);
  for (int i = 0; i < 4; ++i) vert[i + 1] = vert[i] + gen[i];
  for (int i = 5; i < 8; ++i) vert[i] = -vert[i - 4];
  // fan triangulation from vert[0]; convexity makes every triangle positive
  double areas[6], total = 0.0;
  for (int k = 0; k < 6; ++k) {
    const Eigen::Vector2d a = vert[k + 1] - vert[0], b = vert[k + 2] - vert[0];
    areas[k] = 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
    total += areas[k];
  }
  double pick = rng.uniform01() * total;
  int k = 0;
  while (k < 5 && pick >= areas[k]) pick -= areas[k], ++k;
  double s = rng.uniform01(), t = rng.uniform01();
  if (s + t > 1.0) s = 1.0 - s, t = 1.0 - t;
  return vert[0] + s * (vert[k + 1] - vert[0]) + t * (vert[k + 2] - vert[0]);
}

Box draw_box(const ScalingPlan& plan, const SamplerGeometry& g, RngStream& rng) {
  Box b;
  const double rho = plan.rho, L1 = g.half[0], L2 = g.half[1];
  if (!g.rotate) {
    for (int axis = 0; axis < 2; ++axis) {
      const EdgeLawDescriptor& law = axis == 0 ? plan.law1 : plan.law2;
      const double L = g.half[axis], cap = g.cap[axis];
      const double cmean = axis == 0 ? g.cmean1 : g.cmean2;
      // joint density on (x, u) proportional to 1{|x| <= L + rho u / 2} f(u):
      // u-marginal ~ (2L + rho u) f(u), then x uniform over the stretched strip
      const double p_biased = rho * cmean / (2.0 * L + rho * cmean);
      const double u = rng.uniform01() < p_biased ? law.sample_size_biased(rng, cap)
                                                  : law.sample_below(rng, cap);
      const double w = rho * u;
      b.edge[axis] = w;
      b.centre[axis] = rng.uniform(-L - 0.5 * w, L + 0.5 * w);
    }
    return b;
  }

  // rotated: theta from its exact area-biased marginal, ...
  const double theta = draw_theta(rng, g.wq, g.ws, g.wc);
  const double si = std::abs(std::sin(theta)), co = std::abs(std::cos(theta));
  // ... then the edge pair from the four zonogon-area components, ...
  const double comp_plain = 4.0 * L1 * L2;
  const double comp_u1 = 2.0 * rho * g.cmean1 * (L1 * si + L2 * co);
  const double comp_u2 = 2.0 * rho * g.cmean2 * (L1 * co + L2 * si);
  const double comp_u12 = rho * rho * g.cmean1 * g.cmean2;
  // segments laid out as plain | u1 | u1u2 | u2, so two interval tests suffice
  const double pick = rng.uniform01() * (comp_plain + comp_u1 + comp_u12 + comp_u2);
  const bool bias1 = pick >= comp_plain && pick < comp_plain + comp_u1 + comp_u12;
  const bool bias2 = pick >= comp_plain + comp_u1;
  const double u1 = bias1 ? plan.law1.sample_size_biased(rng, g.cap[0])
                          : plan.law1.sample_below(rng, g.cap[0]);
  const double u2 = bias2 ? plan.law2.sample_size_biased(rng, g.cap[1])
                          : plan.law2.sample_below(rng, g.cap[1]);
  const double w1 = rho * u1, w2 = rho * u2;
  // ... and the centre uniformly over {x : B(x, w, theta) meets W}.
  const Eigen::Vector2d r{std::cos(theta), std::sin(theta)};
  const Eigen::Vector2d rp{-r.y(), r.x()};
  b.centre = draw_in_zonogon(
      rng, {Eigen::Vector2d{2.0 * L1, 0.0}, Eigen::Vector2d{0.0, 2.0 * L2}, w1 * r, w2 * rp});
  b.edge = Eigen::Array2d{w1, w2};
  b.theta = theta;
  b.rotated = true;
  return b;
}

void check_budget(const SamplerGeometry& g, const FieldOptions& options) {
  if (g.mean_count > options.max_expected_boxes) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "sample_box_field: expected box count %.3g exceeds "
                  "max_expected_boxes=%.3g; raise the budget or reduce lambda/window",
                  g.mean_count, options.max_expected_boxes);
    throw std::runtime_error(msg);
  }
}

double box_contribution(const MeasureDescriptor& mu, const Box& b) {
  return b.rotated ? mu.box_mass_rotated(b.centre, b.edge, b.theta)
                   : mu.box_mass(b.centre, b.edge);
}

double capped_centring(const ScalingPlan& plan, const MeasureDescriptor& mu,
                       const Eigen::Array2d& cap) {
  // E[u ; u <= cap] per axis: compensation matches the capped field exactly
  const double e1 = plan.law1.partial_moment(1.0, cap[0]);
  const double e2 = plan.law2.partial_moment(1.0, cap[1]);
  return plan.lambda_rho * plan.rho * plan.rho * mu.total_mass() * e1 * e2;
}

}  // namespace

BoxField sample_box_field(const ScalingPlan& plan, const MeasureDescriptor& mu,
                          RngStream& rng, const FieldOptions& options) {
  const SamplerGeometry g = solve_geometry(plan, mu, options);
  check_budget(g, options);

  BoxField field;
  field.trunc = make_report(g, options);
  field.plan_token = plan_token(plan);
  const long long count = rng.poisson(g.mean_count);
  field.boxes.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) field.boxes.push_back(draw_box(plan, g, rng));
  return field;
}

double evaluate_centred(const BoxField& field, const MeasureDescriptor& mu,
                        const ScalingPlan& plan) {
  if (field.plan_token != plan_token(plan))
    throw std::invalid_argument(
        "evaluate_centred: field was sampled under a different plan (token mismatch)");
  double sum = 0.0;
  for (const Box& b : field.boxes) sum += box_contribution(mu, b);
  return (sum - capped_centring(plan, mu, field.trunc.cap)) / plan.n_rho;
}

std::vector<double> simulate_normalized(const ScalingPlan& plan, const MeasureDescriptor& mu,
                                        long long n_replicates, std::uint64_t seed,
                                        int threads, const FieldOptions& options) {
  if (n_replicates < 1)
    throw std::invalid_argument("simulate_normalized: need n_replicates >= 1");
  // shared geometry: the budget refusal fires before any replicate runs
  const SamplerGeometry g = solve_geometry(plan, mu, options);
  check_budget(g, options);
  const double centring = capped_centring(plan, mu, g.cap);

  std::vector<double> out(static_cast<std::size_t>(n_replicates));
  const int workers =
      static_cast<int>(std::min<long long>(std::clamp(threads, 1, 256), n_replicates));
  // replicate r always consumes stream (seed, r); slot assignment is static, so
  // the output is identical for every worker count.  The per-box arithmetic
  // matches evaluate_centred term for term.
  auto run = [&](int first) {
    for (long long r = first; r < n_replicates; r += workers) {
      RngStream rng(seed, static_cast<std::uint64_t>(r));
      const long long count = rng.poisson(g.mean_count);
      double sum = 0.0;
      for (long long i = 0; i < count; ++i) sum += box_contribution(mu, draw_box(plan, g, rng));
      out[static_cast<std::size_t>(r)] = (sum - centring) / plan.n_rho;
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace boxfield
