// boxfield: simulation and verification runs for heavy-tailed Poisson box
// fields.  Every invocation writes a manifest echoing the resolved
// configuration; re-running a manifest (--config manifest.json) reproduces
// the artifacts byte for byte.
//
// Exit codes: 0 success, 1 comparison verdict FAIL, 2 configuration error,
// 3 regime-hypothesis violation, 4 numerical failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "boxfield/limits.hpp"
#include "boxfield/manifest.hpp"
#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "boxfield/quadrature.hpp"
#include "boxfield/render.hpp"
#include "boxfield/rng.hpp"
#include "boxfield/stats.hpp"
#include "boxfield/tails.hpp"

namespace {

using namespace boxfield;
using nlohmann::json;

struct Args {
  std::string command;
  std::string regime;
  double gamma1 = 1.5, gamma2 = 3.5;
  double rho = 0.01;
  std::string measure = "laplace:C=1,c=1";
  long long replicates = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  // plan knobs
  double delta = 0.5, eta = 1.0, a_scale = 1.0;
  double lambda = 0.0;  // finite_variance override, 0 = unset
  // field options
  double eps_trunc = 1e-6;
  bool rotate = false;
  double umin1 = 0.0, umin2 = 0.0;  // 0 = keep the unit-tail law
  double cap1 = 0.0, cap2 = 0.0;    // 0 = uncapped
  double max_boxes = 5e7;
  // grids and tolerances
  std::string t_grid;
  double tol = 1e-6;
  double extra_tol = 0.0;
  double trunc_budget = 0.0;
  // compare
  std::string samples_path;
  std::string reference = "limit";
  std::string report;
  // render
  std::string pixels = "512x512";
  std::string viewport = "-1.5:-1.5:1.5:1.5";
  std::string fill = "binary";
  std::string format;  // empty = by file extension
  double alpha_opacity = 0.35;
  // lemma-check
  std::string rho_ladder = "1e-1,3e-2,1e-2,1e-3,1e-4";
  // suite
  std::string suite_name;
  // output
  std::string out;
  std::string manifest_path;
};

struct Outcome {
  int code = 0;
  json results;
  json truncation;
  std::string status = "success";
};

// ---------------------------------------------------------------------------
// small parsers

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + 1) {
    out.push_back(s.substr(start, pos - start));
  }
  out.push_back(s.substr(start));
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument(what + ": bad number '" + s + "'");
  }
}

std::vector<double> parse_t_grid(const std::string& s) {
  const auto f = split_on(s, ':');
  if (f.size() != 3) throw std::invalid_argument("t-grid: expected lo:hi:n, got '" + s + "'");
  const double lo = to_double(f[0], "t-grid lo");
  const double hi = to_double(f[1], "t-grid hi");
  const long long n = static_cast<long long>(to_double(f[2], "t-grid n"));
  if (n < 2 || hi <= lo) throw std::invalid_argument("t-grid: need hi > lo and n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

std::pair<int, int> parse_pixels(const std::string& s) {
  const auto f = split_on(s, 'x');
  if (f.size() != 2) throw std::invalid_argument("pixels: expected WxH, got '" + s + "'");
  const int w = static_cast<int>(to_double(f[0], "pixels width"));
  const int h = static_cast<int>(to_double(f[1], "pixels height"));
  if (w <= 0 || h <= 0) throw std::invalid_argument("pixels: dimensions must be positive");
  return {w, h};
}

std::array<double, 4> parse_viewport(const std::string& s) {
  const auto f = split_on(s, ':');
  if (f.size() != 4) {
    throw std::invalid_argument("viewport: expected x_lo:y_lo:x_hi:y_hi, got '" + s + "'");
  }
  return {to_double(f[0], "viewport"), to_double(f[1], "viewport"),
          to_double(f[2], "viewport"), to_double(f[3], "viewport")};
}

std::vector<double> parse_ladder(const std::string& s) {
  std::vector<double> out;
  for (const std::string& tok : split_on(s, ',')) {
    out.push_back(to_double(tok, "rho-ladder"));
    if (out.back() <= 0) throw std::invalid_argument("rho-ladder: entries must be positive");
  }
  if (out.empty()) throw std::invalid_argument("rho-ladder: empty");
  return out;
}

// ---------------------------------------------------------------------------
// shared construction

Regime parse_regime_or_throw(const std::string& name) {
  const auto r = parse_regime(name);
  if (!r) throw std::invalid_argument("regime: unknown '" + name + "'");
  return *r;
}

ScalingPlan make_plan(const Args& a) {
  PlanKnobs knobs;
  knobs.delta = a.delta;
  knobs.eta = a.eta;
  knobs.a_scale = a.a_scale;
  if (a.lambda > 0) knobs.lambda_override = a.lambda;
  ScalingPlan plan = plan_regime(parse_regime_or_throw(a.regime), a.gamma1, a.gamma2, a.rho, knobs);
  if (a.umin1 > 0) plan.law1 = make_pareto(plan.gamma1, a.umin1);
  if (a.umin2 > 0) plan.law2 = make_pareto(plan.gamma2, a.umin2);
  return plan;
}

FieldOptions make_field_options(const Args& a) {
  FieldOptions opt;
  opt.rotate = a.rotate;
  opt.eps_trunc = a.eps_trunc;
  opt.max_expected_boxes = a.max_boxes;
  if (a.cap1 > 0 || a.cap2 > 0) {
    const double inf = std::numeric_limits<double>::infinity();
    opt.caps = Eigen::Array2d{a.cap1 > 0 ? a.cap1 : inf, a.cap2 > 0 ? a.cap2 : inf};
  }
  return opt;
}

json plan_json(const ScalingPlan& p) {
  return {{"regime", regime_name(p.regime)},
          {"gamma1", p.gamma1},
          {"gamma2", p.gamma2},
          {"rho", p.rho},
          {"lambda_rho", p.lambda_rho},
          {"n_rho", p.n_rho},
          {"eta", p.eta},
          {"a_scale", p.a_scale},
          {"law1", {{"gamma", p.law1.gamma}, {"u_min", p.law1.u_min}}},
          {"law2", {{"gamma", p.law2.gamma}, {"u_min", p.law2.u_min}}}};
}

json config_echo(const Args& a) {
  json j;
  j["command"] = a.command;
  j["seed"] = a.seed;
  j["measure"] = a.measure;
  j["tol"] = a.tol;
  j["threads"] = a.threads;
  if (!a.regime.empty()) {
    j["regime"] = a.regime;
    j["gamma1"] = a.gamma1;
    j["gamma2"] = a.gamma2;
    j["rho"] = a.rho;
    j["delta"] = a.delta;
    j["eta"] = a.eta;
    j["a-scale"] = a.a_scale;
    if (a.lambda > 0) j["lambda"] = a.lambda;
  }
  if (a.command == "simulate" || a.command == "render" || a.command == "suite") {
    j["eps-trunc"] = a.eps_trunc;
    if (a.rotate) j["rotate"] = true;
    if (a.umin1 > 0) j["umin1"] = a.umin1;
    if (a.umin2 > 0) j["umin2"] = a.umin2;
    if (a.cap1 > 0) j["cap1"] = a.cap1;
    if (a.cap2 > 0) j["cap2"] = a.cap2;
    j["max-boxes"] = a.max_boxes;
  }
  if (a.command == "simulate") j["replicates"] = a.replicates;
  if (!a.t_grid.empty()) j["t-grid"] = a.t_grid;
  if (a.command == "compare") {
    j["samples"] = a.samples_path;
    j["reference"] = a.reference;
    j["report"] = a.report;
    j["extra-tol"] = a.extra_tol;
    j["trunc-budget"] = a.trunc_budget;
  }
  if (a.command == "render") {
    j["pixels"] = a.pixels;
    j["viewport"] = a.viewport;
    j["fill"] = a.fill;
    if (!a.format.empty()) j["format"] = a.format;
    j["alpha-opacity"] = a.alpha_opacity;
  }
  if (a.command == "lemma-check") j["rho-ladder"] = a.rho_ladder;
  if (a.command == "suite") j["name"] = a.suite_name;
  if (!a.out.empty()) j["out"] = a.out;
  return j;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// commands

Outcome run_simulate(const Args& a) {
  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  const FieldOptions opt = make_field_options(a);
  if (a.replicates <= 0) throw std::invalid_argument("replicates: must be positive");
  if (a.out.empty()) throw std::invalid_argument("out: required for simulate");

  const std::vector<double> samples =
      simulate_normalized(plan, mu, a.replicates, a.seed, a.threads, opt);
  write_value_csv(a.out, samples);

  RngStream probe(a.seed, 0);  // replicate 0's field, for the truncation echo
  const BoxField field = sample_box_field(plan, mu, probe, opt);

  Outcome o;
  o.truncation = truncation_json(field.trunc);
  o.results = {{"replicates", a.replicates},
               {"mean", mean_of(samples)},
               {"sd", sd_of(samples)},
               {"plan", plan_json(plan)},
               {"out", a.out}};
  return o;
}

Outcome run_prelimit_cf(const Args& a) {
  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  if (a.t_grid.empty()) throw std::invalid_argument("t-grid: required for prelimit-cf");
  if (a.out.empty()) throw std::invalid_argument("out: required for prelimit-cf");
  const std::vector<double> grid = parse_t_grid(a.t_grid);

  const auto values = prelimit_cf_grid(plan, mu, grid, a.tol);
  std::vector<CfRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows[i] = CfRow{grid[i], values[i].real(), values[i].imag()};
  }
  write_cf_csv(a.out, rows);

  Outcome o;
  o.results = {{"rows", grid.size()}, {"plan", plan_json(plan)}, {"out", a.out}};
  return o;
}

Outcome run_limit_cf(const Args& a) {
  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  if (a.t_grid.empty()) throw std::invalid_argument("t-grid: required for limit-cf");
  if (a.out.empty()) throw std::invalid_argument("out: required for limit-cf");
  const std::vector<double> grid = parse_t_grid(a.t_grid);
  const double t_max = std::max(std::abs(grid.front()), std::abs(grid.back()));

  const LimitLaw law = limit_law(plan, mu, t_max, a.tol);
  std::vector<CfRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto v = law.cf(grid[i]);
    rows[i] = CfRow{grid[i], v.real(), v.imag()};
  }
  write_cf_csv(a.out, rows);

  Outcome o;
  o.results = {{"rows", grid.size()},
               {"provenance", law.provenance()},
               {"spread_hint", law.spread_hint()},
               {"out", a.out}};
  return o;
}

Outcome run_limit_var(const Args& a) {
  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  const LimitLaw law = limit_law(plan, mu, 1.0, a.tol);
  if (law.kind() != LimitKind::gaussian) {
    throw HypothesisError("limit-var: the " + a.regime +
                          " limit is not gaussian; use limit-cf or stable-params");
  }
  Outcome o;
  o.results = {{"regime", a.regime},
               {"variance", law.variance()},
               {"sd", std::sqrt(law.variance())},
               {"provenance", law.provenance()}};
  return o;
}

Outcome run_stable_params(const Args& a) {
  const MeasureDescriptor mu = parse_measure(a.measure);
  if (!mu.admissible_points()) {
    throw HypothesisError(
        "stable-params: the point-regime law excludes boundary-supported kernels");
  }
  if (!(a.gamma1 > 1.0 && a.gamma1 < 2.0)) {
    throw HypothesisError("stable-params: requires gamma1 in (1,2)");
  }
  const auto sp = mu.stable_params(a.gamma1, std::min(a.tol, 1e-8));
  Outcome o;
  o.results = {{"alpha", a.gamma1},
               {"sigma", sp.sigma},
               {"beta", sp.beta},
               {"norm_plus", sp.norm_plus_g},
               {"norm_minus", sp.norm_minus_g}};
  return o;
}

Outcome run_compare(const Args& a) {
  if (a.samples_path.empty()) throw std::invalid_argument("samples: required for compare");
  if (a.report.empty()) throw std::invalid_argument("report: required for compare");
  std::vector<double> samples;
  try {
    samples = read_value_csv(a.samples_path);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());  // missing input file = config error
  }
  if (samples.empty()) throw std::invalid_argument("samples: file holds no values");

  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  const std::vector<double> grid =
      a.t_grid.empty() ? default_t_grid(samples) : parse_t_grid(a.t_grid);
  const double t_max =
      std::max(std::abs(*std::min_element(grid.begin(), grid.end())),
               std::abs(*std::max_element(grid.begin(), grid.end())));
  const double extra = a.extra_tol + a.tol + a.trunc_budget;

  CfComparison cmp;
  if (a.reference == "limit") {
    cmp = cf_distance(samples, limit_law(plan, mu, t_max, a.tol), grid, extra);
  } else if (a.reference == "prelimit") {
    const auto engine = std::make_shared<CfEngine>(CfEngine::prelimit(plan, mu, t_max, a.tol));
    cmp = cf_distance(
        samples, [engine](double t) { return engine->cf(t); }, grid, extra);
  } else {
    throw std::invalid_argument("reference: expected 'limit' or 'prelimit', got '" +
                                a.reference + "'");
  }

  json per_t = json::array();
  for (std::size_t i = 0; i < cmp.t_grid.size(); ++i) {
    per_t.push_back({{"t", cmp.t_grid[i]},
                     {"gap", std::abs(cmp.empirical[i] - cmp.reference[i])},
                     {"pass", static_cast<bool>(cmp.pass_at[i])}});
  }
  json report{{"verdict", cmp.pass ? "PASS" : "FAIL"},
              {"max_abs_gap", cmp.max_abs_gap},
              {"mc_band", cmp.mc_band},
              {"extra_tol", cmp.extra_tol},
              {"n_samples", samples.size()},
              {"seed", a.seed},
              {"regime", a.regime},
              {"reference", a.reference},
              {"per_t", per_t}};
  write_json_atomic(a.report, report);

  Outcome o;
  o.results = report;
  o.code = cmp.pass ? 0 : 1;
  return o;
}

Outcome run_render(const Args& a) {
  const ScalingPlan plan = make_plan(a);
  const MeasureDescriptor mu = parse_measure(a.measure);
  if (a.out.empty()) throw std::invalid_argument("out: required for render");
  const FieldOptions opt = make_field_options(a);

  RngStream rng(a.seed, 0);
  const BoxField field = sample_box_field(plan, mu, rng, opt);

  const auto [w, h] = parse_pixels(a.pixels);
  const auto vp = parse_viewport(a.viewport);
  RasterSpec spec;
  spec.x_lo = vp[0];
  spec.y_lo = vp[1];
  spec.x_hi = vp[2];
  spec.y_hi = vp[3];
  spec.width = w;
  spec.height = h;
  spec.alpha_opacity = a.alpha_opacity;
  if (a.fill == "binary") {
    spec.fill = FillMode::binary;
  } else if (a.fill == "alpha") {
    spec.fill = FillMode::alpha;
  } else {
    throw std::invalid_argument("fill: expected 'binary' or 'alpha', got '" + a.fill + "'");
  }
  std::string fmt = a.format;
  if (fmt.empty()) {
    fmt = a.out.size() >= 4 && a.out.substr(a.out.size() - 4) == ".svg" ? "svg" : "png";
  }
  if (fmt == "png") {
    spec.format = ImageFormat::png;
  } else if (fmt == "svg") {
    spec.format = ImageFormat::svg;
  } else {
    throw std::invalid_argument("format: expected 'png' or 'svg', got '" + fmt + "'");
  }

  const auto bytes = render_field(field, spec);
  write_file_atomic(a.out,
                    std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));

  // The coverage grid is the portable fingerprint (PNG bytes track zlib).
  const auto gray = rasterize(field, spec);
  Outcome o;
  o.truncation = truncation_json(field.trunc);
  o.results = {{"out", a.out},
               {"format", fmt},
               {"boxes", field.boxes.size()},
               {"raster_hash", hex64(image_hash(gray))},
               {"anisotropy", anisotropy_ratio(gray, w, h)},
               {"plan", plan_json(plan)}};
  return o;
}

Outcome run_lemma_check(const Args& a) {
  const std::vector<double> ladder = parse_ladder(a.rho_ladder);
  const auto g = [](double u1, double u2) {
    return std::min(u1, u1 * u1) * std::min(u2, u2 * u2);
  };
  const auto rows = lemma_ratio_check(g, a.gamma1, a.gamma2, ladder, a.tol);
  json jr = json::array();
  for (const LemmaRatio& r : rows) {
    jr.push_back({{"rho", r.rho},
                  {"lhs", r.lhs},
                  {"rhs", r.rhs},
                  {"ratio", r.ratio},
                  {"scaled_lhs", r.scaled_lhs},
                  {"zero_flag", r.zero_flag}});
  }
  Outcome o;
  o.results = {{"gamma1", a.gamma1}, {"gamma2", a.gamma2}, {"ratios", jr}};
  return o;
}

Outcome run_suite(const Args& a) {
  if (a.suite_name != "regimes-smoke") {
    throw std::invalid_argument("name: unknown suite '" + a.suite_name +
                                "' (available: regimes-smoke)");
  }
  struct Instance {
    Regime regime;
    double g1, g2;
    PlanKnobs knobs;
    const char* measure;
  };
  // Tiny but hypothesis-valid instances of all six regimes.  The heavy-lambda
  // regimes run against a compactly supported measure so the windows stay
  // small; the point regime needs a smooth density.
  const double rho = 0.05;
  const Instance instances[] = {
      {Regime::high, 1.05, 1.05, {.delta = 0.1}, "box:0,0,1,1"},
      {Regime::intermediate, 1.05, 1.05, {.a_scale = 1.0}, "box:0,0,1,1"},
      {Regime::gaussian_lines, 1.3, 3.0, {.eta = 0.2}, "box:0,0,1,1"},
      {Regime::poisson_lines, 1.5, 3.5, {}, "laplace:C=1,c=1"},
      {Regime::points, 1.3, 2.5, {.delta = 0.5}, "laplace:C=1,c=1"},
      {Regime::finite_variance, 2.5, 2.5, {.lambda_override = 100.0}, "box:0,0,1,1"},
  };
  const long long n = 300;
  json rows = json::array();
  int idx = 0;
  for (const Instance& inst : instances) {
    const ScalingPlan plan = plan_regime(inst.regime, inst.g1, inst.g2, rho, inst.knobs);
    const MeasureDescriptor mu = parse_measure(inst.measure);
    FieldOptions opt;
    opt.eps_trunc = 1e-4;
    const std::vector<double> samples =
        simulate_normalized(plan, mu, n, a.seed + static_cast<std::uint64_t>(idx), a.threads, opt);
    bool finite = true;
    for (double v : samples) finite = finite && std::isfinite(v);
    const auto cf1 = empirical_cf(samples, 0.5);
    if (!finite || std::abs(cf1) > 1.0 + 1e-12) {
      throw std::runtime_error(std::string("suite: degenerate samples for regime ") +
                               regime_name(inst.regime));
    }
    rows.push_back({{"regime", regime_name(inst.regime)},
                    {"n", n},
                    {"mean", mean_of(samples)},
                    {"sd", sd_of(samples)},
                    {"measure", inst.measure}});
    ++idx;
  }
  // End-to-end render touch: the line regime's picture at postcard size.
  {
    const ScalingPlan plan = plan_regime(Regime::poisson_lines, 1.5, 3.5, 0.005, {});
    const MeasureDescriptor mu = parse_measure("laplace:C=1,c=1");
    RngStream rng(a.seed, 0);
    FieldOptions opt;
    opt.eps_trunc = 0.05;
    const BoxField field = sample_box_field(plan, mu, rng, opt);
    RasterSpec spec;
    spec.x_lo = spec.y_lo = -1.5;
    spec.x_hi = spec.y_hi = 1.5;
    spec.width = spec.height = 128;
    const auto gray = rasterize(field, spec);
    rows.push_back({{"regime", "poisson-lines render"},
                    {"raster_hash", hex64(image_hash(gray))},
                    {"anisotropy", anisotropy_ratio(gray, 128, 128)}});
  }
  Outcome o;
  o.results = {{"name", a.suite_name}, {"rho", rho}, {"rows", rows}};
  return o;
}

// ---------------------------------------------------------------------------
// configuration plumbing

std::string resolve_manifest_path(const Args& a) {
  if (!a.manifest_path.empty()) return a.manifest_path;
  if (a.command == "compare" && !a.report.empty()) return a.report + ".manifest.json";
  if (!a.out.empty()) return a.out + ".manifest.json";
  return a.command + ".manifest.json";
}

// Tokens injected from --config run.json (or a manifest to replay).  Values
// must be scalars; keys must match the subcommand's long option names.
std::vector<std::string> config_tokens(const json& cfg, const CLI::App* sub,
                                       const std::string& path) {
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") continue;
    const std::string flag = "--" + key;
    if (!const_cast<CLI::App*>(sub)->get_option_no_throw(flag)) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + path);
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_string()) {
      tokens.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag + "=" + value.dump());
    } else {
      throw std::invalid_argument("config: key '" + key + "' must be a scalar in " + path);
    }
  }
  return tokens;
}

}  // namespace

int main(int argc, char** argv) {
  Args a;

  if (const char* env = std::getenv("BOXFIELD_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      std::fprintf(stderr, "BOXFIELD_SEED must be an unsigned integer, got '%s'\n", env);
      return 2;
    }
    a.seed = v;
  }

  CLI::App app{"heavy-tailed Poisson box fields: simulation and verification"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config or manifest to replay");

  const auto add_plan_options = [&](CLI::App* cmd) {
    cmd->add_option("--regime", a.regime,
                    "high | intermediate | gaussian-lines | poisson-lines | points | "
                    "finite-variance");
    cmd->add_option("--gamma1", a.gamma1, "tail index of the length law, in (1,2)");
    cmd->add_option("--gamma2", a.gamma2, "tail index of the width law");
    cmd->add_option("--rho", a.rho, "shrink factor");
    cmd->add_option("--delta", a.delta, "exponent offset (high / points)");
    cmd->add_option("--eta", a.eta, "gaussian-lines speed, in (0, gamma2)");
    cmd->add_option("--a-scale", a.a_scale, "general-a factor");
    cmd->add_option("--lambda", a.lambda, "finite-variance intensity override");
    cmd->add_option("--measure", a.measure, "measure spec, e.g. laplace:C=1,c=1");
    cmd->add_option("--umin1", a.umin1, "override the length law's lower endpoint");
    cmd->add_option("--umin2", a.umin2, "override the width law's lower endpoint");
  };
  const auto add_field_options = [&](CLI::App* cmd) {
    cmd->add_option("--eps-trunc", a.eps_trunc, "discarded-contribution budget");
    cmd->add_flag("--rotate", a.rotate, "rotate boxes uniformly");
    cmd->add_option("--cap1", a.cap1, "length cap (conditional centring)");
    cmd->add_option("--cap2", a.cap2, "width cap");
    cmd->add_option("--max-boxes", a.max_boxes, "refuse runs above this expected count");
  };
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", a.seed, "RNG seed (default: BOXFIELD_SEED or 0)");
    cmd->add_option("--threads", a.threads, "worker threads; results independent of k");
    cmd->add_option("--tol", a.tol, "quadrature tolerance");
    cmd->add_option("--manifest", a.manifest_path, "manifest path (default: <out>.manifest.json)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "sample normalized functionals to CSV");
  add_plan_options(simulate);
  add_field_options(simulate);
  add_common(simulate);
  simulate->add_option("--replicates", a.replicates, "number of i.i.d. draws");
  simulate->add_option("--out", a.out, "samples CSV path")->required();

  CLI::App* prelimit = app.add_subcommand("prelimit-cf", "exact prelimit CF on a t-grid");
  add_plan_options(prelimit);
  add_common(prelimit);
  prelimit->add_option("--t-grid", a.t_grid, "lo:hi:n")->required();
  prelimit->add_option("--out", a.out, "CF CSV path (t,re,im)")->required();

  CLI::App* limitcf = app.add_subcommand("limit-cf", "limit-law CF on a t-grid");
  add_plan_options(limitcf);
  add_common(limitcf);
  limitcf->add_option("--t-grid", a.t_grid, "lo:hi:n")->required();
  limitcf->add_option("--out", a.out, "CF CSV path (t,re,im)")->required();

  CLI::App* limitvar = app.add_subcommand("limit-var", "limit variance (gaussian regimes)");
  add_plan_options(limitvar);
  add_common(limitvar);
  limitvar->add_option("--out", a.out, "optional JSON path");

  CLI::App* stparams = app.add_subcommand("stable-params", "point-regime stable parameters");
  stparams->add_option("--gamma1", a.gamma1, "stability index, in (1,2)");
  stparams->add_option("--measure", a.measure, "measure spec");
  add_common(stparams);
  stparams->add_option("--out", a.out, "optional JSON path");

  CLI::App* compare = app.add_subcommand("compare", "empirical CF vs limit or prelimit");
  add_plan_options(compare);
  add_common(compare);
  compare->add_option("--samples", a.samples_path, "samples CSV")->required();
  compare->add_option("--reference", a.reference, "limit | prelimit");
  compare->add_option("--t-grid", a.t_grid, "lo:hi:n (default: data-driven)");
  compare->add_option("--extra-tol", a.extra_tol, "extra allowance on the band");
  compare->add_option("--trunc-budget", a.trunc_budget, "truncation allowance on the band");
  compare->add_option("--report", a.report, "report JSON path")->required();

  CLI::App* render = app.add_subcommand("render", "draw one sampled field to PNG or SVG");
  add_plan_options(render);
  add_field_options(render);
  add_common(render);
  render->get_option("--eps-trunc")->default_val(0.02);  // sub-pixel boxes are invisible
  a.eps_trunc = 0.02;
  render->add_option("--pixels", a.pixels, "WxH");
  render->add_option("--viewport", a.viewport, "x_lo:y_lo:x_hi:y_hi in model coordinates");
  render->add_option("--fill", a.fill, "binary | alpha");
  render->add_option("--format", a.format, "png | svg (default: by extension)");
  render->add_option("--alpha-opacity", a.alpha_opacity, "per-box coverage in alpha mode");
  render->add_option("--out", a.out, "image path")->required();

  CLI::App* lemma = app.add_subcommand("lemma-check", "small-scale asymptotic ratios");
  lemma->add_option("--gamma1", a.gamma1, "first tail index");
  lemma->add_option("--gamma2", a.gamma2, "second tail index");
  lemma->add_option("--rho-ladder", a.rho_ladder, "comma-separated rho values");
  add_common(lemma);
  lemma->add_option("--out", a.out, "optional JSON path");

  CLI::App* suite = app.add_subcommand("suite", "orchestrated end-to-end runs");
  suite->add_option("--name", a.suite_name, "suite name (regimes-smoke)")->required();
  add_common(suite);
  suite->add_option("--out", a.out, "optional JSON path");

  // Merge --config tokens (file first, command line after: flags override).
  std::vector<std::string> raw(argv + 1, argv + argc);
  std::vector<std::string> merged;
  try {
    std::string cfg_path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == "--config" && i + 1 < raw.size()) {
        cfg_path = raw[++i];
      } else if (raw[i].rfind("--config=", 0) == 0) {
        cfg_path = raw[i].substr(9);
      } else {
        rest.push_back(raw[i]);
      }
    }
    if (!cfg_path.empty()) {
      std::ifstream in(cfg_path);
      if (!in) throw std::invalid_argument("config: cannot open '" + cfg_path + "'");
      json j;
      try {
        in >> j;
      } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
      }
      json cfg = j;
      if (j.contains("config") && j.contains("command")) {  // manifest replay
        cfg = j["config"];
        if (!cfg.contains("command")) cfg["command"] = j["command"];
        if (j.contains("seed") && !cfg.contains("seed")) cfg["seed"] = j["seed"];
      }
      std::string cmd_name = cfg.value("command", "");
      if (!rest.empty() && !rest[0].empty() && rest[0][0] != '-') cmd_name = rest[0];
      if (cmd_name.empty()) {
        throw std::invalid_argument("config: no command given (file or argv)");
      }
      CLI::App* sub = app.get_subcommand_no_throw(cmd_name);
      if (!sub) throw std::invalid_argument("config: unknown command '" + cmd_name + "'");
      merged.push_back(cmd_name);
      for (std::string& tok : config_tokens(cfg, sub, cfg_path)) merged.push_back(std::move(tok));
      for (std::size_t i = (!rest.empty() && rest[0] == cmd_name) ? 1 : 0; i < rest.size(); ++i) {
        merged.push_back(rest[i]);
      }
    } else {
      merged = rest;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  try {
    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const std::string& s : merged) cargv.push_back(s.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  a.command = app.get_subcommands().front()->get_name();

  const auto t0 = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    if (a.command == "simulate") {
      outcome = run_simulate(a);
    } else if (a.command == "prelimit-cf") {
      outcome = run_prelimit_cf(a);
    } else if (a.command == "limit-cf") {
      outcome = run_limit_cf(a);
    } else if (a.command == "limit-var") {
      outcome = run_limit_var(a);
    } else if (a.command == "stable-params") {
      outcome = run_stable_params(a);
    } else if (a.command == "compare") {
      outcome = run_compare(a);
    } else if (a.command == "render") {
      outcome = run_render(a);
    } else if (a.command == "lemma-check") {
      outcome = run_lemma_check(a);
    } else {
      outcome = run_suite(a);
    }
  } catch (const HypothesisError& e) {
    outcome.code = 3;
    outcome.status = "hypothesis-violation";
    outcome.results = {{"error", e.what()}};
    std::fprintf(stderr, "%s\n", e.what());
  } catch (const std::invalid_argument& e) {
    outcome.code = 2;
    outcome.status = "config-error";
    outcome.results = {{"error", e.what()}};
    std::fprintf(stderr, "%s\n", e.what());
  } catch (const std::exception& e) {
    outcome.code = 4;
    outcome.status = "numerical-failure";
    outcome.results = {{"error", e.what()}};
    std::fprintf(stderr, "%s\n", e.what());
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  RunManifest m;
  m.command = a.command;
  m.status = outcome.status;
  m.seed = a.seed;
  m.wall_ms = wall_ms;
  m.config = config_echo(a);
  m.truncation = outcome.truncation;
  m.results = outcome.results;
  try {
    write_manifest(resolve_manifest_path(a), m);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "manifest: %s\n", e.what());
    if (outcome.code == 0) outcome.code = 4;
  }

  // JSON-emitting commands report to stdout; optional --out persists it.
  if (outcome.code == 0 || outcome.code == 1) {
    const bool json_cmd = a.command == "limit-var" || a.command == "stable-params" ||
                          a.command == "lemma-check" || a.command == "suite";
    if (json_cmd) {
      std::printf("%s\n", outcome.results.dump(2).c_str());
      if (!a.out.empty()) write_json_atomic(a.out, outcome.results);
    }
  }
  return outcome.code;
}
