#include "boxfield/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "boxfield/integrate1d.hpp"

namespace boxfield {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernel1D

double Kernel1D::density(double y) const {
  switch (kind) {
    case Kind::exp_decay:
      return amp * std::exp(-par * std::abs(y - shift));
    case Kind::gaussian: {
      double z = (y - shift) / par;
      return amp * std::exp(-0.5 * z * z);
    }
    case Kind::interval:
      return (y >= lo && y <= hi) ? amp : 0.0;
  }
  return 0.0;
}

double Kernel1D::segment_mass(double a, double b) const {
  if (b <= a) return 0.0;
  switch (kind) {
    case Kind::exp_decay: {
      // antiderivative of exp(-par |t|) through 0: sign(t)(1 - exp(-par|t|))/par
      auto G = [this](double t) { return sgn(t) * (1.0 - std::exp(-par * std::abs(t))) / par; };
      return amp * (G(b - shift) - G(a - shift));
    }
    case Kind::gaussian: {
      const double inv = 1.0 / (par * 1.4142135623730951);
      return amp * par * std::sqrt(kPi / 2.0) *
             (std::erf((b - shift) * inv) - std::erf((a - shift) * inv));
    }
    case Kind::interval:
      return amp * std::max(0.0, std::min(b, hi) - std::max(a, lo));
  }
  return 0.0;
}

double Kernel1D::mass() const {
  switch (kind) {
    case Kind::exp_decay:
      return 2.0 * amp / par;
    case Kind::gaussian:
      return amp * par * std::sqrt(2.0 * kPi);
    case Kind::interval:
      return amp * (hi - lo);
  }
  return 0.0;
}

double Kernel1D::sup_density() const { return amp; }

double Kernel1D::lp_gamma(double g) const {
  switch (kind) {
    case Kind::exp_decay:
      return std::pow(amp, g) * 2.0 / (par * g);
    case Kind::gaussian:
      return std::pow(amp, g) * par * std::sqrt(2.0 * kPi / g);
    case Kind::interval:
      return std::pow(amp, g) * (hi - lo);
  }
  return 0.0;
}

double Kernel1D::centre() const {
  return kind == Kind::interval ? 0.5 * (lo + hi) : shift;
}

double Kernel1D::half_extent(double tail_eps) const {
  double eps = std::clamp(tail_eps, 1e-300, 0.5);
  switch (kind) {
    case Kind::exp_decay:
      return -std::log(eps) / par;
    case Kind::gaussian:
      // erfc(z) <= exp(-z^2) for z >= 0, so this radius over-covers.
      return par * std::sqrt(-2.0 * std::log(eps));
    case Kind::interval:
      return 0.5 * (hi - lo);
  }
  return 0.0;
}

Kernel1D Kernel1D::dilated(double a) const {
  // kernel transform matching f_a(x) = a^{-2} f(x/a): per axis (1/a) k(y/a)
  Kernel1D k = *this;
  k.amp = amp / a;
  switch (kind) {
    case Kind::exp_decay:
      k.par = par / a;
      k.shift = shift * a;
      break;
    case Kind::gaussian:
      k.par = par * a;
      k.shift = shift * a;
      break;
    case Kind::interval:
      k.lo = lo * a;
      k.hi = hi * a;
      break;
  }
  return k;
}

Kernel1D Kernel1D::translated(double s) const {
  Kernel1D k = *this;
  if (kind == Kind::interval) {
    k.lo = lo + s;
    k.hi = hi + s;
  } else {
    k.shift = shift + s;
  }
  return k;
}

// ---------------------------------------------------------------------------
// factories

MeasureDescriptor MeasureDescriptor::laplace_product(double C, double c, const Point2& t) {
  if (!(c > 0.0) || C == 0.0) throw std::invalid_argument("laplace_product: need C != 0, c > 0");
  MeasureDescriptor m;
  m.family_ = Family::laplace_product;
  ProductTerm term;
  term.weight = sgn(C);
  term.k1 = Kernel1D{Kernel1D::Kind::exp_decay, std::abs(C), c, t.x(), 0.0, 0.0};
  term.k2 = Kernel1D{Kernel1D::Kind::exp_decay, 1.0, c, t.y(), 0.0, 0.0};
  m.terms_.push_back(term);
  m.refresh_envelope();
  return m;
}

MeasureDescriptor MeasureDescriptor::gaussian_product(double C, double s, const Point2& t) {
  if (!(s > 0.0) || C == 0.0) throw std::invalid_argument("gaussian_product: need C != 0, s > 0");
  MeasureDescriptor m;
  m.family_ = Family::gaussian_product;
  ProductTerm term;
  term.weight = sgn(C);
  term.k1 = Kernel1D{Kernel1D::Kind::gaussian, std::abs(C), s, t.x(), 0.0, 0.0};
  term.k2 = Kernel1D{Kernel1D::Kind::gaussian, 1.0, s, t.y(), 0.0, 0.0};
  m.terms_.push_back(term);
  m.refresh_envelope();
  return m;
}

MeasureDescriptor MeasureDescriptor::box_indicator(double x_lo, double y_lo, double x_hi,
                                                   double y_hi, double amp) {
  if (!(x_hi > x_lo) || !(y_hi > y_lo) || amp == 0.0)
    throw std::invalid_argument("box_indicator: need x_lo < x_hi, y_lo < y_hi, amp != 0");
  MeasureDescriptor m;
  m.family_ = Family::box_indicator;
  ProductTerm term;
  term.weight = sgn(amp);
  term.k1 = Kernel1D{Kernel1D::Kind::interval, std::abs(amp), 0.0, 0.0, x_lo, x_hi};
  term.k2 = Kernel1D{Kernel1D::Kind::interval, 1.0, 0.0, 0.0, y_lo, y_hi};
  m.terms_.push_back(term);
  m.refresh_envelope();
  return m;
}

MeasureDescriptor MeasureDescriptor::linear_combination(
    const std::vector<std::pair<double, MeasureDescriptor>>& parts) {
  if (parts.empty()) throw std::invalid_argument("linear_combination: empty part list");
  MeasureDescriptor m;
  m.family_ = Family::linear_combination;
  for (const auto& [w, part] : parts) {
    if (w == 0.0) continue;
    for (ProductTerm term : part.terms_) {
      term.weight *= w;
      m.terms_.push_back(term);
    }
  }
  if (m.terms_.empty()) throw std::invalid_argument("linear_combination: all weights zero");
  m.refresh_envelope();
  return m;
}

void MeasureDescriptor::refresh_envelope() {
  phi_const_ = -1.0;
  double c_env = std::numeric_limits<double>::infinity();
  for (const auto& term : terms_) {
    for (const Kernel1D* k : {&term.k1, &term.k2}) {
      if (k->kind == Kernel1D::Kind::exp_decay) c_env = std::min(c_env, k->par);
      if (k->kind == Kernel1D::Kind::gaussian) c_env = std::min(c_env, 1.0 / (k->par * k->par));
    }
  }
  if (!std::isfinite(c_env)) c_env = 1.0;  // indicator-only: any rate works
  double C_env = 0.0;
  for (const auto& term : terms_) {
    double f = std::abs(term.weight);
    for (const Kernel1D* k : {&term.k1, &term.k2}) {
      switch (k->kind) {
        case Kernel1D::Kind::exp_decay:
          f *= k->amp * std::exp(k->par * std::abs(k->shift));
          break;
        case Kernel1D::Kind::gaussian:
          // exp(-z^2/2) <= exp(1/(2s^2)) exp(-|y-t|/s^2), then shift out t
          f *= k->amp * std::exp((1.0 + 2.0 * std::abs(k->shift)) / (2.0 * k->par * k->par));
          break;
        case Kernel1D::Kind::interval:
          f *= k->amp * std::exp(c_env * std::max(std::abs(k->lo), std::abs(k->hi)));
          break;
      }
    }
    C_env += f;
  }
  env_ = DecayEnvelope{C_env, c_env};
}

// ---------------------------------------------------------------------------
// pointwise / closed-form queries

bool MeasureDescriptor::admissible_points() const {
  for (const auto& term : terms_)
    if (term.k1.kind == Kernel1D::Kind::interval || term.k2.kind == Kernel1D::Kind::interval)
      return false;
  return true;
}

double MeasureDescriptor::density(const Point2& x) const {
  double s = 0.0;
  for (const auto& term : terms_)
    s += term.weight * term.k1.density(x.x()) * term.k2.density(x.y());
  return s;
}

double MeasureDescriptor::box_mass(const Point2& x, const Edge2& u) const {
  double s = 0.0;
  for (const auto& term : terms_)
    s += term.weight * term.k1.box_segment(x.x(), u[0]) * term.k2.box_segment(x.y(), u[1]);
  return s;
}

double MeasureDescriptor::line_mass(const Point2& x, double u1) const {
  double s = 0.0;
  for (const auto& term : terms_)
    s += term.weight * term.k1.box_segment(x.x(), u1) * term.k2.density(x.y());
  return s;
}

double MeasureDescriptor::total_mass() const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.weight * term.k1.mass() * term.k2.mass();
  return s;
}

double MeasureDescriptor::tv_upper_bound() const {
  double s = 0.0;
  for (const auto& term : terms_) s += std::abs(term.weight) * term.k1.mass() * term.k2.mass();
  return s;
}

double MeasureDescriptor::total_variation(double tol) const {
  bool all_pos = true, all_neg = true;
  for (const auto& term : terms_) {
    if (term.weight > 0.0) all_neg = false;
    if (term.weight < 0.0) all_pos = false;
  }
  if (all_pos || all_neg || terms_.size() == 1) return tv_upper_bound();
  double lo1, hi1, lo2, hi2;
  axis_extent(0, 1e-13, &lo1, &hi1);
  axis_extent(1, 1e-13, &lo2, &hi2);
  auto outer = [&](double x1) {
    auto inner = [&](double x2) { return std::abs(density(Point2(x1, x2))); };
    return integrate_1d(inner, lo2, hi2, 0.25 * tol / (hi1 - lo1));
  };
  return integrate_1d(outer, lo1, hi1, 0.5 * tol);
}

MeasureDescriptor MeasureDescriptor::dilate(double a) const {
  if (!(a > 0.0)) throw std::invalid_argument("dilate: need a > 0");
  MeasureDescriptor m = *this;
  for (auto& term : m.terms_) {
    term.k1 = term.k1.dilated(a);
    term.k2 = term.k2.dilated(a);
  }
  m.refresh_envelope();
  return m;
}

MeasureDescriptor MeasureDescriptor::translate(const Point2& s) const {
  MeasureDescriptor m = *this;
  for (auto& term : m.terms_) {
    term.k1 = term.k1.translated(s.x());
    term.k2 = term.k2.translated(s.y());
  }
  m.refresh_envelope();
  return m;
}

MeasureDescriptor MeasureDescriptor::scale(double k) const {
  if (k == 0.0) throw std::invalid_argument("scale: need k != 0");
  MeasureDescriptor m = *this;
  for (auto& term : m.terms_) term.weight *= k;
  m.refresh_envelope();
  return m;
}

double MeasureDescriptor::abs_local_average(const Point2& x, const Edge2& u) const {
  double s = 0.0;
  for (const auto& term : terms_)
    s += std::abs(term.weight) * term.k1.box_segment(x.x(), u[0]) *
         term.k2.box_segment(x.y(), u[1]);
  return s / (u[0] * u[1]);
}

double MeasureDescriptor::maximal_function_bound(const Point2& x) const {
  double b = env_.C;
  for (int i = 0; i < 2; ++i) {
    double a = std::abs(x[i]);
    if (a > 0.0) b *= std::min(1.0, 2.0 / (env_.c * a));
  }
  return b;
}

// ---------------------------------------------------------------------------
// overlap functionals

double MeasureDescriptor::axis_overlap(int axis, int j, int k, double w) const {
  const Kernel1D& A = axis == 0 ? terms_[static_cast<std::size_t>(j)].k1
                                : terms_[static_cast<std::size_t>(j)].k2;
  const Kernel1D& B = axis == 0 ? terms_[static_cast<std::size_t>(k)].k1
                                : terms_[static_cast<std::size_t>(k)].k2;
  double rA = A.half_extent(1e-14), rB = B.half_extent(1e-14);
  double lo = std::min(A.centre() - rA, B.centre() - rB) - 0.5 * w;
  double hi = std::max(A.centre() + rA, B.centre() + rB) + 0.5 * w;
  double upper = A.mass() * w * std::min(B.mass(), B.sup_density() * w);
  auto f = [&](double x) { return A.box_segment(x, w) * B.box_segment(x, w); };
  return integrate_1d(f, lo, hi, 1e-11 * upper + 1e-16);
}

double MeasureDescriptor::phi(const Edge2& u) const {
  const int n = static_cast<int>(terms_.size());
  double s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      double ov = axis_overlap(0, j, k, u[0]) * axis_overlap(1, j, k, u[1]);
      double wjk = terms_[static_cast<std::size_t>(j)].weight *
                   terms_[static_cast<std::size_t>(k)].weight;
      s += (j == k ? 1.0 : 2.0) * wjk * ov;
    }
  return s;
}

double MeasureDescriptor::phi_constant() const {
  if (phi_const_ > 0.0) return phi_const_;
  // phi scales like u^2 near 0 and like u at infinity on each axis, so the
  // ratio against min(u,u^2)min(u,u^2) flattens at both ends of a log grid.
  const int n = 25;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double u1 = std::pow(10.0, -3.0 + 6.0 * i / (n - 1.0));
    for (int j = 0; j < n; ++j) {
      double u2 = std::pow(10.0, -3.0 + 6.0 * j / (n - 1.0));
      double denom = std::min(u1, u1 * u1) * std::min(u2, u2 * u2);
      worst = std::max(worst, phi(Edge2{u1, u2}) / denom);
    }
  }
  phi_const_ = worst * 1.05;
  return phi_const_;
}

void MeasureDescriptor::axis_extent(int axis, double tail_eps, double* lo, double* hi) const {
  double l = std::numeric_limits<double>::infinity(), h = -l;
  for (const auto& term : terms_) {
    const Kernel1D& k = axis == 0 ? term.k1 : term.k2;
    double c = k.centre(), r = k.half_extent(tail_eps);
    l = std::min(l, c - r);
    h = std::max(h, c + r);
  }
  *lo = l;
  *hi = h;
}

// ---------------------------------------------------------------------------
// stable-regime parameters

MeasureDescriptor::StableParams MeasureDescriptor::stable_params(double gamma1,
                                                                 double tol) const {
  if (!(gamma1 > 0.0)) throw std::invalid_argument("stable_params: need gamma1 > 0");
  StableParams p;
  if (terms_.size() == 1) {
    const auto& t = terms_.front();
    double ng = std::pow(std::abs(t.weight), gamma1) * t.k1.lp_gamma(gamma1) *
                t.k2.lp_gamma(gamma1);
    (t.weight >= 0.0 ? p.norm_plus_g : p.norm_minus_g) = ng;
  } else {
    double lo1, hi1, lo2, hi2;
    axis_extent(0, 1e-13, &lo1, &hi1);
    axis_extent(1, 1e-13, &lo2, &hi2);
    double sup = 0.0;
    for (const auto& term : terms_)
      sup += std::abs(term.weight) * term.k1.sup_density() * term.k2.sup_density();
    double scale = gamma1 >= 1.0
                       ? std::pow(sup, gamma1 - 1.0) * tv_upper_bound()
                       : std::pow(sup, gamma1) * (hi1 - lo1) * (hi2 - lo2);
    for (int side = 0; side < 2; ++side) {
      auto outer = [&](double x1) {
        auto inner = [&](double x2) {
          double f = density(Point2(x1, x2));
          double v = side == 0 ? std::max(f, 0.0) : std::max(-f, 0.0);
          return std::pow(v, gamma1);
        };
        return integrate_1d(inner, lo2, hi2, 0.25 * tol * scale / (hi1 - lo1));
      };
      double val = integrate_1d(outer, lo1, hi1, 0.5 * tol * scale);
      (side == 0 ? p.norm_plus_g : p.norm_minus_g) = val;
    }
  }
  double total = p.norm_plus_g + p.norm_minus_g;
  p.sigma = std::pow(total, 1.0 / gamma1);
  p.beta = total > 0.0 ? (p.norm_plus_g - p.norm_minus_g) / total : 0.0;
  return p;
}

// ---------------------------------------------------------------------------
// rotated boxes

namespace {

// Sutherland-Hodgman clip of a convex polygon against one half-plane
// a*px + b*py <= d.
void clip_half_plane(std::vector<Point2>& poly, double a, double b, double d) {
  std::vector<Point2> out;
  out.reserve(poly.size() + 2);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    double fp = a * p.x() + b * p.y() - d;
    double fq = a * q.x() + b * q.y() - d;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
      double s = fp / (fp - fq);
      out.push_back(p + s * (q - p));
    }
  }
  poly = std::move(out);
}

double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

}  // namespace

double MeasureDescriptor::box_mass_rotated(const Point2& x, const Edge2& u, double theta) const {
  double st = std::sin(theta), ct = std::cos(theta);
  if (std::abs(st) < 1e-15 && ct > 0.0) return box_mass(x, u);
  double total = 0.0;
  for (const auto& term : terms_) {
    if (term.k1.kind == Kernel1D::Kind::interval && term.k2.kind == Kernel1D::Kind::interval) {
      std::vector<Point2> poly;
      for (auto [s1, s2] : {std::pair{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}) {
        double zx = s1 * u[0], zy = s2 * u[1];
        poly.emplace_back(x.x() + ct * zx - st * zy, x.y() + st * zx + ct * zy);
      }
      clip_half_plane(poly, 1.0, 0.0, term.k1.hi);
      clip_half_plane(poly, -1.0, 0.0, -term.k1.lo);
      clip_half_plane(poly, 0.0, 1.0, term.k2.hi);
      clip_half_plane(poly, 0.0, -1.0, -term.k2.lo);
      if (poly.size() >= 3)
        total += term.weight * term.k1.amp * term.k2.amp * polygon_area(poly);
    } else {
      // integrate the term density over the box in its own (rotated) frame
      double scale = std::abs(term.weight) * term.k1.mass() * term.k2.mass();
      double tol_outer = 1e-9 * scale + 1e-16;
      auto outer = [&](double z1) {
        auto inner = [&](double z2) {
          double px = x.x() + ct * z1 - st * z2;
          double py = x.y() + st * z1 + ct * z2;
          return term.k1.density(px) * term.k2.density(py);
        };
        return integrate_1d(inner, -0.5 * u[1], 0.5 * u[1], 0.25 * tol_outer / u[0]);
      };
      total += term.weight * integrate_1d(outer, -0.5 * u[0], 0.5 * u[0], tol_outer);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// text round-trip

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_num(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("measure spec: bad number '" + s + "' in " + what);
  }
}

std::string term_spec(const ProductTerm& t) {
  double C = t.k1.amp * t.k2.amp;
  switch (t.k1.kind) {
    case Kernel1D::Kind::exp_decay:
      return "laplace:C=" + fmt_double(C) + ",c=" + fmt_double(t.k1.par) +
             ",tx=" + fmt_double(t.k1.shift) + ",ty=" + fmt_double(t.k2.shift);
    case Kernel1D::Kind::gaussian:
      return "gauss:C=" + fmt_double(C) + ",s=" + fmt_double(t.k1.par) +
             ",tx=" + fmt_double(t.k1.shift) + ",ty=" + fmt_double(t.k2.shift);
    case Kernel1D::Kind::interval:
      return "box:" + fmt_double(t.k1.lo) + "," + fmt_double(t.k2.lo) + "," +
             fmt_double(t.k1.hi) + "," + fmt_double(t.k2.hi) + ",amp=" + fmt_double(C);
  }
  return "";
}

}  // namespace

std::string MeasureDescriptor::format() const {
  if (terms_.size() == 1 && std::abs(terms_.front().weight) == 1.0) {
    ProductTerm t = terms_.front();
    t.k1.amp *= terms_.front().weight;  // fold sign back into C/amp
    return term_spec(t);
  }
  std::string out = "combo:";
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i) out += ";";
    out += fmt_double(terms_[i].weight) + "*" + term_spec(terms_[i]);
  }
  return out;
}

MeasureDescriptor parse_measure(const std::string& text) {
  std::string s = trim(text);
  std::size_t colon = s.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("measure spec: missing ':' in '" + s + "'");
  std::string head = trim(s.substr(0, colon));
  std::string rest = trim(s.substr(colon + 1));

  if (head == "combo") {
    std::vector<std::pair<double, MeasureDescriptor>> parts;
    for (const std::string& raw : split(rest, ';')) {
      std::string part = trim(raw);
      if (part.empty()) continue;
      std::size_t star = part.find('*');
      if (star == std::string::npos)
        throw std::invalid_argument("measure spec: combo part needs 'weight*spec': " + part);
      double w = parse_num(trim(part.substr(0, star)), "combo weight");
      parts.emplace_back(w, parse_measure(part.substr(star + 1)));
    }
    return MeasureDescriptor::linear_combination(parts);
  }

  if (head == "box") {
    std::vector<std::string> fields = split(rest, ',');
    if (fields.size() < 4 || fields.size() > 5)
      throw std::invalid_argument("measure spec: box needs xlo,ylo,xhi,yhi[,amp=..]");
    double xlo = parse_num(trim(fields[0]), "box");
    double ylo = parse_num(trim(fields[1]), "box");
    double xhi = parse_num(trim(fields[2]), "box");
    double yhi = parse_num(trim(fields[3]), "box");
    double amp = 1.0;
    if (fields.size() == 5) {
      std::string f = trim(fields[4]);
      if (f.rfind("amp=", 0) == 0) f = f.substr(4);
      amp = parse_num(trim(f), "box amp");
    }
    return MeasureDescriptor::box_indicator(xlo, ylo, xhi, yhi, amp);
  }

  if (head == "laplace" || head == "gauss") {
    double C = 1.0, width = 1.0, tx = 0.0, ty = 0.0;
    if (!rest.empty())
      for (const std::string& raw : split(rest, ',')) {
        std::string kv = trim(raw);
        if (kv.empty()) continue;
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("measure spec: expected key=value, got '" + kv + "'");
        std::string key = trim(kv.substr(0, eq));
        double v = parse_num(trim(kv.substr(eq + 1)), head);
        if (key == "C")
          C = v;
        else if (key == "tx")
          tx = v;
        else if (key == "ty")
          ty = v;
        else if (key == "c" && head == "laplace")
          width = v;
        else if (key == "s" && head == "gauss")
          width = v;
        else
          throw std::invalid_argument("measure spec: unknown key '" + key + "' for " + head);
      }
    return head == "laplace"
               ? MeasureDescriptor::laplace_product(C, width, Point2(tx, ty))
               : MeasureDescriptor::gaussian_product(C, width, Point2(tx, ty));
  }

  throw std::invalid_argument("measure spec: unknown family '" + head + "'");
}

}  // namespace boxfield
