#include "boxfield/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "boxfield/integrate1d.hpp"

namespace boxfield {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTailEps = 1e-12;  // per-axis value floor relative to full kernel mass
constexpr double kLnRange = 40.0;   // histogram dynamic range in ln|value|
constexpr double kGrade = 0.08;     // target phase increment per bin
constexpr double kSmearMax = 0.5;   // in-bin phase spread beyond which a bin is dephased

// ---------------------------------------------------------------------------
// Power-weighted maps.
// ---------------------------------------------------------------------------

// Sum of adaptive segments marching away from `start` until a segment is
// negligible. Integrands here decay monotonically in the far tails.
template <typename F>
double expanding_sum(F&& f, double start, double seg_len, int dir, double eps, int max_seg) {
  double total = 0.0;
  for (int k = 0; k < max_seg; ++k) {
    double a = start + dir * seg_len * k;
    double b = start + dir * seg_len * (k + 1);
    if (a > b) std::swap(a, b);
    double seg = integrate_1d(f, a, b, eps * 0.25);
    total += seg;
    if (std::abs(seg) < eps) break;
  }
  return total;
}

double law_expectation_1d(const std::function<double(double)>& h, const EdgeLawDescriptor& law,
                          double tol) {
  const double c = law.gamma * std::pow(law.u_min, law.gamma);
  auto f = [&](double y) { return h(std::exp(y)) * c * std::exp(-law.gamma * y); };
  return expanding_sum(f, std::log(law.u_min), 20.0, +1, tol * 0.3, 20);
}

}  // namespace

double power_weighted_integral(const std::function<double(double)>& F, double gamma,
                               double tol) {
  auto f = [&](double s) { return F(std::exp(s)) * std::exp(-gamma * s); };
  return expanding_sum(f, 0.0, 25.0, +1, tol * 0.3, 16) +
         expanding_sum(f, 0.0, 25.0, -1, tol * 0.3, 16);
}

double product_power_weighted(const std::function<double(double, double)>& g, double g1,
                              double g2, double tol) {
  auto inner = [&](double u1) {
    return power_weighted_integral([&](double u2) { return g(u1, u2); }, g2, tol * 0.03);
  };
  return power_weighted_integral(inner, g1, tol * 0.3);
}

double scaled_law_expectation(const std::function<double(double, double)>& g,
                              const EdgeLawDescriptor& law1, const EdgeLawDescriptor& law2,
                              double rho, double tol) {
  auto inner = [&](double u1) {
    return law_expectation_1d([&](double u2) { return g(rho * u1, rho * u2); }, law2,
                              tol * 0.03);
  };
  return law_expectation_1d(inner, law1, tol * 0.3);
}

// ---------------------------------------------------------------------------
// Kernel cross-correlations.
// ---------------------------------------------------------------------------

double kernel_correlation(const Kernel1D& a, const Kernel1D& b, double d) {
  if (a.kind == Kernel1D::Kind::interval && b.kind == Kernel1D::Kind::interval) {
    double lo = std::max(a.lo, b.lo - d);
    double hi = std::min(a.hi, b.hi - d);
    return hi > lo ? a.amp * b.amp * (hi - lo) : 0.0;
  }
  const double ea = a.half_extent(1e-16), eb = b.half_extent(1e-16);
  const double lo = std::max(a.centre() - ea, b.centre() - d - eb);
  const double hi = std::min(a.centre() + ea, b.centre() - d + eb);
  if (hi <= lo) return 0.0;
  auto f = [&](double t) { return a.density(t) * b.density(t + d); };
  return integrate_1d(f, lo, hi, 1e-13 * a.amp * b.amp * (hi - lo) + 1e-320);
}

double correlation_abs_moment(const Kernel1D& a, const Kernel1D& b, double p, double tol) {
  if (!(p > -1.0 && p <= 0.0))
    throw QuadratureError("correlation_abs_moment: p outside (-1, 0]", 0.0,
                          std::numeric_limits<double>::infinity());
  const double ea = a.half_extent(1e-16), eb = b.half_extent(1e-16);
  const double off = b.centre() - a.centre();  // G(d) support: off +- (ea + eb)
  const double q = p + 1.0;
  double total = 0.0;
  for (int sgn : {+1, -1}) {
    const double D = sgn > 0 ? off + (ea + eb) : -(off - (ea + eb));
    if (D <= 0) continue;
    if (p == 0.0) {
      total += integrate_1d([&](double d) { return kernel_correlation(a, b, sgn * d); }, 0.0,
                            D, tol * 0.25);
    } else {
      // z = d^{1+p} flattens the |d|^p factor exactly
      auto f = [&](double z) { return kernel_correlation(a, b, sgn * std::pow(z, 1.0 / q)); };
      total += integrate_1d(f, 0.0, std::pow(D, q), tol * 0.25 * q) / q;
    }
  }
  return total;
}

double axis_variance_integral(const Kernel1D& a, const Kernel1D& b, double gamma,
                              double tol) {
  if (!(gamma > 1.0 && gamma < 2.0))
    throw QuadratureError("axis_variance_integral: gamma outside (1,2)", 0.0,
                          std::numeric_limits<double>::infinity());
  const double c = gamma * (gamma - 1.0);
  return correlation_abs_moment(a, b, 1.0 - gamma, tol * c) / c;
}

// ---------------------------------------------------------------------------
// Oscillatory reference: integral_0^inf Psi(u) u^{-gamma-1} du, gamma in (1,2).
// ---------------------------------------------------------------------------

std::complex<double> psi_power_integral(double gamma, double tol, double* err_out) {
  if (!(gamma > 1.0 && gamma < 2.0))
    throw QuadratureError("psi_power_integral: gamma outside (1,2)", 0.0,
                          std::numeric_limits<double>::infinity());
  const double g = gamma;
  // Analytic head from the alternating series of Psi.
  const double eps = 3e-4;
  std::complex<double> head(
      -std::pow(eps, 2.0 - g) / (2.0 * (2.0 - g)) + std::pow(eps, 4.0 - g) / (24.0 * (4.0 - g)),
      -std::pow(eps, 3.0 - g) / (6.0 * (3.0 - g)) +
          std::pow(eps, 5.0 - g) / (120.0 * (5.0 - g)));
  const double head_rem = std::pow(eps, 6.0 - g) / (720.0 * (6.0 - g));

  auto f = [&](double u) { return psi(u) * std::pow(u, -g - 1.0); };
  const std::complex<double> mid = integrate_1d(f, eps, 20.0, tol * 0.3);

  // Oscillatory part on [20, U] with pi-length panels; -1-iu part closed form.
  double U = std::pow(2.0 / (0.2 * tol), 1.0 / (g + 1.0));
  const long long K = std::max<long long>(8, (long long)std::ceil((U - 20.0) / kPi));
  U = 20.0 + (double)K * kPi;
  std::complex<double> osc{};
  auto fo = [&](double u) {
    return std::complex<double>(std::cos(u), std::sin(u)) * std::pow(u, -g - 1.0);
  };
  for (long long k = 0; k < K; ++k) {
    const double a = 20.0 + (double)k * kPi, b = a + kPi;
    osc += integrate_1d(fo, a, b, 1e300, nullptr, 1);  // single Kronrod application
  }
  auto lin_tail = [&](double x) {  // integral_x^inf (-1 - iu) u^{-g-1} du
    return std::complex<double>(-std::pow(x, -g) / g, -std::pow(x, 1.0 - g) / (g - 1.0));
  };
  const std::complex<double> tail_osc_bound = 2.0 * std::pow(U, -g - 1.0);
  if (err_out) *err_out = head_rem + tol * 0.5 + std::abs(tail_osc_bound) + 1e-14 * (double)K;
  return head + mid + osc + lin_tail(20.0);
}

// ---------------------------------------------------------------------------
// Phase-graded moment-matched value histogram.
// ---------------------------------------------------------------------------

namespace {

struct HistBin {
  double m = 0, mv = 0, mvv = 0;
};

class GradedHist {
 public:
  GradedHist() = default;

  // phase_grade: expected |phase| per unit value at the largest CF argument;
  // bin widths shrink where phase_grade * v is large.
  GradedHist(double vmax, double phase_grade, double dmin, double dmax) {
    vmax = std::max(vmax, 1e-300);
    ln_hi_ = std::log(vmax) + 1e-9;
    ln_lo_ = ln_hi_ - kLnRange;
    std::vector<double> desc{ln_hi_};
    double L = ln_hi_;
    while (L > ln_lo_) {
      double step = dmax;
      if (phase_grade > 0) step = std::clamp(kGrade / (phase_grade * std::exp(L)), dmin, dmax);
      L -= step;
      desc.push_back(L);
    }
    edges_.assign(desc.rbegin(), desc.rend());
    nb_ = (int)edges_.size() - 1;
    bins_[0].assign(nb_, HistBin{});
    bins_[1].assign(nb_, HistBin{});
    inv_step_ = 2.0 / dmin;
    const int ncell = (int)std::ceil((ln_hi_ - ln_lo_) * inv_step_) + 2;
    lookup_.resize(ncell);
    int b = 0;
    for (int c = 0; c < ncell; ++c) {
      const double l = ln_lo_ + c / inv_step_;
      while (b + 1 < nb_ && edges_[b + 1] <= l) ++b;
      lookup_[c] = b;
    }
  }

  bool empty() const { return nb_ == 0; }

  void add(double v, double m) {
    if (m <= 0 || v == 0) return;
    add_cell_ln(std::log(std::abs(v)), v, m, m * v * v);
  }

  // Insert a cell with known mean value v (signed) and mass*E[v^2] moment.
  void add_cell_ln(double ln_abs_v, double v, double m, double mvv) {
    HistBin& b = bins_[v < 0 ? 1 : 0][bin_of(ln_abs_v)];
    b.m += m;
    b.mv += m * v;
    b.mvv += mvv;
  }

  struct Eval {
    std::complex<double> val{};
    double err = 0;
  };

  // Sum of m * E[Psi(s v)] over bins: second-order moment matching with a
  // dephased fallback (E e^{isv} dropped) when the in-bin phase spread is wide.
  Eval eval(double s) const {
    Eval out;
    if (s == 0 || nb_ == 0) return out;
    for (int w = 0; w < 2; ++w) {
      for (const HistBin& b : bins_[w]) {
        if (b.m <= 0) continue;
        const double vb = b.mv / b.m;
        const double var = std::max(0.0, b.mvv / b.m - vb * vb);
        const double sb = s * vb;
        const double smear = std::abs(s) * std::sqrt(var);
        if (smear <= kSmearMax) {
          const std::complex<double> e(std::cos(sb), std::sin(sb));
          out.val += b.m * (psi(sb) - 0.5 * s * s * var * e);
          out.err += b.m * smear * smear * smear * (1.0 / 3.0);
        } else {
          out.val += std::complex<double>(-b.m, -s * b.mv);
          out.err += b.m;
        }
      }
    }
    return out;
  }

  struct Compact {
    std::vector<double> m, v, evv, lnav;
    std::size_t size() const { return m.size(); }
  };

  Compact compact() const {
    Compact c;
    for (int w = 0; w < 2; ++w) {
      for (const HistBin& b : bins_[w]) {
        if (b.m <= 0) continue;
        const double vb = b.mv / b.m;
        if (vb == 0) continue;
        c.m.push_back(b.m);
        c.v.push_back(vb);
        c.evv.push_back(b.mvv / b.m);
        c.lnav.push_back(std::log(std::abs(vb)));
      }
    }
    return c;
  }

  double total_mass() const {
    double s = 0;
    for (int w = 0; w < 2; ++w)
      for (const HistBin& b : bins_[w]) s += b.m;
    return s;
  }
  double abs_first_moment() const {
    double s = 0;
    for (int w = 0; w < 2; ++w)
      for (const HistBin& b : bins_[w]) s += std::abs(b.mv);
    return s;
  }
  double second_moment() const {
    double s = 0;
    for (int w = 0; w < 2; ++w)
      for (const HistBin& b : bins_[w]) s += b.mvv;
    return s;
  }
  // Sum of m |v|^q over bins (used in truncation bounds).
  double abs_power_moment(double q) const {
    double s = 0;
    for (int w = 0; w < 2; ++w)
      for (const HistBin& b : bins_[w])
        if (b.m > 0 && b.mv != 0) s += b.m * std::pow(std::abs(b.mv / b.m), q);
    return s;
  }

 private:
  int bin_of(double lnv) const {
    if (lnv >= ln_hi_) return nb_ - 1;
    if (lnv <= ln_lo_) return 0;
    int b = lookup_[(std::size_t)((lnv - ln_lo_) * inv_step_)];
    while (b + 1 < nb_ && edges_[b + 1] <= lnv) ++b;
    return b;
  }

  double ln_lo_ = 0, ln_hi_ = 0, inv_step_ = 1;
  int nb_ = 0;
  std::vector<double> edges_;
  std::vector<int> lookup_;
  std::vector<HistBin> bins_[2];
};

void pair_product(const GradedHist::Compact& A, const GradedHist::Compact& B, double W,
                  GradedHist& dest) {
  if (W == 0) return;
  const double lnW = std::log(std::abs(W)), W2 = W * W;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double ma = A.m[i], va = A.v[i], ea = A.evv[i], la = A.lnav[i];
    for (std::size_t k = 0; k < B.size(); ++k) {
      dest.add_cell_ln(la + B.lnav[k] + lnW, W * va * B.v[k], ma * B.m[k],
                       ma * B.m[k] * W2 * ea * B.evv[k]);
    }
  }
}

// ---------------------------------------------------------------------------
// Quadrature atoms for one axis.
// ---------------------------------------------------------------------------

struct Budget {
  double wpanel;  // panel length in ln w
  int wgl;        // GL nodes per w panel
  int xgl;        // GL nodes per x panel
  int levels;     // geometric refinement levels at window edges
  double dmin, dmax;  // histogram bin-width clamps
};

Budget pick_budget(double tol, int n_terms) {
  Budget b = n_terms > 1 ? Budget{0.5, 4, 4, 3, 1.6e-3, 0.02}
                         : Budget{0.3, 6, 6, 4, 8e-4, 0.015};
  if (tol < 3e-6) {
    b.wpanel *= 0.55;
    b.wgl += 2;
    b.xgl += 2;
    b.levels += 1;
    b.dmin *= 0.5;
    b.dmax *= 0.5;
  }
  return b;
}

struct AxisAtoms {
  int T = 0;
  std::vector<double> mass;  // n
  std::vector<double> val;   // n*T, atom-major
  std::vector<double> vmax, first, second;  // per-term stats over the atom set
  // Dropped-x strips beyond the panel span: neg_abs bounds the strip integral
  // of the value (with the w-weight folded in for window atoms), neg_sup bounds
  // the value anywhere in the strip. Any power p in [1,2] of the strip is then
  // bounded by neg_sup^{p-1} * neg_abs.
  std::vector<double> neg_abs, neg_sup;
  std::size_t size() const { return mass.size(); }
};

std::vector<double> sorted_unique(std::vector<double> v, double sep) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > sep) out.push_back(x);
  return out;
}

template <typename Emit>
void gl_on(double a, double b, int n, Emit&& emit) {
  if (!(b > a)) return;
  const auto& gl = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (const auto& [x, w] : gl) emit(mid + half * x, half * w);
}

// Window-mass atoms for (x, w) under dx w^{-gamma-1} dw, w >= wlo.
// The w-tail beyond saturation is emitted exactly: there the transition
// profiles at the two window edges no longer depend on w.
AxisAtoms build_s_axis(const std::vector<Kernel1D>& ks, double gamma, double wlo,
                       const Budget& bud) {
  const int T = (int)ks.size();
  AxisAtoms out;
  out.T = T;
  out.vmax.assign(T, 0.0);
  out.first.assign(T, 0.0);
  out.second.assign(T, 0.0);
  out.neg_abs.assign(T, 0.0);
  out.neg_sup.assign(T, 0.0);

  std::vector<double> mbar(T), cen(T), ext(T), lo_inf(T);
  std::vector<std::vector<double>> feats(T);
  double Xh = 0;
  for (int j = 0; j < T; ++j) {
    mbar[j] = ks[j].mass();
    cen[j] = ks[j].centre();
    ext[j] = ks[j].half_extent(kTailEps);
    lo_inf[j] = cen[j] - ks[j].half_extent(1e-18) - 1.0;
    Xh = std::max(Xh, std::abs(cen[j]) + ext[j]);
    feats[j].push_back(cen[j]);
    double step = ext[j];
    for (int k = 0; k <= bud.levels; ++k, step *= 0.5) {
      feats[j].push_back(cen[j] - step);
      feats[j].push_back(cen[j] + step);
    }
  }
  if (Xh <= 0) return out;
  const double Wsat = std::max(2.5 * Xh, wlo);

  std::vector<double> vals(T);
  auto emit = [&](double m) {
    if (m <= 0) return;
    bool any = false;
    for (int j = 0; j < T; ++j) any = any || vals[j] != 0;
    if (!any) return;
    out.mass.push_back(m);
    for (int j = 0; j < T; ++j) {
      out.val.push_back(vals[j]);
      out.vmax[j] = std::max(out.vmax[j], vals[j]);
      out.first[j] += m * vals[j];
      out.second[j] += m * vals[j] * vals[j];
    }
  };
  auto cdf = [&](int j, double x) { return ks[j].segment_mass(lo_inf[j], x); };

  // Saturated tail, w >= Wsat.
  const double wme = std::pow(Wsat, -gamma) / gamma;
  const double wmb = std::pow(Wsat, 1.0 - gamma) / (gamma - 1.0) - 2.0 * Xh * wme;
  for (int j = 0; j < T; ++j) vals[j] = mbar[j];
  emit(wmb);
  {
    std::vector<double> pts{-Xh, Xh};
    for (int j = 0; j < T; ++j)
      for (double f : feats[j])
        if (f > -Xh && f < Xh) pts.push_back(f);
    pts = sorted_unique(std::move(pts), 2e-9 * Xh);
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
      gl_on(pts[p], pts[p + 1], bud.xgl, [&](double xi, double gw) {
        for (int j = 0; j < T; ++j) vals[j] = cdf(j, xi);
        emit(gw * wme);
        for (int j = 0; j < T; ++j) vals[j] = std::max(0.0, mbar[j] - cdf(j, xi));
        emit(gw * wme);
      });
    }
    for (int j = 0; j < T; ++j) {  // profile floor and the |x| > w/2 + Xh region
      out.neg_abs[j] += 2.0 * kTailEps * mbar[j] * (2.0 * ext[j] + 2.0 * Xh) * wme;
      out.neg_sup[j] = kTailEps * mbar[j];  // S in any dropped strip is below the tail mass
    }
  }

  // Below saturation: log-w panels, feature-aligned x panels.
  if (wlo < Wsat && wlo > 0.0) {
    const double ylo = std::log(wlo), yhi = std::log(Wsat);
    const int ny = std::max(1, (int)std::ceil((yhi - ylo) / bud.wpanel));
    const double dy = (yhi - ylo) / ny;
    for (int p = 0; p < ny; ++p) {
      gl_on(ylo + p * dy, ylo + (p + 1) * dy, bud.wgl, [&](double y, double gwy) {
        const double w = std::exp(y);
        const double wm = gwy * std::exp(-gamma * y);
        double A = std::numeric_limits<double>::infinity(), B = -A;
        for (int j = 0; j < T; ++j) {
          A = std::min(A, cen[j] - ext[j] - 0.5 * w);
          B = std::max(B, cen[j] + ext[j] + 0.5 * w);
        }
        std::vector<double> pts{A, B};
        for (int j = 0; j < T; ++j)
          for (double f : feats[j])
            for (int sgn : {-1, +1}) {
              const double x = f + sgn * 0.5 * w;
              if (x > A && x < B) pts.push_back(x);
            }
        pts = sorted_unique(std::move(pts), 1e-9 * (B - A));
        for (std::size_t q = 0; q + 1 < pts.size(); ++q) {
          gl_on(pts[q], pts[q + 1], bud.xgl, [&](double x, double gwx) {
            for (int j = 0; j < T; ++j) vals[j] = ks[j].box_segment(x, w);
            emit(wm * gwx);
          });
        }
        for (int j = 0; j < T; ++j) {
          // integral of S over either strip equals w times the kernel tail mass
          out.neg_abs[j] += 2.0 * kTailEps * mbar[j] * w * wm;
        }
      });
    }
  }
  return out;
}

// Density atoms: value = kappa_j(x), weight = dx.
AxisAtoms build_density_atoms(const std::vector<Kernel1D>& ks, const Budget& bud) {
  const int T = (int)ks.size();
  AxisAtoms out;
  out.T = T;
  out.vmax.assign(T, 0.0);
  out.first.assign(T, 0.0);
  out.second.assign(T, 0.0);
  out.neg_abs.assign(T, 0.0);
  out.neg_sup.assign(T, 0.0);
  std::vector<double> pts;
  for (int j = 0; j < T; ++j) {
    const double c = ks[j].centre(), e = ks[j].half_extent(kTailEps);
    out.neg_abs[j] = kTailEps * ks[j].mass();
    out.neg_sup[j] = std::max(ks[j].density(c - e), ks[j].density(c + e));
    pts.push_back(c - e);
    pts.push_back(c + e);
    pts.push_back(c);
    double step = e;
    for (int k = 0; k <= bud.levels; ++k, step *= 0.5) {
      pts.push_back(c - step);
      pts.push_back(c + step);
    }
  }
  if (pts.empty()) return out;
  pts = sorted_unique(std::move(pts), 1e-12);
  std::vector<double> vals(T);
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    gl_on(pts[p], pts[p + 1], bud.xgl + 2, [&](double x, double gw) {
      bool any = false;
      for (int j = 0; j < T; ++j) {
        vals[j] = ks[j].density(x);
        any = any || vals[j] != 0;
      }
      if (!any) return;
      out.mass.push_back(gw);
      for (int j = 0; j < T; ++j) {
        out.val.push_back(vals[j]);
        out.vmax[j] = std::max(out.vmax[j], vals[j]);
        out.first[j] += gw * vals[j];
        out.second[j] += gw * vals[j] * vals[j];
      }
    });
  }
  return out;
}

// Probability atoms of a Pareto edge law on [u_min, U].
AxisAtoms build_law_atoms(const EdgeLawDescriptor& law, double U, const Budget& bud) {
  AxisAtoms out;
  out.T = 1;
  out.vmax.assign(1, 0.0);
  out.first.assign(1, 0.0);
  out.second.assign(1, 0.0);
  out.neg_abs.assign(1, 0.0);
  out.neg_sup.assign(1, 0.0);
  const double c = law.gamma * std::pow(law.u_min, law.gamma);
  const double ylo = std::log(law.u_min), yhi = std::log(U);
  const int ny = std::max(1, (int)std::ceil((yhi - ylo) / (bud.wpanel * 0.7)));
  const double dy = (yhi - ylo) / ny;
  for (int p = 0; p < ny; ++p) {
    gl_on(ylo + p * dy, ylo + (p + 1) * dy, bud.wgl, [&](double y, double gw) {
      const double u = std::exp(y);
      const double m = gw * c * std::exp(-law.gamma * y);
      out.mass.push_back(m);
      out.val.push_back(u);
      out.vmax[0] = std::max(out.vmax[0], u);
      out.first[0] += m * u;
      out.second[0] += m * u * u;
    });
  }
  return out;
}

GradedHist hist_of_axis(const AxisAtoms& a, int term, double vmax, double phase_grade,
                        const Budget& bud) {
  GradedHist h(vmax, phase_grade, bud.dmin, bud.dmax);
  for (std::size_t i = 0; i < a.size(); ++i) h.add(a.val[i * a.T + term], a.mass[i]);
  return h;
}

// Closed bound on the full power moment of one axis built from w = 0:
// integral integral S_j(x,w)^q dx w^{-g-1} dw <= (2 lp_j(q) + amp_j^q)/(q-g) + mbar_j^q/(g-1).
double axis_power_moment_bound(const Kernel1D& k, double q, double gamma) {
  const double lp = k.lp_gamma(q);
  const double amp = std::pow(k.sup_density(), q);
  return (2.0 * lp + amp) / (q - gamma) + std::pow(k.mass(), q) / (gamma - 1.0);
}

// ---------------------------------------------------------------------------
// CfEngine.
// ---------------------------------------------------------------------------

struct EngineState {
  GradedHist hist;
  double premult = 1.0;
  double inv_n = 1.0;
  double tau_max = 0.0;
  double tr_abs = 0.0, tr_lin = 0.0, tr_quad = 0.0;  // premult included; powers of |tau|
  bool trivial = true;
};

// Shared box-mode construction: exponent =
//   premult * integral Psi(tau * mu(B(x,w))) w1^{-g1-1} w2^{-g2-1} dx dw,  w_i >= wlo_i.
EngineState build_box_state(const MeasureDescriptor& mu, double g1, double g2, double wlo1,
                            double wlo2, double premult, double inv_n, double t_max,
                            double tol) {
  EngineState state;
  EngineState* impl = &state;
  impl->premult = premult;
  impl->inv_n = inv_n;
  const double tau_max = std::abs(t_max) * inv_n;
  impl->tau_max = tau_max;

  const auto& terms = mu.terms();
  const int T = (int)terms.size();
  std::vector<double> W(T);
  std::vector<Kernel1D> k1s, k2s;
  double vmax_final = 0.0;
  for (int j = 0; j < T; ++j) {
    W[j] = terms[j].weight;
    k1s.push_back(terms[j].k1);
    k2s.push_back(terms[j].k2);
    vmax_final += std::abs(W[j]) * terms[j].k1.mass() * terms[j].k2.mass();
  }
  if (tau_max == 0.0 || vmax_final <= 0.0 || premult == 0.0) return state;
  const Budget bud = pick_budget(tol, T);

  // Heads for zero lower cutoffs: drop w < wt using the exact quadratic bound
  //   |Psi(tau V)| <= tau^2 V^2 / 2,   V^2 <= T sum_j W_j^2 S1_j^2 S2_j^2,
  //   integral_x S(x,w)^2 dx <= w^2 lp(2)   (Cauchy-Schwarz over the window),
  // so the dropped mass is coeff * wt^{2-g} with the partner axis integrated in
  // full. Quadratic in tau, hence booked under tr_quad.
  double wt1 = 0.0, wt2 = 0.0;
  auto solve_head = [&](const std::vector<Kernel1D>& own, double g_own,
                        const std::vector<Kernel1D>& other, double g_other) {
    double coeff = 0.0, scale = std::numeric_limits<double>::infinity();
    for (int j = 0; j < T; ++j) {
      coeff += W[j] * W[j] * own[j].lp_gamma(2.0) *
               axis_power_moment_bound(other[j], 2.0, g_other);
      scale = std::min(scale, own[j].half_extent(0.5));
    }
    coeff *= 0.5 * premult * (double)T * tau_max * tau_max / (2.0 - g_own);
    const double target = tol * 0.01;
    const double s = std::max(scale, 1e-12);
    double wt = coeff > 0 ? std::pow(target / coeff, 1.0 / (2.0 - g_own)) : 0.02 * s;
    wt = std::clamp(wt, 1e-14 * s, 0.02 * s);
    impl->tr_quad += coeff * std::pow(wt, 2.0 - g_own) / (tau_max * tau_max);
    return wt;
  };
  if (wlo1 <= 0.0) wt1 = solve_head(k1s, g1, k2s, g2);
  if (wlo2 <= 0.0) wt2 = solve_head(k2s, g2, k1s, g1);

  const AxisAtoms A1 = build_s_axis(k1s, g1, std::max(wlo1, wt1), bud);
  const AxisAtoms A2 = build_s_axis(k2s, g2, std::max(wlo2, wt2), bud);
  if (A1.size() == 0 || A2.size() == 0) return state;

  for (int j = 0; j < T; ++j) {  // x-window truncation, |V|^2 <= T sum W^2 S1^2 S2^2
    const double q1 = A1.neg_sup[j] * A1.neg_abs[j];  // integral of S^2 over the strips
    const double q2 = A2.neg_sup[j] * A2.neg_abs[j];
    impl->tr_quad += 0.5 * premult * T * W[j] * W[j] *
                     (q1 * A2.second[j] + A1.second[j] * q2 + q1 * q2);
  }

  GradedHist dest(vmax_final, tau_max, bud.dmin, bud.dmax);
  if (T == 1) {
    const double aw = std::abs(W[0]);
    GradedHist h1 =
        hist_of_axis(A1, 0, A1.vmax[0], tau_max * aw * std::max(A2.vmax[0], 1e-300), bud);
    GradedHist h2 =
        hist_of_axis(A2, 0, A2.vmax[0], tau_max * aw * std::max(A1.vmax[0], 1e-300), bud);
    pair_product(h1.compact(), h2.compact(), W[0], dest);
  } else {
    const std::size_t n1 = A1.size(), n2 = A2.size();
    for (std::size_t i = 0; i < n1; ++i) {
      const double* v1 = &A1.val[i * T];
      const double m1 = A1.mass[i];
      for (std::size_t k = 0; k < n2; ++k) {
        const double* v2 = &A2.val[k * T];
        double v = 0.0;
        for (int j = 0; j < T; ++j) v += W[j] * v1[j] * v2[j];
        dest.add(v, m1 * A2.mass[k]);
      }
    }
  }
  impl->hist = std::move(dest);
  impl->trivial = false;
  return state;
}

EngineState build_line_state(const MeasureDescriptor& mu, double g1,
                             const EdgeLawDescriptor& law2, double premult, double t_max,
                             double tol) {
  EngineState state;
  EngineState* impl = &state;
  impl->premult = premult;
  impl->inv_n = 1.0;
  const double tau_max = std::abs(t_max);
  impl->tau_max = tau_max;

  const auto& terms = mu.terms();
  const int T = (int)terms.size();
  std::vector<double> W(T);
  std::vector<Kernel1D> k1s, k2s;
  double line_vmax = 0.0;
  for (int j = 0; j < T; ++j) {
    W[j] = terms[j].weight;
    k1s.push_back(terms[j].k1);
    k2s.push_back(terms[j].k2);
    line_vmax += std::abs(W[j]) * terms[j].k1.mass() * terms[j].k2.sup_density();
  }
  if (tau_max == 0.0 || line_vmax <= 0.0 || premult == 0.0) return state;
  const Budget bud = pick_budget(tol, T);

  // All line truncation bounds run through E min(c^2 u^2 / 2, 2 c u) <=
  // Apar c^{g2c} with c = tau sum_j |W_j| S1_j kappa2_j:
  //  - gamma2 < 2: g2c = gamma2 and the exact Pareto constant
  //      Apar = g2 umin^{g2} (4^{2-g2} / (2 (2-g2)) + 2^{3-2g2} / (g2 - 1));
  //  - gamma2 > 2: g2c = 2 with Apar = E[u^2] / 2 (pure quadratic);
  //  - gamma2 = 2: an intermediate power keeps the moment finite.
  // For g2c < 2 the bound is booked under tr_lin via tau^{g2c} <=
  // tau_max^{g2c-1} tau; for g2c = 2 under tr_quad.
  double g2c, Apar;
  if (law2.gamma < 2.0) {
    const double g2 = law2.gamma;
    g2c = g2;
    Apar = g2 * std::pow(law2.u_min, g2) *
           (std::pow(4.0, 2.0 - g2) / (2.0 * (2.0 - g2)) +
            std::pow(2.0, 3.0 - 2.0 * g2) / (g2 - 1.0));
  } else if (law2.gamma > 2.0) {
    g2c = 2.0;
    Apar = 0.5 * law2.second_moment();
  } else {
    g2c = 0.5 * (g1 + 2.0);
    Apar = 2.0 * law2.moment(g2c);
  }
  const double line_pref = premult * Apar * std::pow((double)T, g2c - 1.0);
  auto book = [&](double bound_at_tau_max) {
    if (g2c < 2.0)
      impl->tr_lin += bound_at_tau_max / tau_max;
    else
      impl->tr_quad += bound_at_tau_max / (tau_max * tau_max);
  };

  // Head for the w1 integral: integral_x S(x,w)^{g2c} dx <= w^{g2c} lp(g2c).
  double coeff = 0.0, scale = std::numeric_limits<double>::infinity();
  for (int j = 0; j < T; ++j) {
    coeff += std::pow(std::abs(W[j]), g2c) * k1s[j].lp_gamma(g2c) * k2s[j].lp_gamma(g2c);
    scale = std::min(scale, k1s[j].half_extent(0.5));
  }
  coeff *= line_pref * std::pow(tau_max, g2c) / (g2c - g1);
  const double hs = std::max(scale, 1e-12);
  double wt1 = coeff > 0 ? std::pow(tol * 0.01 / coeff, 1.0 / (g2c - g1)) : 0.02 * hs;
  wt1 = std::clamp(wt1, 1e-14 * hs, 0.02 * hs);
  book(coeff * std::pow(wt1, g2c - g1));

  const AxisAtoms A1 = build_s_axis(k1s, g1, wt1, bud);
  const AxisAtoms X2 = build_density_atoms(k2s, bud);
  if (A1.size() == 0 || X2.size() == 0) return state;

  // Line-value histogram (axis-1 window mass times axis-2 density).
  const double u2_eff = law2.u_min * std::pow(1e3, 1.0 / law2.gamma);
  GradedHist lhist(line_vmax, tau_max * u2_eff, bud.dmin, bud.dmax);
  if (T == 1) {
    GradedHist h1 = hist_of_axis(
        A1, 0, A1.vmax[0],
        tau_max * std::abs(W[0]) * std::max(X2.vmax[0], 1e-300) * u2_eff, bud);
    const GradedHist::Compact c1 = h1.compact();
    for (std::size_t k = 0; k < X2.size(); ++k) {
      const double kv = X2.val[k], km = X2.mass[k];
      if (kv == 0) continue;
      const double lnk = std::log(kv) + std::log(std::abs(W[0]));
      for (std::size_t i = 0; i < c1.size(); ++i) {
        lhist.add_cell_ln(c1.lnav[i] + lnk, W[0] * c1.v[i] * kv, c1.m[i] * km,
                          c1.m[i] * km * W[0] * W[0] * c1.evv[i] * kv * kv);
      }
    }
  } else {
    for (std::size_t i = 0; i < A1.size(); ++i) {
      const double* v1 = &A1.val[i * T];
      const double m1 = A1.mass[i];
      for (std::size_t k = 0; k < X2.size(); ++k) {
        const double* v2 = &X2.val[k * T];
        double v = 0.0;
        for (int j = 0; j < T; ++j) v += W[j] * v1[j] * v2[j];
        lhist.add(v, m1 * X2.mass[k]);
      }
    }
  }

  // x-truncation in the same Apar c^{g2c} currency: dropped x1 strips pay
  // neg_sup^{g2c-1} neg_abs per term (times the full kappa2 power integral),
  // dropped x2 strips pay the full (x1, w1) power moment times the strip power.
  double xdrop = 0.0;
  for (int j = 0; j < T; ++j) {
    xdrop +=
        std::pow(std::abs(W[j]), g2c) *
        (std::pow(A1.neg_sup[j], g2c - 1.0) * A1.neg_abs[j] * k2s[j].lp_gamma(g2c) +
         axis_power_moment_bound(k1s[j], g2c, g1) * std::pow(X2.neg_sup[j], g2c - 1.0) *
             X2.neg_abs[j]);
  }
  book(line_pref * std::pow(tau_max, g2c) * xdrop);

  // u2 cut: per line-value bin, the dropped u > U mass obeys
  //   E |Psi(tau u v)| <= tau |v| E[u; u>U] + min(2 P(u>U), tau |v| E[u; u>U]),
  // so the heavy small-|v| bins are charged linearly, never by raw bin mass.
  const GradedHist::Compact cl = lhist.compact();
  double U2 = std::max(u2_eff, 2.0 * law2.u_min);
  double u_drop = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double P = law2.tail_mass(U2), E1 = law2.mean_above(U2);
    u_drop = 0.0;
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const double x = tau_max * std::abs(cl.v[i]) * E1;
      u_drop += cl.m[i] * (x + std::min(2.0 * P, x));
    }
    u_drop *= premult;
    if (u_drop <= tol * 0.02 || U2 >= 1e12) break;
    U2 *= 2.0;
  }
  impl->tr_abs += u_drop;

  const AxisAtoms Au = build_law_atoms(law2, U2, bud);
  GradedHist dest(line_vmax * U2, tau_max, bud.dmin, bud.dmax);
  for (std::size_t k = 0; k < Au.size(); ++k) {
    const double u = Au.val[k], um = Au.mass[k], lnu = std::log(u);
    for (std::size_t i = 0; i < cl.size(); ++i) {
      dest.add_cell_ln(cl.lnav[i] + lnu, u * cl.v[i], cl.m[i] * um,
                       cl.m[i] * um * u * u * cl.evv[i]);
    }
  }
  impl->hist = std::move(dest);
  impl->trivial = false;
  return state;
}

}  // namespace

struct CfEngine::Impl : EngineState {
  explicit Impl(EngineState&& s) : EngineState(std::move(s)) {}
};

CfEngine::CfEngine(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
CfEngine::CfEngine(CfEngine&&) noexcept = default;
CfEngine& CfEngine::operator=(CfEngine&&) noexcept = default;
CfEngine::~CfEngine() = default;

std::complex<double> CfEngine::exponent(double t) const {
  if (impl_->trivial) return {};
  return impl_->premult * impl_->hist.eval(t * impl_->inv_n).val;
}

std::complex<double> CfEngine::cf(double t) const { return std::exp(exponent(t)); }

CfAccuracy CfEngine::accuracy(double t) const {
  CfAccuracy acc;
  if (impl_->trivial) return acc;
  const double tau = std::abs(t) * impl_->inv_n;
  acc.truncation = impl_->tr_abs + impl_->tr_lin * tau + impl_->tr_quad * tau * tau;
  acc.evaluation = impl_->premult * impl_->hist.eval(t * impl_->inv_n).err;
  return acc;
}

CfEngine CfEngine::prelimit(const ScalingPlan& plan, const MeasureDescriptor& mu, double t_max,
                            double tol) {
  const double premult = plan.lambda_rho * std::pow(plan.rho, plan.gamma1 + plan.gamma2);
  return CfEngine(std::make_unique<Impl>(
      build_box_state(mu, plan.gamma1, plan.gamma2, plan.rho * plan.law1.u_min,
                      plan.rho * plan.law2.u_min, premult, 1.0 / plan.n_rho, t_max, tol)));
}

CfEngine CfEngine::intermediate_limit(const MeasureDescriptor& mu, double gamma1, double gamma2,
                                      double t_max, double tol) {
  if (!(gamma1 > 1.0 && gamma1 < 2.0 && gamma2 > 1.0 && gamma2 < 2.0))
    throw HypothesisError("intermediate limit requires gamma1, gamma2 in (1,2)");
  return CfEngine(std::make_unique<Impl>(
      build_box_state(mu, gamma1, gamma2, 0.0, 0.0, 1.0, 1.0, t_max, tol)));
}

CfEngine CfEngine::poisson_lines_limit(const MeasureDescriptor& mu, double gamma1,
                                       const EdgeLawDescriptor& law2, double t_max,
                                       double tol) {
  if (!(gamma1 > 1.0 && gamma1 < 2.0))
    throw HypothesisError("poisson-lines limit requires gamma1 in (1,2)");
  if (!(gamma1 < law2.gamma))
    throw HypothesisError("poisson-lines limit requires gamma1 < gamma2");
  return CfEngine(std::make_unique<Impl>(build_line_state(mu, gamma1, law2, 1.0, t_max, tol)));
}

std::complex<double> prelimit_cf(const ScalingPlan& plan, const MeasureDescriptor& mu, double t,
                                 double tol) {
  const CfEngine eng = CfEngine::prelimit(plan, mu, t, tol);
  const CfAccuracy acc = eng.accuracy(t);
  const std::complex<double> value = std::exp(eng.exponent(t));
  if (acc.total() > tol)
    throw QuadratureError("prelimit_cf: error bound above tolerance", std::abs(value),
                          acc.total());
  return value;
}

std::vector<std::complex<double>> prelimit_cf_grid(const ScalingPlan& plan,
                                                   const MeasureDescriptor& mu,
                                                   const std::vector<double>& t_grid,
                                                   double tol) {
  double t_max = 0.0;
  for (double t : t_grid) t_max = std::max(t_max, std::abs(t));
  const CfEngine eng = CfEngine::prelimit(plan, mu, t_max, tol);
  std::vector<std::complex<double>> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(std::exp(eng.exponent(t)));
  return out;
}

// ---------------------------------------------------------------------------
// IntegrandSpec dispatch.
// ---------------------------------------------------------------------------

std::complex<double> integrate(const IntegrandSpec& spec, double tol) {
  const auto require = [&](bool ok, const char* what) {
    if (!ok)
      throw QuadratureError(what, 0.0, std::numeric_limits<double>::infinity());
  };
  switch (spec.kernel) {
    case IntegrandKernel::density_product: {
      const MeasureDescriptor& nu = spec.nu ? *spec.nu : spec.mu;
      double s = 0.0;
      for (const auto& a : spec.mu.terms())
        for (const auto& b : nu.terms())
          s += a.weight * b.weight * kernel_correlation(a.k1, b.k1, 0.0) *
               kernel_correlation(a.k2, b.k2, 0.0);
      return s;
    }
    case IntegrandKernel::square_of_box_mass: {
      require(spec.weight == WeightKind::pure_power,
              "square_of_box_mass requires the pure power weight");
      const MeasureDescriptor& nu = spec.nu ? *spec.nu : spec.mu;
      const std::size_t np = spec.mu.terms().size() * nu.terms().size();
      const double tp = tol * 0.5 / (double)std::max<std::size_t>(np, 1);
      double s = 0.0;
      for (const auto& a : spec.mu.terms())
        for (const auto& b : nu.terms())
          s += a.weight * b.weight * axis_variance_integral(a.k1, b.k1, spec.gamma1, tp) *
               axis_variance_integral(a.k2, b.k2, spec.gamma2, tp);
      return s;
    }
    case IntegrandKernel::square_of_line_functional: {
      require(spec.weight == WeightKind::f2_squared_style && spec.law2.has_value(),
              "square_of_line_functional requires the u2^2 f2 weight");
      const double v2p = spec.law2->second_moment();
      if (!std::isfinite(v2p))
        throw HypothesisError("gaussian-lines variance requires gamma2 > 2");
      const MeasureDescriptor& nu = spec.nu ? *spec.nu : spec.mu;
      const std::size_t np = spec.mu.terms().size() * nu.terms().size();
      const double tp = tol * 0.5 / ((double)std::max<std::size_t>(np, 1) * std::max(v2p, 1.0));
      double s = 0.0;
      for (const auto& a : spec.mu.terms())
        for (const auto& b : nu.terms())
          s += a.weight * b.weight * axis_variance_integral(a.k1, b.k1, spec.gamma1, tp) *
               kernel_correlation(a.k2, b.k2, 0.0);
      return s * v2p;
    }
    case IntegrandKernel::psi_of_box_mass: {
      require(spec.weight == WeightKind::pure_power,
              "psi_of_box_mass requires the pure power weight");
      require(!spec.nu.has_value(), "psi kernels take a single measure");
      return CfEngine::intermediate_limit(spec.mu, spec.gamma1, spec.gamma2,
                                          std::abs(spec.t), tol)
          .exponent(spec.t);
    }
    case IntegrandKernel::psi_of_line_functional: {
      require(spec.weight == WeightKind::power_times_f2 && spec.law2.has_value(),
              "psi_of_line_functional requires the power times f2 weight");
      require(!spec.nu.has_value(), "psi kernels take a single measure");
      return CfEngine::poisson_lines_limit(spec.mu, spec.gamma1, *spec.law2,
                                           std::abs(spec.t), tol)
          .exponent(spec.t);
    }
  }
  throw QuadratureError("unsupported integrand", 0.0,
                        std::numeric_limits<double>::infinity());
}

}  // namespace boxfield
