#pragma once
// Globally adaptive Gauss-Kronrod (G7,K15) on a finite interval.
// Error control is absolute: subintervals are split worst-first until the
// summed K15-G7 discrepancy falls below the tolerance or the interval budget
// is exhausted.  Works for double and complex integrands.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace boxfield {

namespace gk {
// QUADPACK (G7,K15) abscissae/weights on [-1,1]; nodes[14] = 0.
inline constexpr double xk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};
}  // namespace gk

template <class T>
inline double quad_norm(const T& v) {
  return std::abs(v);
}

template <class F>
inline auto gk15_pair(F&& f, double a, double b) {
  using T = decltype(f(0.5 * (a + b)));
  double h = 0.5 * (b - a), c = 0.5 * (a + b);
  T fc = f(c);
  T resk = gk::wk[7] * fc;
  T resg = gk::wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    T fv = f(c - h * gk::xk[i]) + f(c + h * gk::xk[i]);
    resk += gk::wk[i] * fv;
    if (i % 2 == 1) resg += gk::wg[i / 2] * fv;
  }
  struct R {
    T value;
    double error;
  };
  return R{resk * h, quad_norm<T>((resk - resg) * h)};
}

struct Quad1DStats {
  double error = 0.0;
  int intervals = 0;
  bool converged = true;
};

template <class F>
inline auto integrate_1d(F&& f, double a, double b, double abs_tol, Quad1DStats* stats = nullptr,
                         int max_intervals = 4000) {
  using T = decltype(f(0.5 * (a + b)));
  struct Seg {
    double a, b, err;
    T val;
  };
  auto eval = [&](double lo, double hi) {
    auto r = gk15_pair(f, lo, hi);
    return Seg{lo, hi, r.error, r.value};
  };
  std::vector<Seg> segs;
  segs.push_back(eval(a, b));
  auto total_err = [&] {
    double e = 0.0;
    for (const auto& s : segs) e += s.err;
    return e;
  };
  while (static_cast<int>(segs.size()) < max_intervals) {
    double e = total_err();
    if (e <= abs_tol) break;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[worst].err) worst = i;
    Seg s = segs[worst];
    double mid = 0.5 * (s.a + s.b);
    if (mid <= s.a || mid >= s.b) break;  // interval exhausted at fp resolution
    segs[worst] = eval(s.a, mid);
    segs.push_back(eval(mid, s.b));
  }
  T value = T{};
  for (const auto& s : segs) value += s.val;
  if (stats) {
    stats->error = total_err();
    stats->intervals = static_cast<int>(segs.size());
    stats->converged = stats->error <= abs_tol;
  }
  return value;
}

// Gauss-Legendre nodes/weights on [-1,1], cached per order (Newton on P_n).
inline const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
  static std::vector<std::vector<std::pair<double, double>>> cache(257);
  if (n < 1 || n > 256) n = 64;
  auto& entry = cache[static_cast<std::size_t>(n)];
  if (!entry.empty()) return entry;
  std::vector<std::pair<double, double>> nw(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    nw[static_cast<std::size_t>(i)] = {-x, w};
    nw[static_cast<std::size_t>(n - 1 - i)] = {x, w};
  }
  entry = std::move(nw);
  return entry;
}

}  // namespace boxfield
