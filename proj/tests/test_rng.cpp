#include <cmath>
#include <cstdint>
#include <vector>

#include "boxfield/rng.hpp"
#include "doctest.h"

using boxfield::RngStream;

TEST_CASE("philox block matches published known-answer vectors") {
  auto y0 = RngStream::block({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(y0[0] == 0x6627e8d5u);
  CHECK(y0[1] == 0xe169c58du);
  CHECK(y0[2] == 0xbc57ac4cu);
  CHECK(y0[3] == 0x9b00dbd8u);

  auto y1 = RngStream::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                             {0xffffffffu, 0xffffffffu});
  CHECK(y1[0] == 0x408f276du);
  CHECK(y1[1] == 0x41c83b0eu);
  CHECK(y1[2] == 0xa20bc7c6u);
  CHECK(y1[3] == 0x6d5451fdu);

  auto y2 = RngStream::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             {0xa4093822u, 0x299f31d0u});
  CHECK(y2[0] == 0xd16cfe09u);
  CHECK(y2[1] == 0x94fdccebu);
  CHECK(y2[2] == 0x5001e420u);
  CHECK(y2[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and decorrelated") {
  RngStream a(12345, 7), b(12345, 7), c(12345, 8);
  bool same = true, differ = false;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t va = a.next_u64();
    same = same && (va == b.next_u64());
    differ = differ || (va != c.next_u64());
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("uniform01 lands in [0,1) with the right mean and variance") {
  RngStream rng(99, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  double mn = 1.0, mx = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    s += u;
    s2 += u * u;
    mn = std::min(mn, u);
    mx = std::max(mx, u);
  }
  double mean = s / n, var = s2 / n - mean * mean;
  CHECK(mn >= 0.0);
  CHECK(mx < 1.0);
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("exponential and normal have the right first two moments") {
  RngStream rng(4242, 3);
  const int n = 200000;
  double se = 0.0, se2 = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = rng.exponential();
    se += e;
    se2 += e * e;
    double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se2 / n == doctest::Approx(2.0).epsilon(0.04));
  CHECK(std::abs(sn / n) < 0.02);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson sampling matches mean and variance across scales") {
  RngStream rng(7, 11);
  for (double mean : {0.3, 3.7, 47.0, 1200.0}) {
    const int n = mean > 100 ? 20000 : 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    double m = s / n, v = s2 / n - m * m;
    double band = 6.0 * std::sqrt(mean / n);
    CHECK(std::abs(m - mean) < band);
    CHECK(v == doctest::Approx(mean).epsilon(0.08));
  }
}

TEST_CASE("poisson handles edge means") {
  RngStream rng(5, 5);
  CHECK(rng.poisson(0.0) == 0);
  double big = 2.0e6;
  double k = static_cast<double>(rng.poisson(big));
  CHECK(std::abs(k - big) < 12.0 * std::sqrt(big));
}

TEST_CASE("poisson consumes exactly one uniform per draw") {
  RngStream a(321, 1), b(321, 1);
  for (int i = 0; i < 64; ++i) {
    (void)a.poisson(17.3);
    (void)b.uniform01();
  }
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("lgamma_pos agrees with the standard library") {
  for (double z : {0.001, 0.37, 1.0, 2.5, 11.999, 12.001, 47.0, 3000.0}) {
    double ours = RngStream::lgamma_pos(z);
    double ref = std::lgamma(z);
    CHECK(ours == doctest::Approx(ref).epsilon(1e-12));
  }
}
