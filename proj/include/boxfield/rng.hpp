#pragma once
// Counter-based random streams: Philox4x32-10 keyed by (seed, stream id).
// Disjoint streams make replicate-parallel Monte Carlo independent of the
// thread count: replicate r always consumes the same bits.

#include <array>
#include <cmath>
#include <cstdint>

namespace boxfield {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }

  std::uint64_t next_u64() {
    if (pos_ >= 4) refill();
    std::uint64_t lo = buf_[pos_], hi = buf_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
  }

  // [0,1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  // (0,1]  (safe under log)
  double uniform_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  double exponential() { return -std::log(uniform_open()); }

  double normal() {
    double r = std::sqrt(2.0 * exponential());
    double th = 6.283185307179586476925287 * uniform01();
    return r * std::cos(th);
  }

  // Inversion chased outward from the mode; consumes exactly one uniform.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    double u = uniform01();
    long long mode = static_cast<long long>(mean);
    double lp = static_cast<double>(mode) * std::log(mean) - mean - lgamma_pos(static_cast<double>(mode) + 1.0);
    double pm = std::exp(lp);
    double cum = pm;
    if (u < cum) return mode;
    double pu = pm, pd = pm;
    long long ku = mode, kd = mode;
    long long kmax = mode + static_cast<long long>(60.0 * std::sqrt(mean + 1.0)) + 40;
    while (ku < kmax) {
      ++ku;
      pu *= mean / static_cast<double>(ku);
      cum += pu;
      if (u < cum) return ku;
      if (kd > 0) {
        pd *= static_cast<double>(kd) / mean;
        --kd;
        cum += pd;
        if (u < cum) return kd;
      }
    }
    return kmax;
  }

  static double lgamma_pos(double z) {
    double shift = 0.0;
    while (z < 12.0) {
      shift -= std::log(z);
      z += 1.0;
    }
    double zi = 1.0 / z, zi2 = zi * zi;
    double series = zi * (1.0 / 12 + zi2 * (-1.0 / 360 + zi2 * (1.0 / 1260 + zi2 * (-1.0 / 1680))));
    return shift + 0.5 * std::log(6.283185307179586476925287) + (z - 0.5) * std::log(z) - z + series;
  }

  // One 10-round block for the current counter; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> x, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
      std::uint64_t p0 = 0xD2511F53ull * x[0];
      std::uint64_t p1 = 0xCD9E8D57ull * x[2];
      std::array<std::uint32_t, 4> y = {
          static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0],
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1],
          static_cast<std::uint32_t>(p0)};
      x = y;
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return x;
  }

 private:
  void refill() {
    buf_ = block(ctr_, key_);
    pos_ = 0;
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace boxfield
