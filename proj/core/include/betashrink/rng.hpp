#pragma once

#include <cmath>
#include <cstdint>

// Self-contained PRNG and samplers so that simulation and bootstrap
// output is reproducible bit-for-bit regardless of platform or standard
// library (std::*_distribution algorithms are implementation-defined).
//
// Core generator: xoshiro256++ (Blackman & Vigna), seeded via splitmix64.
// Normal: Marsaglia polar method.  Gamma: Marsaglia & Tsang (2000) with
// the u^(1/a) boost for shape < 1.  Beta: ratio of two gammas.

namespace betashrink {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  // Deterministic per-task seeding: one master seed plus two stream
  // indices (e.g. grid index and replication index).  Replications are
  // independent of scheduling order because each owns its own Rng.
  static Rng for_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = master;
    std::uint64_t m1 = splitmix64(s);
    s = m1 ^ (a * 0xD6E8FEB86659FD93ULL + 0x9E3779B97F4A7C15ULL);
    std::uint64_t m2 = splitmix64(s);
    s = m2 ^ (b * 0xCA5A826395121157ULL + 0xBF58476D1CE4E5B9ULL);
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1), never exactly 0 (safe under log()).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  std::uint64_t uniform_index(std::uint64_t n) {
    // Lemire-style bounded generation with rejection of the biased zone.
    std::uint64_t threshold = (-n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  // Central chi-square; noncentral via one shifted normal plus a
  // central remainder, chi^2_nu(D) = (Z + sqrt(D))^2 + chi^2_{nu-1}.
  double chisq(double dof) { return 2.0 * gamma(0.5 * dof); }

  double noncentral_chisq(int dof, double noncentrality) {
    const double z = normal() + std::sqrt(noncentrality);
    double v = z * z;
    if (dof > 1) v += chisq(dof - 1.0);
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace betashrink
