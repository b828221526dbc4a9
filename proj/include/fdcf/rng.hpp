#pragma once

#include <complex>
#include <cmath>
#include <cstdint>

namespace fdcf {

// Self-contained splittable PRNG. SplitMix64 core, so streams are cheap to
// fork and a realization is bit-identical for a given seed on any platform
// (std::normal_distribution is implementation-defined, which would break the
// reproducibility contract).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the sine partner is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly symmetric complex normal with E|z|^2 = var.
  std::complex<double> cnormal(double var) {
    if (var <= 0.0) return {0.0, 0.0};
    double s = std::sqrt(0.5 * var);
    double re = normal();
    double im = normal();
    return {s * re, s * im};
  }

  // Independent substream keyed by tag; forks of the same (seed, tag) pair
  // coincide regardless of how much the parent stream has been consumed.
  Rng fork(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag + 0x632be59bd9b4e019ull))); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fdcf
