#pragma once

#include <cmath>
#include <cstdint>

namespace rescon {

// Deterministic 64-bit generator (splitmix64). Hand-rolled so draws are
// bit-identical across platforms and standard-library versions; every place
// the project needs randomness derives an independent stream from explicit
// integer keys instead of sharing one generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi] inclusive. hi >= lo required.
  int uniform_int(int lo, int hi) {
    return lo + int(next_u64() % std::uint64_t(hi - lo + 1));
  }

  // Box-Muller; draws two uniforms per call so the stream advance is fixed.
  double gaussian(double mean, double stddev) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
    a *= 0xff51afd7ed558ccdull;
    a ^= a >> 33;
    return a;
  }

  // Independent substream keyed by up to three integers.
  static Rng derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    return Rng(mix(mix(mix(master, a), b), c));
  }

 private:
  std::uint64_t state_;
};

}  // namespace rescon
