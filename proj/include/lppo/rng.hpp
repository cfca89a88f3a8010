#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace lppo {

/// Deterministic RNG used everywhere in the toolkit.
///
/// Wraps mt19937_64 but generates uniforms/normals through explicit,
/// implementation-independent formulas so that streams are reproducible
/// and the full state round-trips through text serialization.
class Rng {
 public:
  Rng() : engine_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n), n >= 1. Rejection-free modulo of a 53-bit draw;
  /// bias is negligible for the small n used here but we reject anyway
  /// to keep the stream exactly uniform.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t span = (~uint64_t{0}) - (~uint64_t{0}) % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= span);
    return x % n;
  }

  /// Standard normal via Box-Muller. Two engine draws per call, no
  /// cached spare, so serialized state fully determines the stream.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent stream seeds from a
/// master seed plus counters without correlated low bits.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

}  // namespace lppo
