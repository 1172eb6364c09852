#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace symperc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic sub-stream seed for (master seed, trial index). Parallel
// trials each derive their own stream so worker count never affects results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  splitmix64(state);
  return splitmix64(state);
}

// Seeded random stream with bit-portable output. The engine (mt19937_64) and
// the Gaussian algorithm (Marsaglia polar, pair-cached) are frozen so that a
// seed reproduces the same variates on any build; instance metadata records
// the algorithm name.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static constexpr const char* gaussian_algorithm() { return "marsaglia-polar"; }

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return double(bits() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); never returns an endpoint.
  double uniform_open() { return (double(bits() >> 11) + 0.5) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = bits();
      if (r >= threshold) return r % bound;
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
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace symperc
