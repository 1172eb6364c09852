#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "symperc/analytic.hpp"
#include "symperc/rng.hpp"

namespace symperc::sampler {

// One spin vector in {-1,+1}^n packed as an n-bit codeword; bit i set means
// coordinate i is +1.
struct SpinConfig {
  int n = 0;
  std::uint64_t code = 0;

  void validate() const {
    if (n < 1 || n > 63) throw std::domain_error("SpinConfig: n must be in [1,63]");
    if (code >= (std::uint64_t(1) << n)) throw std::domain_error("SpinConfig: code >= 2^n");
  }
  int spin(int i) const { return ((code >> i) & 1u) ? +1 : -1; }
  SpinConfig flipped(int i) const { return {n, code ^ (std::uint64_t(1) << i)}; }
  SpinConfig antipode() const {
    return {n, code ^ ((std::uint64_t(1) << n) - 1)};
  }
  bool operator==(const SpinConfig&) const = default;
};

inline int overlap(const SpinConfig& a, const SpinConfig& b) {
  return a.n - 2 * std::popcount(a.code ^ b.code);
}

inline int hamming_distance(const SpinConfig& a, const SpinConfig& b) {
  return std::popcount(a.code ^ b.code);
}

enum class Provenance { Random, Planted };

// A perceptron instance: m Gaussian constraint rows of dimension n with
// threshold kappa, plus how it was drawn.
struct Instance {
  int n = 0;
  int m = 0;
  double kappa = 1.0;
  std::vector<double> constraints;  // row-major, m x n
  Provenance provenance = Provenance::Random;
  SpinConfig planted;  // meaningful only when provenance == Planted
  std::uint64_t seed = 0;

  std::span<const double> row(int i) const {
    return std::span<const double>(constraints).subspan(std::size_t(i) * std::size_t(n),
                                                        std::size_t(n));
  }
  // The same instance truncated to its first t constraints (shares n, kappa).
  Instance prefix(int t) const {
    if (t < 0 || t > m) throw std::domain_error("Instance::prefix: t out of range");
    Instance out = *this;
    out.m = t;
    out.constraints.assign(constraints.begin(),
                           constraints.begin() + std::ptrdiff_t(t) * std::ptrdiff_t(n));
    return out;
  }
};

// |<x, sigma>| <= kappa sqrt(n), ties counting as satisfied.
inline bool satisfies(std::span<const double> x_row, const SpinConfig& sigma, double kappa) {
  sigma.validate();
  if (x_row.size() != std::size_t(sigma.n))
    throw std::invalid_argument("satisfies: row dimension does not match sigma");
  double dot = 0.0;
  for (int i = 0; i < sigma.n; ++i) dot += x_row[std::size_t(i)] * double(sigma.spin(i));
  return std::fabs(dot) <= kappa * std::sqrt(double(sigma.n));
}

// One draw of Z | |Z| <= kappa. Rejection from the untruncated normal when
// the acceptance probability p(kappa) is at least 0.05; inverse-CDF transform
// otherwise so tiny kappa never loops unboundedly.
inline double truncated_normal(double kappa, RandomStream& rng) {
  if (!(kappa > 0.0)) throw std::domain_error("truncated_normal: kappa must be > 0");
  const double p = analytic::gauss_p(kappa);
  if (p >= 0.05) {
    for (;;) {
      const double z = rng.normal();
      if (std::fabs(z) <= kappa) return z;
    }
  }
  const double u = rng.uniform_open();
  const double z = norm_cdf_inv(0.5 + (u - 0.5) * p);
  return std::clamp(z, -kappa, kappa);
}

// m i.i.d. standard Gaussian rows in a fixed row-major stream order;
// (n, m, seed) determines the instance byte-for-byte.
inline Instance sample_random_instance(int n, int m, double kappa, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample_random_instance: n must be >= 1");
  if (m < 0) throw std::domain_error("sample_random_instance: m must be >= 0");
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.kappa = kappa;
  inst.provenance = Provenance::Random;
  inst.seed = seed;
  inst.constraints.resize(std::size_t(m) * std::size_t(n));
  RandomStream rng(seed);
  for (double& v : inst.constraints) v = rng.normal();
  return inst;
}

// Each row is a standard Gaussian vector conditioned on |<X, sigma*>| <= kappa
// sqrt(n), built exactly as X = (g/sqrt(n)) sigma* + W_perp with g truncated
// normal and W_perp the projection of a fresh Gaussian vector onto the
// complement of sigma*. Stream order per row: g first, then the n components
// of W.
inline Instance sample_planted_instance(int n, int m, double kappa, const SpinConfig& sigma_star,
                                        std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample_planted_instance: n must be >= 1");
  if (m < 0) throw std::domain_error("sample_planted_instance: m must be >= 0");
  sigma_star.validate();
  if (sigma_star.n != n)
    throw std::invalid_argument("sample_planted_instance: sigma* dimension mismatch");
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.kappa = kappa;
  inst.provenance = Provenance::Planted;
  inst.planted = sigma_star;
  inst.seed = seed;
  inst.constraints.resize(std::size_t(m) * std::size_t(n));
  RandomStream rng(seed);
  const double sqrt_n = std::sqrt(double(n));
  const double bound = kappa * sqrt_n;
  for (int r = 0; r < m; ++r) {
    double* row = inst.constraints.data() + std::size_t(r) * std::size_t(n);
    const double g = truncated_normal(kappa, rng);
    double w_dot = 0.0;
    for (int i = 0; i < n; ++i) {
      row[i] = rng.normal();
      w_dot += row[i] * double(sigma_star.spin(i));
    }
    const double shift = (g - w_dot / sqrt_n) / sqrt_n;
    for (int i = 0; i < n; ++i) row[i] += shift * double(sigma_star.spin(i));
    // Guard against the dot product landing a rounding error outside the
    // band when g sits at the boundary: nudge along sigma* until it passes.
    for (int guard = 0; guard < 4; ++guard) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += row[i] * double(sigma_star.spin(i));
      if (std::fabs(dot) <= bound) break;
      const double corr = (std::copysign(bound, dot) * (1.0 - 1e-15) - dot) / sqrt_n;
      for (int i = 0; i < n; ++i) row[i] += corr * double(sigma_star.spin(i)) / sqrt_n;
    }
  }
  return inst;
}

// Uniform spin configuration on {-1,+1}^n.
inline SpinConfig random_spin(int n, RandomStream& rng) {
  if (n < 1 || n > 63) throw std::domain_error("random_spin: n must be in [1,63]");
  return {n, rng.bits() & ((std::uint64_t(1) << n) - 1)};
}

}  // namespace symperc::sampler
