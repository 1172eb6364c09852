#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "symperc/solver.hpp"

namespace symperc::structure {

using sampler::SpinConfig;
using solver::SolutionSet;

// Number of frozen coordinates of sigma: coordinates whose single flip leaves
// the solution set. Membership checks are binary searches on the sorted codes.
inline int frozen_count(const SolutionSet& s, const SpinConfig& sigma) {
  sigma.validate();
  if (sigma.n != s.n) throw std::invalid_argument("frozen_count: dimension mismatch");
  if (!s.contains(sigma.code)) throw std::invalid_argument("frozen_count: sigma not in set");
  int frozen = 0;
  for (int i = 0; i < s.n; ++i)
    if (!s.contains(sigma.code ^ (std::uint64_t(1) << i))) ++frozen;
  return frozen;
}

struct PerSolution {
  std::uint64_t code = 0;
  int frozen_coordinates = 0;
  int nearest_other_distance = 0;
};

// Connected components of the solution set under single-coordinate-flip
// adjacency, plus per-solution freezing and nearest-neighbour data.
struct ClusterReport {
  int n = 0;
  std::uint64_t solution_count = 0;
  std::vector<std::uint64_t> cluster_sizes;  // sorted ascending
  std::uint64_t isolated_count = 0;
  std::vector<PerSolution> per_solution;  // in codeword order
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t size) : parent_(size) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

inline ClusterReport clusters(const SolutionSet& s) {
  ClusterReport report;
  report.n = s.n;
  report.solution_count = s.codes.size();
  const std::size_t count = s.codes.size();
  detail::UnionFind uf(count);
  report.per_solution.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const std::uint64_t code = s.codes[idx];
    int frozen = s.n;
    for (int j = 0; j < s.n; ++j) {
      const std::uint64_t neighbor = code ^ (std::uint64_t(1) << j);
      const auto it = std::lower_bound(s.codes.begin(), s.codes.end(), neighbor);
      if (it != s.codes.end() && *it == neighbor) {
        --frozen;
        uf.unite(idx, std::size_t(it - s.codes.begin()));
      }
    }
    // nearest other by full scan; distance-1 neighbours short-circuit
    int nearest = 0;
    if (frozen < s.n) {
      nearest = 1;
    } else {
      for (std::size_t other = 0; other < count; ++other) {
        if (other == idx) continue;
        const int d = std::popcount(s.codes[other] ^ code);
        if (nearest == 0 || d < nearest) nearest = d;
      }
    }
    report.per_solution.push_back({code, frozen, nearest});
  }
  std::vector<std::uint64_t> size_by_root(count, 0);
  for (std::size_t idx = 0; idx < count; ++idx) ++size_by_root[uf.find(idx)];
  for (std::uint64_t size : size_by_root)
    if (size > 0) report.cluster_sizes.push_back(size);
  std::sort(report.cluster_sizes.begin(), report.cluster_sizes.end());
  for (const PerSolution& ps : report.per_solution)
    if (ps.frozen_coordinates == s.n) ++report.isolated_count;
  return report;
}

// True iff no other solution lies within the given Hamming radius of sigma.
inline bool isolation_verdict(const SolutionSet& s, const SpinConfig& sigma, int radius) {
  sigma.validate();
  if (sigma.n != s.n) throw std::invalid_argument("isolation_verdict: dimension mismatch");
  if (radius < 0 || radius > s.n)
    throw std::invalid_argument("isolation_verdict: radius must be in [0, n]");
  if (!s.contains(sigma.code)) throw std::invalid_argument("isolation_verdict: sigma not in set");
  if (radius == 0) return true;
  const auto nearest = solver::nearest_other(s, sigma);
  return !nearest || nearest->distance > radius;
}

}  // namespace symperc::structure
