#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "symperc/structure.hpp"

using namespace symperc;
using namespace symperc::sampler;
using namespace symperc::solver;
using namespace symperc::structure;

namespace {

SolutionSet full_cube(int n) {
  SolutionSet s;
  s.n = n;
  s.m = 0;
  s.codes.resize(std::size_t(1) << n);
  for (std::size_t c = 0; c < s.codes.size(); ++c) s.codes[c] = c;
  return s;
}

}  // namespace

TEST_CASE("frozen count edge cases", "[structure]") {
  const SolutionSet cube = full_cube(5);
  for (std::uint64_t code : {0ull, 7ull, 31ull})
    REQUIRE(frozen_count(cube, SpinConfig{5, code}) == 0);

  SolutionSet one_dim;
  one_dim.n = 1;
  one_dim.m = 0;
  one_dim.codes = {0, 1};
  REQUIRE(frozen_count(one_dim, SpinConfig{1, 0}) == 0);
  REQUIRE(frozen_count(one_dim, SpinConfig{1, 1}) == 0);

  REQUIRE_THROWS_AS(frozen_count(one_dim, SpinConfig{2, 2}), std::invalid_argument);
}

TEST_CASE("frozen count equals constraint recheck oracle", "[structure]") {
  const Instance inst = sample_random_instance(12, 9, 1.0, 606);
  const SolutionSet s = solver::enumerate(inst);
  REQUIRE(!s.codes.empty());
  for (std::size_t i = 0; i < s.codes.size(); i += 5) {
    const SpinConfig sigma{12, s.codes[i]};
    REQUIRE(frozen_count(s, sigma) == oracles::frozen_count_recheck(inst, sigma));
  }
}

TEST_CASE("clusters of the full cube and of an antipodal pair", "[structure]") {
  const ClusterReport cube_report = clusters(full_cube(6));
  REQUIRE(cube_report.cluster_sizes == std::vector<std::uint64_t>{64});
  REQUIRE(cube_report.isolated_count == 0);

  SolutionSet pair;
  pair.n = 5;
  pair.m = 0;
  pair.codes = {0b00000, 0b11111};
  const ClusterReport pair_report = clusters(pair);
  REQUIRE(pair_report.cluster_sizes == std::vector<std::uint64_t>{1, 1});
  REQUIRE(pair_report.isolated_count == 2);
  for (const auto& ps : pair_report.per_solution) {
    REQUIRE(ps.frozen_coordinates == 5);
    REQUIRE(ps.nearest_other_distance == 5);
  }
}

TEST_CASE("cluster structure matches BFS oracle on random instances", "[structure]") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const Instance inst = sample_random_instance(12, 10, 1.0, seed);
    const SolutionSet s = solver::enumerate(inst);
    const ClusterReport report = clusters(s);
    REQUIRE(report.cluster_sizes == oracles::cluster_sizes_bfs(s));
    std::uint64_t total = 0;
    for (std::uint64_t size : report.cluster_sizes) {
      REQUIRE(size >= 1);
      total += size;
    }
    REQUIRE(total == report.solution_count);
    REQUIRE(report.solution_count == s.codes.size());

    // isolated solutions are exactly the fully frozen ones
    std::uint64_t frozen_all = 0;
    for (const auto& ps : report.per_solution) {
      if (ps.frozen_coordinates == s.n) {
        ++frozen_all;
        REQUIRE(ps.nearest_other_distance >= 2);
      } else {
        REQUIRE(ps.nearest_other_distance == 1);
      }
      if (ps.nearest_other_distance == s.n) REQUIRE(ps.frozen_coordinates == s.n);
    }
    REQUIRE(frozen_all == report.isolated_count);
  }
}

TEST_CASE("cluster summary invariant under permutation and sign flip", "[structure]") {
  const Instance inst = sample_random_instance(10, 8, 1.0, 77);
  const SolutionSet s = solver::enumerate(inst);
  const ClusterReport base = clusters(s);

  // global sign flip: complement all codewords
  SolutionSet flipped;
  flipped.n = s.n;
  flipped.m = s.m;
  const std::uint64_t mask = (std::uint64_t(1) << s.n) - 1;
  for (std::uint64_t code : s.codes) flipped.codes.push_back(code ^ mask);
  std::sort(flipped.codes.begin(), flipped.codes.end());
  const ClusterReport flip_report = clusters(flipped);
  REQUIRE(flip_report.cluster_sizes == base.cluster_sizes);
  REQUIRE(flip_report.isolated_count == base.isolated_count);

  // coordinate rotation
  SolutionSet rotated;
  rotated.n = s.n;
  rotated.m = s.m;
  for (std::uint64_t code : s.codes)
    rotated.codes.push_back(((code << 1) | (code >> (s.n - 1))) & mask);
  std::sort(rotated.codes.begin(), rotated.codes.end());
  const ClusterReport rot_report = clusters(rotated);
  REQUIRE(rot_report.cluster_sizes == base.cluster_sizes);
  REQUIRE(rot_report.isolated_count == base.isolated_count);
}

TEST_CASE("isolation verdict radius sweep", "[structure]") {
  const Instance inst = sample_random_instance(12, 10, 1.0, 909);
  const SolutionSet s = solver::enumerate(inst);
  REQUIRE(s.codes.size() >= 2);
  const SpinConfig sigma{12, s.codes[s.codes.size() / 3]};
  REQUIRE(isolation_verdict(s, sigma, 0));
  REQUIRE_FALSE(isolation_verdict(s, sigma, 12));  // the antipode is in the set
  const int nearest = oracles::nearest_other_scan(s, sigma.code);
  for (int radius = 0; radius <= 12; ++radius)
    REQUIRE(isolation_verdict(s, sigma, radius) == (nearest > radius));
  REQUIRE_THROWS_AS(isolation_verdict(s, sigma, 13), std::invalid_argument);
  REQUIRE_THROWS_AS(isolation_verdict(s, SpinConfig{12, s.codes.back() ^ 1}, 1),
                    std::invalid_argument);
}

TEST_CASE("planted isolation verdict matches pairwise scan", "[structure]") {
  const double alpha = 1.5;
  const int n = 20;
  const double bc = analytic::beta_c({1.0, alpha});
  const int radius = std::max(0, int(std::floor((bc - 0.05) * n)));
  RandomStream rng(515);
  for (int trial = 0; trial < 5; ++trial) {
    const SpinConfig sigma = random_spin(n, rng);
    const Instance inst =
        sample_planted_instance(n, int(alpha * n), 1.0, sigma, rng.bits());
    const SolutionSet s = solver::enumerate(inst);
    const bool verdict = isolation_verdict(s, sigma, radius);
    const int nearest = oracles::nearest_other_scan(s, sigma.code);
    REQUIRE(verdict == (radius == 0 || nearest > radius));
    // a stricter radius exercised against the same oracle
    REQUIRE(isolation_verdict(s, sigma, 3) == (nearest > 3));
  }
}
