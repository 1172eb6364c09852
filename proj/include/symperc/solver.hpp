#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "symperc/errors.hpp"
#include "symperc/rng.hpp"
#include "symperc/sampler.hpp"

namespace symperc::solver {

using sampler::Instance;
using sampler::SpinConfig;

// Exhaustive enumeration is capped here; the cap is a validated capability,
// not a silent truncation.
inline constexpr int kMaxDimension = 30;

// All satisfying codewords of an instance, strictly sorted. Nonempty sets are
// closed under the antipodal map, so their size is always even.
struct SolutionSet {
  int n = 0;
  int m = 0;
  std::vector<std::uint64_t> codes;

  bool contains(std::uint64_t code) const {
    return std::binary_search(codes.begin(), codes.end(), code);
  }
  std::size_t size() const { return codes.size(); }
  SpinConfig spin_at(std::size_t idx) const { return {n, codes[idx]}; }
};

// Per-step cardinalities of S_0 >= S_1 >= ... >= S_m, with full solution sets
// retained only at requested steps.
struct Filtration {
  int n = 0;
  std::vector<std::uint64_t> cardinality;  // size m+1, cardinality[0] = 2^n
  std::vector<std::pair<int, SolutionSet>> snapshots;
};

// Read-only view of the survivor set after a filtration step. Supports
// uniform sampling in both storage regimes; explicit codes are available only
// once the survivor list has gone sparse.
class SurvivorView {
 public:
  SurvivorView(int n, std::uint64_t count, const std::vector<std::uint64_t>* dense_words,
               const std::vector<std::uint64_t>* sparse_codes)
      : n_(n), count_(count), dense_words_(dense_words), sparse_codes_(sparse_codes) {}

  std::uint64_t size() const { return count_; }
  int dimension() const { return n_; }
  const std::vector<std::uint64_t>* codes() const { return sparse_codes_; }

  // Uniform survivor codeword; rejection over the cube in the dense regime
  // (density >= 1/64 there, so expected tries stay bounded).
  std::uint64_t sample(RandomStream& rng) const {
    if (count_ == 0) throw std::logic_error("SurvivorView::sample: empty set");
    if (sparse_codes_) return (*sparse_codes_)[rng.below(count_)];
    if (!dense_words_) return rng.below(std::uint64_t(1) << n_);  // full cube
    for (;;) {
      const std::uint64_t c = rng.below(std::uint64_t(1) << n_);
      if ((*dense_words_)[c >> 6] & (std::uint64_t(1) << (c & 63))) return c;
    }
  }

 private:
  int n_;
  std::uint64_t count_;
  const std::vector<std::uint64_t>* dense_words_;
  const std::vector<std::uint64_t>* sparse_codes_;
};

using StepObserver = std::function<void(int t, const SurvivorView&)>;

namespace detail {

inline void check_capability(const Instance& inst) {
  if (inst.n < 1) throw std::domain_error("solver: n must be >= 1");
  if (inst.n > kMaxDimension)
    throw capability_error("solver: n = " + std::to_string(inst.n) + " exceeds the cap of " +
                           std::to_string(kMaxDimension));
}

// Column-major copy of the constraint matrix: col[j*m + i] = X_{i,j}. The
// Gray walk touches one coordinate across all constraints per step, so this
// keeps the inner loop contiguous.
inline std::vector<double> transpose_constraints(const Instance& inst) {
  std::vector<double> col(std::size_t(inst.m) * std::size_t(inst.n));
  for (int i = 0; i < inst.m; ++i)
    for (int j = 0; j < inst.n; ++j)
      col[std::size_t(j) * std::size_t(inst.m) + std::size_t(i)] =
          inst.constraints[std::size_t(i) * std::size_t(inst.n) + std::size_t(j)];
  return col;
}

inline int shard_bits(int n, unsigned workers, int reserve_low_bits) {
  if (workers <= 1) return 0;
  int k = std::bit_width(workers - 1);  // ceil(log2(workers))
  return std::min(k, std::max(0, n - reserve_low_bits));
}

// Dot products of every constraint with the spin vector of `code`.
inline void init_dots(const Instance& inst, std::uint64_t code, std::vector<double>& dots) {
  dots.assign(std::size_t(inst.m), 0.0);
  for (int i = 0; i < inst.m; ++i) {
    const double* row = inst.constraints.data() + std::size_t(i) * std::size_t(inst.n);
    double d = 0.0;
    for (int j = 0; j < inst.n; ++j)
      d += ((code >> j) & 1u) ? row[j] : -row[j];
    dots[std::size_t(i)] = d;
  }
}

// Walks the sub-cube with fixed high bits `base`, visiting the 2^low_bits
// codes in binary-reflected Gray order. A single-coordinate flip moves every
// running dot product by +-2 X_{i,j}.
inline void enumerate_shard(const Instance& inst, const std::vector<double>& col,
                            std::uint64_t base, int low_bits, double threshold,
                            std::vector<std::uint64_t>& out) {
  const int m = inst.m;
  std::vector<double> dots;
  init_dots(inst, base, dots);
  double* d = dots.data();
  auto all_inside = [&]() {
    for (int i = 0; i < m; ++i)
      if (std::fabs(d[i]) > threshold) return false;
    return true;
  };
  std::uint64_t code = base;
  if (all_inside()) out.push_back(code);
  const std::uint64_t steps = std::uint64_t(1) << low_bits;
  for (std::uint64_t k = 1; k < steps; ++k) {
    const int j = std::countr_zero(k);
    code ^= std::uint64_t(1) << j;
    const double sign = ((code >> j) & 1u) ? 2.0 : -2.0;
    const double* cj = col.data() + std::size_t(j) * std::size_t(m);
    bool inside = true;
    for (int i = 0; i < m; ++i) {
      const double nd = d[i] + sign * cj[i];
      d[i] = nd;
      inside &= (std::fabs(nd) <= threshold);
    }
    if (inside) out.push_back(code);
  }
}

}  // namespace detail

// Exact solution set by Gray-code walk with incremental dot products,
// O(2^n * m) additions. With workers > 1 the cube is sharded on its top bits;
// shard outputs are merged in shard order, so results do not depend on the
// worker count.
inline SolutionSet enumerate(const Instance& inst, unsigned workers = 1) {
  detail::check_capability(inst);
  const double threshold = inst.kappa * std::sqrt(double(inst.n));
  const std::vector<double> col = detail::transpose_constraints(inst);
  const int k = detail::shard_bits(inst.n, workers, 4);
  const int low_bits = inst.n - k;
  const int shards = 1 << k;
  std::vector<std::vector<std::uint64_t>> outputs(static_cast<std::size_t>(shards));
  if (shards == 1) {
    detail::enumerate_shard(inst, col, 0, low_bits, threshold, outputs[0]);
  } else {
    std::vector<std::thread> pool;
    const unsigned used = std::min<unsigned>(workers, unsigned(shards));
    for (unsigned w = 0; w < used; ++w) {
      pool.emplace_back([&, w] {
        for (int s = int(w); s < shards; s += int(used))
          detail::enumerate_shard(inst, col, std::uint64_t(s) << low_bits, low_bits, threshold,
                                  outputs[std::size_t(s)]);
      });
    }
    for (auto& t : pool) t.join();
  }
  SolutionSet set;
  set.n = inst.n;
  set.m = inst.m;
  for (auto& part : outputs) {
    std::sort(part.begin(), part.end());
    set.codes.insert(set.codes.end(), part.begin(), part.end());
  }
  return set;
}

// Incremental filtering S_t -> S_{t+1}, one constraint at a time. Survivors
// start as a 2^n bitset and move to a sorted codeword array once density
// drops below 1/64, keeping late steps cache-friendly. The observer, when
// given, sees every survivor set S_0..S_m.
inline Filtration enumerate_filtration(const Instance& inst,
                                       std::span<const int> snapshot_steps = {},
                                       unsigned workers = 1, const StepObserver& observer = {}) {
  detail::check_capability(inst);
  const int n = inst.n;
  const int m = inst.m;
  const double threshold = inst.kappa * std::sqrt(double(inst.n));
  const std::uint64_t cube = std::uint64_t(1) << n;
  const std::uint64_t sparse_below = std::max<std::uint64_t>(cube >> 6, 1);

  Filtration out;
  out.n = n;
  out.cardinality.reserve(std::size_t(m) + 1);
  out.cardinality.push_back(cube);

  auto wants_snapshot = [&snapshot_steps](int t) {
    return std::find(snapshot_steps.begin(), snapshot_steps.end(), t) != snapshot_steps.end();
  };
  auto snapshot_from_codes = [&](int t, const std::vector<std::uint64_t>& codes) {
    SolutionSet s;
    s.n = n;
    s.m = t;
    s.codes = codes;
    out.snapshots.emplace_back(t, std::move(s));
  };

  std::vector<std::uint64_t> words;   // dense regime: one bit per codeword
  std::vector<std::uint64_t> codes;   // sparse regime: sorted survivor list
  bool dense = true;
  bool full_cube = true;  // S_0 before any constraint is applied
  std::uint64_t count = cube;

  auto extract_codes = [&]() {
    std::vector<std::uint64_t> result;
    result.reserve(std::size_t(count));
    if (full_cube) {
      for (std::uint64_t c = 0; c < cube; ++c) result.push_back(c);
    } else {
      for (std::uint64_t c = 0; c < cube; ++c)
        if (words[c >> 6] & (std::uint64_t(1) << (c & 63))) result.push_back(c);
    }
    return result;
  };

  if (observer) observer(0, SurvivorView(n, count, nullptr, nullptr));
  if (wants_snapshot(0)) snapshot_from_codes(0, extract_codes());

  const std::vector<double> col = detail::transpose_constraints(inst);

  for (int t = 1; t <= m; ++t) {
    const double* row = inst.constraints.data() + std::size_t(t - 1) * std::size_t(n);
    if (dense && count >= sparse_below) {
      if (full_cube) {
        words.assign(std::size_t((cube + 63) >> 6), ~std::uint64_t(0));
        if (n < 6) words[0] = cube == 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << cube) - 1);
        full_cube = false;
      }
      // One Gray pass of the full cube per constraint, clearing failures.
      // Shards own disjoint 64-aligned bit ranges, so passes parallelize
      // without contention and independently of the worker count.
      const int k = detail::shard_bits(n, workers, 6);
      const int low_bits = n - k;
      const int shards = 1 << k;
      std::vector<std::uint64_t> removed(std::size_t(shards), 0);
      auto run_shard = [&](int s) {
        const std::uint64_t base = std::uint64_t(s) << low_bits;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += ((base >> j) & 1u) ? row[j] : -row[j];
        std::uint64_t code = base;
        std::uint64_t gone = 0;
        auto drop_if_outside = [&](std::uint64_t c, double dval) {
          std::uint64_t& w = words[c >> 6];
          const std::uint64_t bit = std::uint64_t(1) << (c & 63);
          if ((w & bit) && std::fabs(dval) > threshold) {
            w &= ~bit;
            ++gone;
          }
        };
        drop_if_outside(code, dot);
        const std::uint64_t steps = std::uint64_t(1) << low_bits;
        for (std::uint64_t kk = 1; kk < steps; ++kk) {
          const int j = std::countr_zero(kk);
          code ^= std::uint64_t(1) << j;
          dot += (((code >> j) & 1u) ? 2.0 : -2.0) * row[j];
          drop_if_outside(code, dot);
        }
        removed[std::size_t(s)] = gone;
      };
      if (shards == 1) {
        run_shard(0);
      } else {
        std::vector<std::thread> pool;
        const unsigned used = std::min<unsigned>(workers, unsigned(shards));
        for (unsigned w = 0; w < used; ++w)
          pool.emplace_back([&, w] {
            for (int s = int(w); s < shards; s += int(used)) run_shard(s);
          });
        for (auto& th : pool) th.join();
      }
      for (std::uint64_t gone : removed) count -= gone;
      if (count < sparse_below) {
        codes = extract_codes();
        words.clear();
        words.shrink_to_fit();
        dense = false;
      }
    } else {
      if (dense) {  // cube so small it never met the dense threshold
        codes = extract_codes();
        full_cube = false;
        dense = false;
      }
      std::vector<std::uint64_t> next;
      next.reserve(codes.size());
      for (std::uint64_t c : codes) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += ((c >> j) & 1u) ? row[j] : -row[j];
        if (std::fabs(dot) <= threshold) next.push_back(c);
      }
      codes = std::move(next);
      count = codes.size();
    }
    out.cardinality.push_back(count);
    if (observer)
      observer(t, SurvivorView(n, count, dense ? &words : nullptr, dense ? nullptr : &codes));
    if (wants_snapshot(t)) {
      if (dense)
        snapshot_from_codes(t, extract_codes());
      else
        snapshot_from_codes(t, codes);
    }
  }
  return out;
}

// Count of solutions at each overlap value with a reference configuration.
inline std::map<int, std::uint64_t> overlap_histogram(const SolutionSet& s,
                                                      const SpinConfig& reference) {
  reference.validate();
  if (reference.n != s.n)
    throw std::invalid_argument("overlap_histogram: reference dimension mismatch");
  std::map<int, std::uint64_t> hist;
  for (std::uint64_t code : s.codes)
    ++hist[s.n - 2 * std::popcount(code ^ reference.code)];
  return hist;
}

struct NearestOther {
  int distance = 0;
  std::uint64_t witness = 0;
};

// Minimum Hamming distance from sigma to any other solution, with a witness.
// Antipodal closure guarantees a result whenever sigma is in the set.
inline std::optional<NearestOther> nearest_other(const SolutionSet& s, const SpinConfig& sigma) {
  sigma.validate();
  if (sigma.n != s.n) throw std::invalid_argument("nearest_other: dimension mismatch");
  if (!s.contains(sigma.code)) throw std::invalid_argument("nearest_other: sigma not in set");
  std::optional<NearestOther> best;
  for (std::uint64_t code : s.codes) {
    if (code == sigma.code) continue;
    const int d = std::popcount(code ^ sigma.code);
    if (!best || d < best->distance) best = NearestOther{d, code};
  }
  return best;
}

}  // namespace symperc::solver
