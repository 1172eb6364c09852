#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "symperc/analytic.hpp"
#include "symperc/solver.hpp"

namespace symperc::process {

using sampler::Instance;
using solver::SolutionSet;
using solver::SurvivorView;

struct StepRecord {
  int t = 0;
  std::uint64_t cardinality = 0;
  std::optional<double> q;  // log(|S_t| / E|S_t|), absent once the set is empty
  std::optional<double> y;  // (|S_t|/|S_{t-1}| - p)/p, absent at t=0 and past emptiness
  std::optional<double> regularity_ratio;
};

struct ProcessTrace {
  int n = 0;
  double kappa = 1.0;
  std::vector<StepRecord> steps;  // t = 0..m
  std::optional<int> first_empty_step;
};

namespace detail {

// Empirical (1 - 10^-3) quantile of |overlap| values, nearest-rank.
inline double overlap_quantile(std::vector<int>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  const std::size_t rank = std::size_t(std::ceil(0.999 * double(m)));
  return double(values[std::min(rank, m) - 1]);
}

inline double ratio_from_quantile(double quantile, int n, double q_t) {
  return quantile / (std::sqrt(double(n)) * std::sqrt(std::fabs(q_t) + std::log(double(n))));
}

}  // namespace detail

// Measured analogue of the regularity constant: the empirical 1-10^-3
// quantile of |<sigma1, sigma2>| over uniform distinct pairs from s_t, scaled
// by sqrt(n) sqrt(|Q_t| + log n). Exhaustive over all pairs when cheap.
inline double regularity_ratio(const SolutionSet& s_t, double q_t, std::uint64_t pair_budget,
                               RandomStream& rng) {
  if (s_t.size() < 2) throw std::invalid_argument("regularity_ratio: need at least 2 solutions");
  if (pair_budget == 0) throw std::invalid_argument("regularity_ratio: pair budget must be > 0");
  const std::uint64_t count = s_t.size();
  std::vector<int> overlaps;
  if (count * count <= pair_budget) {
    overlaps.reserve(std::size_t(count * (count - 1) / 2));
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j)
        overlaps.push_back(
            std::abs(s_t.n - 2 * std::popcount(s_t.codes[i] ^ s_t.codes[j])));
  } else {
    overlaps.reserve(std::size_t(pair_budget));
    for (std::uint64_t k = 0; k < pair_budget; ++k) {
      const std::uint64_t i = rng.below(count);
      std::uint64_t j = rng.below(count - 1);
      if (j >= i) ++j;
      overlaps.push_back(std::abs(s_t.n - 2 * std::popcount(s_t.codes[i] ^ s_t.codes[j])));
    }
  }
  return detail::ratio_from_quantile(detail::overlap_quantile(overlaps), s_t.n, q_t);
}

// Same statistic over a filtration survivor view (sampled pairs only).
inline double regularity_ratio(const SurvivorView& view, double q_t, std::uint64_t pair_budget,
                               RandomStream& rng) {
  if (view.size() < 2) throw std::invalid_argument("regularity_ratio: need at least 2 solutions");
  std::vector<int> overlaps;
  overlaps.reserve(std::size_t(pair_budget));
  for (std::uint64_t k = 0; k < pair_budget; ++k) {
    const std::uint64_t a = view.sample(rng);
    std::uint64_t b = a;
    while (b == a) b = view.sample(rng);
    overlaps.push_back(std::abs(view.dimension() - 2 * std::popcount(a ^ b)));
  }
  return detail::ratio_from_quantile(detail::overlap_quantile(overlaps), view.dimension(), q_t);
}

struct TraceOptions {
  std::uint64_t regularity_pair_budget = 0;  // 0 disables the per-step statistic
  RandomStream* rng = nullptr;               // required when the budget is set
  unsigned workers = 1;
};

// Runs the filtration and records Q_t and Y_t per their defining equations,
// using the exact normalizer E|S_t| = 2^n p(kappa)^t. Q_0 = 0 exactly; the
// trace stops recording Q and Y at the first empty S_t.
inline ProcessTrace trace(const Instance& inst, const TraceOptions& options = {}) {
  if (options.regularity_pair_budget > 0 && options.rng == nullptr)
    throw std::invalid_argument("trace: regularity sampling needs an RNG");
  ProcessTrace result;
  result.n = inst.n;
  result.kappa = inst.kappa;
  const double log_p = std::log(analytic::gauss_p(inst.kappa));

  solver::StepObserver observer;
  std::vector<std::optional<double>> ratios(std::size_t(inst.m) + 1);
  if (options.regularity_pair_budget > 0) {
    observer = [&](int t, const SurvivorView& view) {
      if (view.size() < 2) return;
      const double q_t = std::log(std::ldexp(double(view.size()), -inst.n)) - double(t) * log_p;
      ratios[std::size_t(t)] =
          regularity_ratio(view, q_t, options.regularity_pair_budget, *options.rng);
    };
  }
  const solver::Filtration filtration =
      solver::enumerate_filtration(inst, {}, options.workers, observer);

  result.steps.reserve(filtration.cardinality.size());
  std::uint64_t prev_card = 0;
  for (int t = 0; t < int(filtration.cardinality.size()); ++t) {
    const std::uint64_t card = filtration.cardinality[std::size_t(t)];
    StepRecord rec;
    rec.t = t;
    rec.cardinality = card;
    if (card == 0 && !result.first_empty_step) result.first_empty_step = t;
    if (!result.first_empty_step) {
      // ldexp keeps |S_t| / 2^n exact, so Q_0 is exactly zero.
      rec.q = std::log(std::ldexp(double(card), -inst.n)) - double(t) * log_p;
      if (t > 0) {
        const double p = analytic::gauss_p(inst.kappa);
        rec.y = (double(card) / double(prev_card) - p) / p;
      }
      rec.regularity_ratio = ratios[std::size_t(t)];
    }
    result.steps.push_back(rec);
    prev_card = card;
  }
  return result;
}

struct MartingaleEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

// Holding S_t fixed (the instance is the prefix), draws fresh independent
// Gaussian constraints and measures Y_{t+1}. The exact conditional mean is 0
// since E[|S_{t+1}| given S_t] = p(kappa) |S_t|.
inline MartingaleEstimate martingale_check(const Instance& instance_prefix,
                                           std::uint64_t fresh_constraint_budget,
                                           RandomStream& rng) {
  if (fresh_constraint_budget == 0)
    throw std::invalid_argument("martingale_check: budget must be > 0");
  const SolutionSet s_t = solver::enumerate(instance_prefix);
  if (s_t.codes.empty()) throw std::invalid_argument("martingale_check: S_t is empty");
  const int n = instance_prefix.n;
  const double p = analytic::gauss_p(instance_prefix.kappa);
  const double threshold = instance_prefix.kappa * std::sqrt(double(n));
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t k = 0; k < fresh_constraint_budget; ++k) {
    for (double& v : x) v = rng.normal();
    std::uint64_t kept = 0;
    for (std::uint64_t code : s_t.codes) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += ((code >> j) & 1u) ? x[std::size_t(j)] : -x[std::size_t(j)];
      if (std::fabs(dot) <= threshold) ++kept;
    }
    const double y = (double(kept) / double(s_t.codes.size()) - p) / p;
    const double delta = y - mean;
    mean += delta / double(k + 1);
    m2 += delta * (y - mean);
  }
  MartingaleEstimate est;
  est.samples = fresh_constraint_budget;
  est.mean = mean;
  est.standard_error =
      std::sqrt(m2 / double(fresh_constraint_budget - 1) / double(fresh_constraint_budget));
  return est;
}

struct StoppingSummary {
  std::uint64_t crossed = 0;
  double fraction = 0.0;
  std::optional<int> earliest;
  std::optional<double> median_time;
};

struct TailParams {
  double c3 = 0.0;           // threshold constant for tau_Y; <= 0 measures it from the data
  int survival_points = 256;  // downsampled survival-curve resolution
};

struct TailReport {
  int n = 0;
  double kappa = 1.0;
  std::uint64_t trace_count = 0;
  std::uint64_t pooled_count = 0;
  std::vector<std::pair<double, double>> survival;  // (x, empirical P(X > x))
  double fit_lo = 0.0, fit_hi = 0.0;
  double tail_rate = 0.0;   // lambda in S(x) ~ exp(intercept - lambda x) over the bulk
  double intercept = 0.0;
  double r_squared = 0.0;
  double c3_used = 0.0;
  StoppingSummary tau_y;
  StoppingSummary tau_q;
};

// Pools the normalized increments x_t = |Y_t| / sqrt((|Q_{t-1}| + log n)/n)
// across traces, reports the empirical survival function with a fitted
// exponential tail rate, and summarizes first crossings of the |Y| and |Q|
// stopping thresholds with measured constants.
inline TailReport tail_diagnostic(const std::vector<ProcessTrace>& traces,
                                  const TailParams& params = {}) {
  if (traces.size() < 100) throw std::invalid_argument("tail_diagnostic: need >= 100 traces");
  const int n = traces.front().n;
  const double kappa = traces.front().kappa;
  for (const ProcessTrace& tr : traces)
    if (tr.n != n) throw std::invalid_argument("tail_diagnostic: mixed dimensions");

  const double log_n = std::log(double(n));
  std::vector<double> xs;
  for (const ProcessTrace& tr : traces) {
    for (std::size_t t = 1; t < tr.steps.size(); ++t) {
      const auto& prev = tr.steps[t - 1];
      const auto& cur = tr.steps[t];
      if (!prev.q || !cur.y) continue;
      xs.push_back(std::fabs(*cur.y) /
                   std::sqrt((std::fabs(*prev.q) + log_n) / double(n)));
    }
  }
  if (xs.size() < 100) throw std::invalid_argument("tail_diagnostic: too few pooled increments");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size();

  TailReport report;
  report.n = n;
  report.kappa = kappa;
  report.trace_count = traces.size();
  report.pooled_count = m;

  const int points = std::min<int>(params.survival_points, int(m));
  for (int j = 0; j < points; ++j) {
    const std::size_t idx = std::size_t(j) * (m - 1) / std::size_t(std::max(points - 1, 1));
    report.survival.emplace_back(xs[idx], double(m - idx - 1) / double(m));
  }

  // Least-squares line through (x, log S(x)) over the bulk of the curve.
  const double lo = xs[std::size_t(0.5 * double(m - 1))];
  const double hi = xs[std::size_t(0.995 * double(m - 1))];
  report.fit_lo = lo;
  report.fit_hi = hi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::uint64_t cnt = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double surv = double(m - k - 1) / double(m);
    if (xs[k] < lo || xs[k] > hi || surv <= 0.0) continue;
    const double ls = std::log(surv);
    sx += xs[k];
    sy += ls;
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ls;
    syy += ls * ls;
    ++cnt;
  }
  if (cnt >= 2) {
    const double denom = double(cnt) * sxx - sx * sx;
    const double slope = (double(cnt) * sxy - sx * sy) / denom;
    report.tail_rate = -slope;
    report.intercept = (sy - slope * sx) / double(cnt);
    const double ss_tot = syy - sy * sy / double(cnt);
    const double ss_res = ss_tot - slope * (sxy - sx * sy / double(cnt));
    report.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }

  report.c3_used = params.c3 > 0.0 ? params.c3 : xs[std::size_t(0.999 * double(m - 1))] / log_n;
  const double y_cross = report.c3_used * log_n;
  const double q_cross = log_n * log_n;
  std::vector<int> tau_y_times, tau_q_times;
  for (const ProcessTrace& tr : traces) {
    std::optional<int> ty, tq;
    for (const StepRecord& rec : tr.steps) {
      if (!tq && rec.q && std::fabs(*rec.q) >= q_cross) tq = rec.t;
      if (!ty && rec.y && rec.q) {
        const auto& prev = tr.steps[std::size_t(rec.t - 1)];
        if (prev.q) {
          const double x =
              std::fabs(*rec.y) / std::sqrt((std::fabs(*prev.q) + log_n) / double(n));
          if (x >= y_cross) ty = rec.t;
        }
      }
    }
    if (ty) tau_y_times.push_back(*ty);
    if (tq) tau_q_times.push_back(*tq);
  }
  auto summarize = [&](std::vector<int>& times) {
    StoppingSummary s;
    s.crossed = times.size();
    s.fraction = double(times.size()) / double(traces.size());
    if (!times.empty()) {
      std::sort(times.begin(), times.end());
      s.earliest = times.front();
      s.median_time = double(times[times.size() / 2]);
    }
    return s;
  };
  report.tau_y = summarize(tau_y_times);
  report.tau_q = summarize(tau_q_times);
  return report;
}

}  // namespace symperc::process
