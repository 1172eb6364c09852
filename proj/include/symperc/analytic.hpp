#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "symperc/math.hpp"

namespace symperc::analytic {

struct ModelParams {
  double kappa = 1.0;  // constraint half-width
  double alpha = 1.0;  // constraint density m/n

  void validate() const {
    if (!(kappa > 0.0)) throw std::domain_error("ModelParams: kappa must be > 0");
    if (!(alpha > 0.0)) throw std::domain_error("ModelParams: alpha must be > 0");
  }
};

enum class CurveKind { FreeEnergyGap, FirstMomentExponent };

// Sampled analytic curve with located roots and critical points.
struct CurveTable {
  CurveKind kind = CurveKind::FreeEnergyGap;
  ModelParams params;
  std::vector<std::pair<double, double>> points;  // (beta, value), beta strictly increasing
  std::vector<double> roots;
  std::vector<double> critical_points;
  double root_tolerance = 1e-9;
};

struct Assumption1Report {
  ModelParams params;
  double second_deriv_at_half = 0.0;
  std::vector<double> critical_points_in_open_interval;
  bool holds = false;
  std::string warning;  // set when the second derivative is within tolerance of zero
};

// Shannon entropy in nats, H(x) = -x log x - (1-x) log(1-x); endpoints are 0.
inline double entropy(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::domain_error("entropy: beta must be in [0,1]");
  if (beta == 0.0 || beta == 1.0) return 0.0;
  return -beta * std::log(beta) - (1.0 - beta) * std::log(1.0 - beta);
}

// p(kappa) = Pr(|Z| <= kappa) = erf(kappa / sqrt(2)) for standard normal Z.
inline double gauss_p(double kappa) {
  if (!(kappa > 0.0)) throw std::domain_error("gauss_p: kappa must be > 0");
  return std::erf(kappa / kSqrt2);
}

// Bivariate normal density at (x, y) with unit variances and correlation rho.
inline double binorm_pdf(double x, double y, double rho) {
  const double s2 = 1.0 - rho * rho;
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * s2)) /
         (2.0 * kPi * std::sqrt(s2));
}

// q_kappa(beta) = Pr(|Z1| <= kappa, |Z2| <= kappa) at correlation rho = 2 beta - 1.
// Computed by 1-D adaptive quadrature of the conditional-slice integrand
//   phi(z) * [Phi((kappa - rho z)/s) - Phi((-kappa - rho z)/s)],  s = sqrt(1 - rho^2),
// over [-kappa, kappa]; degenerate |rho| -> 1 collapses to gauss_p(kappa).
// As |rho| -> 1 the slice develops width-s transition layers at the interval
// endpoints, thinner than the quadrature's node spacing, so the integral is
// panelled at the layer scale before going adaptive.
inline double bivariate_q(double kappa, double beta) {
  if (!(kappa > 0.0)) throw std::domain_error("bivariate_q: kappa must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::domain_error("bivariate_q: beta must be in [0,1]");
  const double rho = 2.0 * beta - 1.0;
  if (std::fabs(rho) >= 1.0 - 1e-12) return gauss_p(kappa);
  const double s = std::sqrt(1.0 - rho * rho);
  auto slice = [kappa, rho, s](double z) {
    return norm_pdf(z) * (norm_cdf((kappa - rho * z) / s) - norm_cdf((-kappa - rho * z) / s));
  };
  const double layer = std::min(0.5 * kappa, 50.0 * s);
  const double cuts[5] = {-kappa, -kappa + layer, 0.0, kappa - layer, kappa};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) total += integrate(slice, cuts[i], cuts[i + 1], 0.25e-13);
  return total;
}

// d/dbeta of q_kappa via Plackett's identity: for the symmetric rectangle,
//   dq/drho = 2 [phi2(k,k;rho) - phi2(k,-k;rho)],   drho/dbeta = 2.
inline double bivariate_q_dbeta(double kappa, double beta) {
  if (!(kappa > 0.0)) throw std::domain_error("bivariate_q_dbeta: kappa must be > 0");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::domain_error("bivariate_q_dbeta: beta must be in (0,1)");
  const double rho = 2.0 * beta - 1.0;
  return 4.0 * (binorm_pdf(kappa, kappa, rho) - binorm_pdf(kappa, -kappa, rho));
}

// Annealed pair free energy F_alpha(beta) = H(beta) + alpha log q_kappa(beta).
// Endpoints take the one-sided limit H = 0, q = p(kappa).
inline double free_energy(const ModelParams& params, double beta) {
  params.validate();
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::domain_error("free_energy: beta must be in [0,1]");
  if (beta == 0.0 || beta == 1.0) return params.alpha * std::log(gauss_p(params.kappa));
  return entropy(beta) + params.alpha * std::log(bivariate_q(params.kappa, beta));
}

// G(beta) = F_alpha(beta) - alpha log p(kappa); G(0) = G(1) = 0 exactly.
inline double free_energy_gap(const ModelParams& params, double beta) {
  params.validate();
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::domain_error("free_energy_gap: beta must be in [0,1]");
  if (beta == 0.0 || beta == 1.0) return 0.0;
  const double p = gauss_p(params.kappa);
  return entropy(beta) + params.alpha * (std::log(bivariate_q(params.kappa, beta)) - std::log(p));
}

// Critical constraint density alpha_c(kappa) = -log 2 / log p(kappa).
inline double alpha_c(double kappa) { return -kLn2 / std::log(gauss_p(kappa)); }

// d/dbeta of F_alpha using H'(beta) = log((1-beta)/beta) and the Plackett
// derivative of q.
inline double free_energy_dbeta(const ModelParams& params, double beta) {
  params.validate();
  if (!(beta > 0.0 && beta < 1.0))
    throw std::domain_error("free_energy_dbeta: beta must be in (0,1)");
  return std::log((1.0 - beta) / beta) +
         params.alpha * bivariate_q_dbeta(params.kappa, beta) / bivariate_q(params.kappa, beta);
}

// F''_alpha(1/2) in closed form: H''(1/2) = -4, q'(1/2) = 0, and
// q''(1/2) = 16 kappa^2 phi(kappa)^2, so
//   F''(1/2) = -4 + 16 alpha kappa^2 phi(kappa)^2 / p(kappa)^2.
inline double free_energy_d2_at_half(const ModelParams& params) {
  params.validate();
  const double pdf = norm_pdf(params.kappa);
  const double p = gauss_p(params.kappa);
  return -4.0 + 16.0 * params.alpha * params.kappa * params.kappa * pdf * pdf / (p * p);
}

namespace detail {

// Bisection for a bracketed root of f, to absolute x-tolerance.
template <class F>
inline double bisect(const F& f, double lo, double hi, double f_lo, double x_tol) {
  for (int iter = 0; iter < 200 && (hi - lo) > x_tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Unique zero of the gap G in (0, 1/2): sign-change scan then bisection.
// Requires alpha < alpha_c(kappa) so that G(1/2) > 0.
inline double beta_c(const ModelParams& params) {
  params.validate();
  if (!(params.alpha < alpha_c(params.kappa)))
    throw std::invalid_argument("beta_c: requires alpha < alpha_c(kappa)");
  auto gap = [&params](double beta) { return free_energy_gap(params, beta); };
  constexpr int kScanPoints = 10000;
  constexpr double kLeft = 1e-6;
  const double right = 0.5 - 1e-6;
  double prev_x = kLeft;
  double prev_g = gap(prev_x);
  for (int i = 1; i <= kScanPoints; ++i) {
    const double x = kLeft + (right - kLeft) * double(i) / double(kScanPoints);
    const double g = gap(x);
    if (prev_g < 0.0 && g >= 0.0)
      return detail::bisect(gap, prev_x, x, prev_g, 1e-10);
    prev_x = x;
    prev_g = g;
  }
  std::ostringstream oss;
  oss << "beta_c: no sign change on scan grid (kappa=" << params.kappa
      << ", alpha=" << params.alpha << "); G samples:";
  for (int i = 0; i <= 8; ++i) {
    const double x = kLeft + (right - kLeft) * double(i) / 8.0;
    oss << " G(" << x << ")=" << gap(x);
  }
  throw std::runtime_error(oss.str());
}

// Counts critical points of F_alpha in (0, 1/2) by sign changes of the
// closed-form derivative on a uniform grid; refines the grid when it is too
// coarse to separate sign changes (or finds none despite F''(1/2) < 0, which
// forces at least one since F' -> -infinity at 0+).
inline Assumption1Report check_assumption1(const ModelParams& params, int grid_size) {
  params.validate();
  if (grid_size < 1000) throw std::domain_error("check_assumption1: grid_size must be >= 1000");
  Assumption1Report report;
  report.params = params;
  report.second_deriv_at_half = free_energy_d2_at_half(params);

  auto deriv = [&params](double beta) { return free_energy_dbeta(params, beta); };
  constexpr int kMaxRefinements = 6;
  int grid = grid_size;
  for (int attempt = 0;; ++attempt) {
    report.critical_points_in_open_interval.clear();
    bool adjacent_changes = false;
    const double step = 0.5 / double(grid + 1);
    double prev_x = step;
    double prev_d = deriv(prev_x);
    int last_change_cell = -2;
    for (int i = 2; i <= grid; ++i) {
      const double x = step * double(i);
      const double d = deriv(x);
      if ((prev_d < 0.0) != (d < 0.0)) {
        if (last_change_cell == i - 1) adjacent_changes = true;
        last_change_cell = i;
        report.critical_points_in_open_interval.push_back(
            detail::bisect(deriv, prev_x, x, prev_d, 1e-12));
      }
      prev_x = x;
      prev_d = d;
    }
    const bool missed_forced_change =
        report.critical_points_in_open_interval.empty() && report.second_deriv_at_half < 0.0;
    if (!adjacent_changes && !missed_forced_change) break;
    if (attempt >= kMaxRefinements)
      throw std::runtime_error("check_assumption1: grid refinement cap reached at " +
                               std::to_string(grid) + " points");
    grid *= 2;
  }

  constexpr double kSecondDerivTol = 1e-9;
  if (std::fabs(report.second_deriv_at_half) <= kSecondDerivTol)
    report.warning = "F''(1/2) within tolerance of zero; assumption holds vacuously";
  report.holds = (report.second_deriv_at_half >= 0.0) ||
                 (report.critical_points_in_open_interval.size() == 1);
  return report;
}

// (1/N) log of the planted-model expected number of solutions at a fixed
// overlap with the planted vector:
//   (1/N) [ log C(N, (N+m)/2) + alpha N log(q_kappa(1/2 + m/2N) / p(kappa)) ].
inline double first_moment_overlap(int n, long long m_overlap, const ModelParams& params) {
  params.validate();
  if (n <= 0) throw std::domain_error("first_moment_overlap: N must be positive");
  if (m_overlap > n || m_overlap < -n)
    throw std::domain_error("first_moment_overlap: |overlap| must be <= N");
  if (((m_overlap % 2 + 2) % 2) != (n % 2))
    throw std::domain_error("first_moment_overlap: overlap parity must match N");
  const std::uint64_t k = std::uint64_t((n + m_overlap) / 2);
  const double beta = 0.5 + double(m_overlap) / (2.0 * double(n));
  const double log_count = log_binomial(std::uint64_t(n), k);
  const double log_ratio =
      std::log(bivariate_q(params.kappa, beta)) - std::log(gauss_p(params.kappa));
  return (log_count + params.alpha * double(n) * log_ratio) / double(n);
}

// Margin of the joint-survival drop when m coordinates disagree:
//   p(kappa) - q_kappa(1 - m/(2N)).  Zero at m = 0.
inline double boundary_gap(int n, int m_flip, double kappa) {
  if (n <= 0) throw std::domain_error("boundary_gap: N must be positive");
  if (m_flip < 0 || m_flip > n) throw std::domain_error("boundary_gap: m must be in [0, N]");
  const double beta = 1.0 - double(m_flip) / (2.0 * double(n));
  return gauss_p(kappa) - bivariate_q(kappa, beta);
}

// Gap curve on a uniform grid over (0, 1/2], with the located root and the
// interior critical points.
inline CurveTable free_energy_gap_curve(const ModelParams& params, int grid_points = 2000) {
  params.validate();
  if (grid_points < 2) throw std::domain_error("free_energy_gap_curve: need >= 2 points");
  CurveTable table;
  table.kind = CurveKind::FreeEnergyGap;
  table.params = params;
  table.points.reserve(std::size_t(grid_points));
  for (int i = 1; i <= grid_points; ++i) {
    const double beta = 0.5 * double(i) / double(grid_points);
    table.points.emplace_back(beta, free_energy_gap(params, beta));
  }
  if (params.alpha < alpha_c(params.kappa)) table.roots.push_back(beta_c(params));
  const Assumption1Report a1 = check_assumption1(params, 4000);
  table.critical_points = a1.critical_points_in_open_interval;
  return table;
}

// First-moment overlap exponent as a curve in beta = 1/2 + m/2N over the
// admissible overlaps of an N-dimensional cube.
inline CurveTable first_moment_curve(const ModelParams& params, int n) {
  params.validate();
  if (n <= 0) throw std::domain_error("first_moment_curve: N must be positive");
  CurveTable table;
  table.kind = CurveKind::FirstMomentExponent;
  table.params = params;
  for (long long m = -n; m <= n; m += 2) {
    const double beta = 0.5 + double(m) / (2.0 * double(n));
    table.points.emplace_back(beta, first_moment_overlap(n, m, params));
  }
  return table;
}

}  // namespace symperc::analytic
