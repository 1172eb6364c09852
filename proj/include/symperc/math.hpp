#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace symperc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Standard normal CDF through erfc; accurate in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Inverse standard normal CDF: Acklam's rational approximation refined by one
// Halley step against erfc, giving close to full double precision.
inline double norm_cdf_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_cdf_inv: p must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

// log C(n, k) via log-gamma; usable far beyond 64-bit factorial range.
inline double log_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) throw std::domain_error("log_binomial: k > n");
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule (nodes for [-1,1]).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gauss_kronrod_15(const F& f, double a, double b, double& kronrod, double& err) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double fc = f(mid);
  double res_g = kGk15WeightsG[3] * fc;
  double res_k = kGk15WeightsK[7] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    const double fsum = f(mid - dx) + f(mid + dx);
    res_k += kGk15WeightsK[i] * fsum;
    if (i % 2 == 1) res_g += kGk15WeightsG[i / 2] * fsum;
  }
  kronrod = res_k * half;
  err = std::fabs((res_k - res_g) * half);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration to an absolute tolerance. The integrand
// must be finite on [a, b]; interval bisection handles sharp but smooth
// features (e.g. near-degenerate correlation in rectangle probabilities).
template <class F>
inline double integrate(const F& f, double a, double b, double abs_tol = 1e-13) {
  if (!(a <= b)) throw std::domain_error("integrate: a > b");
  if (a == b) return 0.0;
  struct Interval {
    double a, b, tol;
  };
  std::vector<Interval> stack{{a, b, abs_tol}};
  double total = 0.0;
  int evaluations = 0;
  constexpr int kMaxEvaluations = 200000;
  while (!stack.empty()) {
    Interval iv = stack.back();
    stack.pop_back();
    double value, err;
    detail::gauss_kronrod_15(f, iv.a, iv.b, value, err);
    evaluations += 15;
    const double width = iv.b - iv.a;
    if (err <= iv.tol || width <= 1e-15 * (std::fabs(iv.a) + std::fabs(iv.b) + 1.0)) {
      total += value;
      continue;
    }
    if (evaluations > kMaxEvaluations)
      throw std::runtime_error("integrate: evaluation budget exhausted (tol " +
                               std::to_string(abs_tol) + ")");
    const double m = 0.5 * (iv.a + iv.b);
    stack.push_back({iv.a, m, 0.5 * iv.tol});
    stack.push_back({m, iv.b, 0.5 * iv.tol});
  }
  return total;
}

}  // namespace symperc
