#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "symperc/analytic.hpp"

using namespace symperc;
using namespace symperc::analytic;

TEST_CASE("entropy endpoints and reference values", "[analytic]") {
  REQUIRE(entropy(0.5) == Catch::Approx(std::log(2.0)).margin(1e-15));
  REQUIRE(entropy(0.0) == 0.0);
  REQUIRE(entropy(1.0) == 0.0);
  // independent high-precision evaluation of -(1/4)log(1/4) - (3/4)log(3/4)
  const long double direct =
      -0.25L * std::log(0.25L) - 0.75L * std::log(0.75L);
  REQUIRE(entropy(0.25) == Catch::Approx(double(direct)).margin(1e-15));
  REQUIRE(entropy(0.25) == Catch::Approx(0.56233514461880835).margin(1e-14));
  REQUIRE_THROWS_AS(entropy(-0.1), std::domain_error);
  REQUIRE_THROWS_AS(entropy(1.1), std::domain_error);
}

TEST_CASE("gauss_p against quadrature oracle", "[analytic]") {
  REQUIRE(gauss_p(1.0) == Catch::Approx(oracles::gauss_p_quadrature(1.0)).margin(1e-14));
  REQUIRE(gauss_p(1.0) == Catch::Approx(0.6826895).margin(1e-6));
  for (double kappa : {0.1, 0.5, 2.0, 3.5})
    REQUIRE(gauss_p(kappa) ==
            Catch::Approx(oracles::gauss_p_quadrature(kappa)).margin(1e-14));
  REQUIRE(gauss_p(40.0) == 1.0);
  REQUIRE(gauss_p(1e-8) < 1e-7);
  REQUIRE_THROWS_AS(gauss_p(0.0), std::domain_error);
  REQUIRE_THROWS_AS(gauss_p(-1.0), std::domain_error);
}

TEST_CASE("bivariate_q special points and 2-D quadrature oracle", "[analytic]") {
  const double p1 = gauss_p(1.0);
  REQUIRE(bivariate_q(1.0, 0.5) == Catch::Approx(p1 * p1).margin(1e-12));
  for (double kappa : {0.5, 1.0, 2.0}) {
    REQUIRE(bivariate_q(kappa, 0.0) == gauss_p(kappa));
    REQUIRE(bivariate_q(kappa, 1.0) == gauss_p(kappa));
  }
  REQUIRE(bivariate_q(1.0, 0.75) ==
          Catch::Approx(oracles::bivariate_q_tensor(1.0, 0.5)).margin(1e-9));
  REQUIRE(bivariate_q(2.0, 0.9) ==
          Catch::Approx(oracles::bivariate_q_tensor(2.0, 0.8)).margin(1e-9));
  REQUIRE(bivariate_q(0.5, 0.2) ==
          Catch::Approx(oracles::bivariate_q_tensor(0.5, -0.6)).margin(1e-9));
  REQUIRE_THROWS_AS(bivariate_q(1.0, -0.1), std::domain_error);
  REQUIRE_THROWS_AS(bivariate_q(0.0, 0.5), std::domain_error);
}

TEST_CASE("bivariate_q near degenerate correlation", "[analytic]") {
  // reference values from 30-digit arbitrary-precision quadrature
  REQUIRE(bivariate_q(1.0, 0.99995) ==
          Catch::Approx(0.67995914489148312).margin(1e-12));
  REQUIRE(bivariate_q(1.0, 0.00005) ==
          Catch::Approx(0.67995914489148312).margin(1e-12));
  REQUIRE(bivariate_q(1.0, 0.995) == Catch::Approx(0.65538605397016051).margin(1e-12));
  REQUIRE(bivariate_q(1.0, 0.9995) == Catch::Approx(0.67405537614471252).margin(1e-12));
  REQUIRE(bivariate_q(2.0, 0.99995) == Catch::Approx(0.95389052851615409).margin(1e-12));
  REQUIRE(bivariate_q(0.5, 0.99995) == Catch::Approx(0.37895226591691439).margin(1e-12));
  REQUIRE(bivariate_q(1.0, 0.9999999) == Catch::Approx(0.68256738729620369).margin(1e-12));
}

TEST_CASE("symmetry of entropy and bivariate_q under beta -> 1-beta", "[analytic]") {
  for (double kappa : {0.5, 1.0, 2.0}) {
    for (int i = 1; i < 20; ++i) {
      const double beta = double(i) / 20.0;
      REQUIRE(bivariate_q(kappa, beta) ==
              Catch::Approx(bivariate_q(kappa, 1.0 - beta)).margin(1e-12));
      REQUIRE(entropy(beta) == Catch::Approx(entropy(1.0 - beta)).margin(1e-12));
    }
  }
}

TEST_CASE("free energy composition and symmetry", "[analytic]") {
  const ModelParams params{1.0, 1.75};
  // F(1/2) = log 2 + 2 alpha log p
  REQUIRE(free_energy(params, 0.5) ==
          Catch::Approx(std::log(2.0) + 2.0 * params.alpha * std::log(gauss_p(1.0)))
              .margin(1e-12));
  for (double beta : {0.1, 0.25, 0.4})
    REQUIRE(free_energy(params, beta) ==
            Catch::Approx(free_energy(params, 1.0 - beta)).margin(1e-12));
  // composition of independently computed parts at beta = 0.3
  const double oracle = -0.3 * std::log(0.3) - 0.7 * std::log(0.7) +
                        params.alpha * std::log(oracles::bivariate_q_tensor(1.0, -0.4));
  REQUIRE(free_energy(params, 0.3) == Catch::Approx(oracle).margin(1e-9));
}

TEST_CASE("free energy gap values and exact composition at 1/2", "[analytic]") {
  REQUIRE(free_energy_gap({1.0, 1.75}, 0.0) == 0.0);
  REQUIRE(free_energy_gap({1.0, 1.75}, 1.0) == 0.0);
  for (double alpha : {1.69, 1.75, 1.81}) {
    const double expected = std::log(2.0) + alpha * std::log(gauss_p(1.0));
    REQUIRE(free_energy_gap({1.0, alpha}, 0.5) == Catch::Approx(expected).margin(1e-14));
  }
  REQUIRE(free_energy_gap({1.0, 1.81}, 0.5) > 0.0);
  REQUIRE(free_energy_gap({1.0, 1.69}, 0.05) < 0.0);
}

TEST_CASE("alpha_c values and monotonicity", "[analytic]") {
  REQUIRE(alpha_c(1.0) == Catch::Approx(-std::log(2.0) / std::log(0.6826895)).margin(1e-5));
  double prev = 0.0;
  for (double kappa = 0.2; kappa < 3.0; kappa += 0.2) {
    const double ac = alpha_c(kappa);
    REQUIRE(ac > prev);
    prev = ac;
  }
  REQUIRE(alpha_c(5.0) > 1e6);
}

TEST_CASE("beta_c root location, residual, and monotonicity", "[analytic]") {
  const ModelParams params{1.0, 1.69};
  const double root = beta_c(params);
  REQUIRE(std::fabs(free_energy_gap(params, root)) <= 1e-9);

  // dense-grid scan oracle: first sign change of G over 10^6 points
  double bracket = 0.0;
  double prev_g = -1.0;
  for (int i = 1; i <= 1000000; ++i) {
    const double x = 0.5 * double(i) / 1000000.0;
    const double g = free_energy_gap(params, x);
    if (i > 1 && prev_g < 0.0 && g >= 0.0) {
      bracket = x;
      break;
    }
    prev_g = g;
  }
  REQUIRE(root == Catch::Approx(bracket).margin(1e-6));

  // approaching alpha_c from below pushes the root to 1/2
  REQUIRE(beta_c({1.0, alpha_c(1.0) - 1e-6}) > 0.49);

  double prev_root = 0.0;
  for (double alpha : {0.5, 0.9, 1.3, 1.69, 1.75, 1.81}) {
    const double r = beta_c({1.0, alpha});
    REQUIRE(r > prev_root);
    prev_root = r;
  }
  REQUIRE_THROWS_AS(beta_c({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("plackett derivative matches central finite differences", "[analytic]") {
  const double h = 1e-6;
  for (double kappa : {0.5, 1.0, 2.0}) {
    for (double beta : {0.05, 0.2, 0.35, 0.5, 0.8}) {
      const double fd = (bivariate_q(kappa, beta + h) - bivariate_q(kappa, beta - h)) / (2.0 * h);
      REQUIRE(bivariate_q_dbeta(kappa, beta) == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("assumption-1 checker on the reference point", "[analytic]") {
  const Assumption1Report report = check_assumption1({1.0, 1.75}, 2000);
  REQUIRE(report.holds);
  REQUIRE(report.second_deriv_at_half < 0.0);
  REQUIRE(report.critical_points_in_open_interval.size() == 1);
  const double cp = report.critical_points_in_open_interval.front();
  REQUIRE(cp > 0.0);
  REQUIRE(cp < 0.5);
  // the located point is a zero of the closed-form derivative
  REQUIRE(std::fabs(free_energy_dbeta({1.0, 1.75}, cp)) < 1e-7);
  REQUIRE_THROWS_AS(check_assumption1({1.0, 1.75}, 100), std::domain_error);
}

TEST_CASE("closed-form derivative matches finite differences of F", "[analytic]") {
  const ModelParams params{1.0, 1.75};
  const double h = 1e-5;
  for (double beta = 0.05; beta < 0.5; beta += 0.05) {
    const double fd = (free_energy(params, beta + h) - free_energy(params, beta - h)) / (2.0 * h);
    REQUIRE(free_energy_dbeta(params, beta) == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("second derivative at 1/2 matches finite differences of F'", "[analytic]") {
  for (double alpha : {0.5, 1.75, 3.0}) {
    const ModelParams params{1.0, alpha};
    const double h = 1e-5;
    const double fd =
        (free_energy_dbeta(params, 0.5 + h) - free_energy_dbeta(params, 0.5 - h)) / (2.0 * h);
    REQUIRE(free_energy_d2_at_half(params) == Catch::Approx(fd).margin(1e-5));
  }
}

TEST_CASE("assumption-1 vacuous branch when F''(1/2) >= 0", "[analytic]") {
  // above the capacity regime the symmetric point turns into a local minimum
  const Assumption1Report report = check_assumption1({1.0, 3.0}, 2000);
  REQUIRE(report.second_deriv_at_half > 0.0);
  REQUIRE(report.holds);
}

TEST_CASE("first moment overlap endpoints and exact oracle", "[analytic]") {
  const ModelParams params{1.0, 1.0};
  REQUIRE(first_moment_overlap(20, 20, params) == 0.0);
  // the antipode of the planted vector is also always feasible
  REQUIRE(first_moment_overlap(20, -20, params) == 0.0);

  // N=20, overlap 0: exact binomial plus independent quadrature oracles
  const double oracle =
      (std::log(double(oracles::binomial_exact(20, 10))) +
       params.alpha * 20.0 *
           (std::log(oracles::bivariate_q_tensor(1.0, 0.0)) -
            std::log(oracles::gauss_p_quadrature(1.0)))) /
      20.0;
  REQUIRE(first_moment_overlap(20, 0, params) == Catch::Approx(oracle).margin(1e-9));

  REQUIRE_THROWS_AS(first_moment_overlap(20, 3, params), std::domain_error);
  REQUIRE_THROWS_AS(first_moment_overlap(20, 22, params), std::domain_error);
}

TEST_CASE("first moment overlap converges to the gap at fixed beta", "[analytic]") {
  const ModelParams params{1.0, 1.5};
  const double beta = 0.3;  // overlap m = (2 beta - 1) N = -0.4 N
  const double limit = free_energy_gap(params, beta);
  double prev_err = 1e9;
  for (int n : {10, 100, 1000, 10000}) {
    const long long m = -2 * n / 5;
    const double err = std::fabs(first_moment_overlap(n, m, params) - limit);
    REQUIRE(err < prev_err);
    prev_err = err;
  }
  REQUIRE(prev_err < 1e-3);
}

TEST_CASE("boundary gap positivity and sqrt scaling", "[analytic]") {
  REQUIRE(boundary_gap(100, 0, 1.0) == 0.0);
  for (double kappa : {0.5, 1.0, 2.0}) {
    double min_ratio = 1e9;
    for (int m = 1; m <= 100; ++m) {
      const double gap = boundary_gap(10000, m, kappa);
      REQUIRE(gap > 0.0);
      min_ratio = std::min(min_ratio, gap * std::sqrt(10000.0 / double(m)));
    }
    REQUIRE(min_ratio > 0.01);
  }
}

TEST_CASE("gap negative strictly inside (0, beta_c)", "[analytic]") {
  for (double alpha : {1.69, 1.75, 1.81}) {
    const ModelParams params{1.0, alpha};
    const double root = beta_c(params);
    const double margin = root / 10.0;
    for (int i = 0; i <= 200; ++i) {
      const double beta = margin + (root - 2.0 * margin) * double(i) / 200.0;
      REQUIRE(free_energy_gap(params, beta) < 0.0);
    }
  }
}

TEST_CASE("gap curve table carries the root and one critical point", "[analytic]") {
  const CurveTable table = free_energy_gap_curve({1.0, 1.75}, 500);
  REQUIRE(table.points.size() == 500);
  for (std::size_t i = 1; i < table.points.size(); ++i)
    REQUIRE(table.points[i - 1].first < table.points[i].first);
  REQUIRE(table.points.back().first == Catch::Approx(0.5));
  REQUIRE(table.roots.size() == 1);
  REQUIRE(std::fabs(free_energy_gap({1.0, 1.75}, table.roots[0])) <= table.root_tolerance);
  REQUIRE(table.critical_points.size() == 1);
}

TEST_CASE("first moment curve spans admissible overlaps", "[analytic]") {
  const CurveTable table = first_moment_curve({1.0, 1.0}, 10);
  REQUIRE(table.kind == CurveKind::FirstMomentExponent);
  REQUIRE(table.points.size() == 11);
  REQUIRE(table.points.front().first == Catch::Approx(0.0));
  REQUIRE(table.points.back().first == Catch::Approx(1.0));
  REQUIRE(table.points.back().second == 0.0);
}
