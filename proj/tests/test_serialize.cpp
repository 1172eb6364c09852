#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "symperc/serialize.hpp"

using namespace symperc;
using namespace symperc::sampler;

TEST_CASE("fmt_double round-trips arbitrary doubles", "[serialize]") {
  RandomStream rng(8);
  for (int i = 0; i < 2000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, double(rng.below(40)) - 20.0);
    REQUIRE(std::stod(io::fmt_double(v)) == v);
  }
  REQUIRE(std::stod(io::fmt_double(0.0)) == 0.0);
}

TEST_CASE("instance binary container round trip", "[serialize]") {
  for (bool planted : {false, true}) {
    RandomStream rng(planted ? 2 : 1);
    const SpinConfig sigma = random_spin(9, rng);
    const Instance original =
        planted ? sample_planted_instance(9, 7, 1.3, sigma, 555)
                : sample_random_instance(9, 7, 1.3, 555);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    io::write_instance(buf, original);
    const Instance loaded = io::read_instance(buf);
    REQUIRE(loaded.n == original.n);
    REQUIRE(loaded.m == original.m);
    REQUIRE(loaded.kappa == original.kappa);
    REQUIRE(loaded.seed == original.seed);
    REQUIRE(loaded.provenance == original.provenance);
    REQUIRE(loaded.constraints == original.constraints);
    if (planted) REQUIRE(loaded.planted == sigma);

    // byte-identical re-serialization
    std::stringstream buf2(std::ios::in | std::ios::out | std::ios::binary);
    io::write_instance(buf2, loaded);
    REQUIRE(buf2.str() == buf.str());
  }
}

TEST_CASE("instance loader validates the planted invariant", "[serialize]") {
  RandomStream rng(3);
  const SpinConfig sigma = random_spin(8, rng);
  Instance inst = sample_planted_instance(8, 5, 0.9, sigma, 777);
  inst.constraints[3] += 100.0;  // push a row far outside the band
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  io::write_instance(buf, inst);
  REQUIRE_THROWS_AS(io::read_instance(buf), std::runtime_error);
}

TEST_CASE("instance binary container rejects bad magic", "[serialize]") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  buf << "not an instance file";
  REQUIRE_THROWS_AS(io::read_instance(buf), std::runtime_error);
}

TEST_CASE("instance json round trip", "[serialize]") {
  RandomStream rng(4);
  const SpinConfig sigma = random_spin(6, rng);
  const Instance original = sample_planted_instance(6, 4, 1.1, sigma, 99);
  const Instance loaded = io::instance_from_json(io::to_json(original));
  REQUIRE(loaded.constraints == original.constraints);
  REQUIRE(loaded.planted == sigma);
  REQUIRE(io::to_json(loaded) == io::to_json(original));
}

TEST_CASE("instance digest is stable and discriminating", "[serialize]") {
  const Instance a = sample_random_instance(8, 5, 1.0, 1);
  const Instance b = sample_random_instance(8, 5, 1.0, 2);
  REQUIRE(io::instance_digest(a) == io::instance_digest(a));
  REQUIRE(io::instance_digest(a) != io::instance_digest(b));
  REQUIRE(io::instance_digest(a).size() == 16);
}

TEST_CASE("solution set text round trip", "[serialize]") {
  const Instance inst = sample_random_instance(10, 7, 1.0, 2020);
  const solver::SolutionSet s = solver::enumerate(inst);
  const std::string text = io::to_text(s);
  std::istringstream in(text);
  const solver::SolutionSet loaded = io::solution_set_from_text(in);
  REQUIRE(loaded.n == s.n);
  REQUIRE(loaded.m == s.m);
  REQUIRE(loaded.codes == s.codes);

  // tampered count is rejected
  std::istringstream bad("{\"count\":3,\"m\":0,\"n\":4}\n1\n2\n");
  REQUIRE_THROWS_AS(io::solution_set_from_text(bad), std::runtime_error);
}

TEST_CASE("filtration and curve csv shapes", "[serialize]") {
  const Instance inst = sample_random_instance(8, 4, 1.0, 3030);
  const solver::Filtration f = solver::enumerate_filtration(inst);
  const std::string csv = io::to_csv(f);
  REQUIRE(csv.rfind("t,cardinality\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows

  const analytic::CurveTable table = analytic::free_energy_gap_curve({1.0, 1.75}, 50);
  const std::string curve_csv = io::to_csv(table);
  REQUIRE(curve_csv.rfind("beta,value\n", 0) == 0);
  REQUIRE(std::count(curve_csv.begin(), curve_csv.end(), '\n') == 51);
  const auto sidecar = io::sidecar_json(table);
  REQUIRE(sidecar.at("kind") == "free_energy_gap");
  REQUIRE(sidecar.at("roots").size() == 1);
  REQUIRE(sidecar.at("params").at("alpha") == 1.75);
}

TEST_CASE("assumption report and cluster report json", "[serialize]") {
  const auto report = analytic::check_assumption1({1.0, 1.75}, 1000);
  const auto j = io::to_json(report);
  REQUIRE(j.at("holds") == true);
  REQUIRE(j.at("critical_points_in_open_interval").size() == 1);

  const Instance inst = sample_random_instance(8, 6, 1.0, 11);
  const auto clusters = structure::clusters(solver::enumerate(inst));
  const auto cj = io::to_json(clusters);
  REQUIRE(cj.at("solution_count") == clusters.solution_count);
  const std::string csv = io::per_solution_csv(clusters);
  REQUIRE(csv.rfind("code,frozen,nearest\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') ==
          long(clusters.per_solution.size()) + 1);
}

TEST_CASE("process trace csv has one row per step", "[serialize]") {
  const Instance inst = sample_random_instance(9, 6, 1.0, 17);
  const auto tr = process::trace(inst);
  const std::string csv = io::to_csv(tr);
  REQUIRE(csv.rfind("t,cardinality,Q,Y,regularity_ratio\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == long(tr.steps.size()) + 1);
  // Q_0 serialized exactly as zero
  REQUIRE(csv.find("\n0,512,0,,\n") != std::string::npos);
}
