#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "symperc/analytic.hpp"
#include "symperc/process.hpp"
#include "symperc/solver.hpp"
#include "symperc/structure.hpp"
#include "symperc/version.hpp"

namespace symperc::io {

using nlohmann::json;

// Fixed, lossless float formatting so identical runs yield identical bytes.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
}

// --- analytic ---------------------------------------------------------------

inline const char* curve_kind_name(analytic::CurveKind kind) {
  return kind == analytic::CurveKind::FreeEnergyGap ? "free_energy_gap" : "first_moment_exponent";
}

inline std::string to_csv(const analytic::CurveTable& table) {
  std::string out = "beta,value\n";
  for (const auto& [beta, value] : table.points)
    out += fmt_double(beta) + "," + fmt_double(value) + "\n";
  return out;
}

inline json sidecar_json(const analytic::CurveTable& table) {
  return json{{"kind", curve_kind_name(table.kind)},
              {"params", {{"kappa", table.params.kappa}, {"alpha", table.params.alpha}}},
              {"roots", table.roots},
              {"critical_points", table.critical_points},
              {"root_tolerance", table.root_tolerance}};
}

inline json to_json(const analytic::Assumption1Report& report) {
  return json{{"params", {{"kappa", report.params.kappa}, {"alpha", report.params.alpha}}},
              {"second_deriv_at_half", report.second_deriv_at_half},
              {"critical_points_in_open_interval", report.critical_points_in_open_interval},
              {"holds", report.holds},
              {"warning", report.warning}};
}

// --- sampler ----------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint32_t u32() { return std::uint32_t(read(4)); }
  std::uint64_t u64() { return read(8); }
  double f64() { return std::bit_cast<double>(read(8)); }

 private:
  std::uint64_t read(int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      const int c = in_.get();
      if (c == EOF) throw std::runtime_error("instance container truncated");
      v |= std::uint64_t(std::uint8_t(c)) << (8 * i);
    }
    return v;
  }
  std::istream& in_;
};

inline constexpr std::uint64_t kInstanceMagic = 0x314254534E495053ULL;  // "SPINSTB1"

}  // namespace detail

// Little-endian binary container: header (n, m, kappa, provenance, seed,
// Gaussian algorithm tag) followed by the row-major constraint payload.
inline void write_instance(std::ostream& out, const sampler::Instance& inst) {
  std::string buf;
  detail::put_u64(buf, detail::kInstanceMagic);
  detail::put_u32(buf, 1);  // container version
  detail::put_u32(buf, std::uint32_t(inst.n));
  detail::put_u32(buf, std::uint32_t(inst.m));
  detail::put_u32(buf, inst.provenance == sampler::Provenance::Planted ? 1 : 0);
  detail::put_f64(buf, inst.kappa);
  detail::put_u64(buf, inst.planted.code);
  detail::put_u64(buf, inst.seed);
  std::string alg = RandomStream::gaussian_algorithm();
  alg.resize(16, '\0');
  buf += alg;
  for (double v : inst.constraints) detail::put_f64(buf, v);
  out.write(buf.data(), std::streamsize(buf.size()));
}

inline sampler::Instance read_instance(std::istream& in) {
  detail::Reader reader(in);
  if (reader.u64() != detail::kInstanceMagic)
    throw std::runtime_error("instance container: bad magic");
  if (reader.u32() != 1) throw std::runtime_error("instance container: unsupported version");
  sampler::Instance inst;
  inst.n = int(reader.u32());
  inst.m = int(reader.u32());
  const bool planted = reader.u32() == 1;
  inst.kappa = reader.f64();
  const std::uint64_t planted_code = reader.u64();
  inst.seed = reader.u64();
  char alg[16];
  in.read(alg, 16);
  if (in.gcount() != 16) throw std::runtime_error("instance container truncated");
  if (inst.n < 1 || inst.n > 63 || inst.m < 0 || !(inst.kappa > 0.0))
    throw std::runtime_error("instance container: invalid header");
  inst.provenance = planted ? sampler::Provenance::Planted : sampler::Provenance::Random;
  if (planted) inst.planted = sampler::SpinConfig{inst.n, planted_code};
  inst.constraints.resize(std::size_t(inst.m) * std::size_t(inst.n));
  for (double& v : inst.constraints) v = reader.f64();
  if (planted) {
    inst.planted.validate();
    for (int r = 0; r < inst.m; ++r)
      if (!sampler::satisfies(inst.row(r), inst.planted, inst.kappa))
        throw std::runtime_error("instance container: planted row violates membership");
  }
  return inst;
}

inline json to_json(const sampler::Instance& inst) {
  json rows = json::array();
  for (int r = 0; r < inst.m; ++r) {
    json row = json::array();
    for (double v : inst.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  json j{{"n", inst.n},
         {"m", inst.m},
         {"kappa", inst.kappa},
         {"seed", inst.seed},
         {"gaussian_algorithm", RandomStream::gaussian_algorithm()},
         {"provenance", inst.provenance == sampler::Provenance::Planted ? "planted" : "random"},
         {"constraints", std::move(rows)}};
  if (inst.provenance == sampler::Provenance::Planted) j["planted_code"] = inst.planted.code;
  return j;
}

inline sampler::Instance instance_from_json(const json& j) {
  sampler::Instance inst;
  inst.n = j.at("n").get<int>();
  inst.m = j.at("m").get<int>();
  inst.kappa = j.at("kappa").get<double>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.provenance = j.at("provenance").get<std::string>() == "planted"
                        ? sampler::Provenance::Planted
                        : sampler::Provenance::Random;
  if (inst.provenance == sampler::Provenance::Planted)
    inst.planted = sampler::SpinConfig{inst.n, j.at("planted_code").get<std::uint64_t>()};
  if (inst.n < 1 || inst.n > 63 || inst.m < 0 || !(inst.kappa > 0.0))
    throw std::runtime_error("instance json: invalid header");
  inst.constraints.reserve(std::size_t(inst.m) * std::size_t(inst.n));
  for (const auto& row : j.at("constraints")) {
    if (int(row.size()) != inst.n) throw std::runtime_error("instance json: ragged row");
    for (const auto& v : row) inst.constraints.push_back(v.get<double>());
  }
  if (inst.constraints.size() != std::size_t(inst.m) * std::size_t(inst.n))
    throw std::runtime_error("instance json: wrong row count");
  if (inst.provenance == sampler::Provenance::Planted) {
    inst.planted.validate();
    for (int r = 0; r < inst.m; ++r)
      if (!sampler::satisfies(inst.row(r), inst.planted, inst.kappa))
        throw std::runtime_error("instance json: planted row violates membership");
  }
  return inst;
}

// FNV-1a digest of the binary serialization; stable instance fingerprint.
inline std::string instance_digest(const sampler::Instance& inst) {
  std::ostringstream oss(std::ios::binary);
  write_instance(oss, inst);
  const std::string bytes = oss.str();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- solver -----------------------------------------------------------------

// JSON header line, then one lowercase hex codeword per line, sorted.
inline std::string to_text(const solver::SolutionSet& s) {
  std::string out =
      json{{"n", s.n}, {"m", s.m}, {"count", s.codes.size()}}.dump() + "\n";
  char buf[20];
  for (std::uint64_t code : s.codes) {
    std::snprintf(buf, sizeof buf, "%llx\n", static_cast<unsigned long long>(code));
    out += buf;
  }
  return out;
}

inline solver::SolutionSet solution_set_from_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("solution set: missing header");
  const json j = json::parse(header);
  solver::SolutionSet s;
  s.n = j.at("n").get<int>();
  s.m = j.at("m").get<int>();
  const std::uint64_t count = j.at("count").get<std::uint64_t>();
  s.codes.reserve(count);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    s.codes.push_back(std::stoull(line, nullptr, 16));
  }
  if (s.codes.size() != count) throw std::runtime_error("solution set: count mismatch");
  for (std::size_t i = 1; i < s.codes.size(); ++i)
    if (s.codes[i - 1] >= s.codes[i]) throw std::runtime_error("solution set: not strictly sorted");
  return s;
}

inline std::string to_csv(const solver::Filtration& filtration) {
  std::string out = "t,cardinality\n";
  for (std::size_t t = 0; t < filtration.cardinality.size(); ++t)
    out += std::to_string(t) + "," + std::to_string(filtration.cardinality[t]) + "\n";
  return out;
}

// --- structure --------------------------------------------------------------

inline json to_json(const structure::ClusterReport& report) {
  return json{{"n", report.n},
              {"solution_count", report.solution_count},
              {"cluster_sizes", report.cluster_sizes},
              {"isolated_count", report.isolated_count}};
}

inline std::string per_solution_csv(const structure::ClusterReport& report) {
  std::string out = "code,frozen,nearest\n";
  char buf[64];
  for (const auto& ps : report.per_solution) {
    std::snprintf(buf, sizeof buf, "%llx,%d,%d\n", static_cast<unsigned long long>(ps.code),
                  ps.frozen_coordinates, ps.nearest_other_distance);
    out += buf;
  }
  return out;
}

// --- process ----------------------------------------------------------------

inline std::string to_csv(const process::ProcessTrace& trace) {
  std::string out = "t,cardinality,Q,Y,regularity_ratio\n";
  for (const auto& rec : trace.steps) {
    out += std::to_string(rec.t) + "," + std::to_string(rec.cardinality) + ",";
    out += rec.q ? fmt_double(*rec.q) : std::string();
    out += ",";
    out += rec.y ? fmt_double(*rec.y) : std::string();
    out += ",";
    out += rec.regularity_ratio ? fmt_double(*rec.regularity_ratio) : std::string();
    out += "\n";
  }
  return out;
}

inline json to_json(const process::StoppingSummary& s) {
  json j{{"crossed", s.crossed}, {"fraction", s.fraction}};
  if (s.earliest) j["earliest"] = *s.earliest;
  if (s.median_time) j["median_time"] = *s.median_time;
  return j;
}

inline json to_json(const process::TailReport& report) {
  json survival = json::array();
  for (const auto& [x, s] : report.survival) survival.push_back(json::array({x, s}));
  return json{{"n", report.n},
              {"kappa", report.kappa},
              {"trace_count", report.trace_count},
              {"pooled_count", report.pooled_count},
              {"survival", std::move(survival)},
              {"fit_window", json::array({report.fit_lo, report.fit_hi})},
              {"tail_rate", report.tail_rate},
              {"intercept", report.intercept},
              {"r_squared", report.r_squared},
              {"c3_used", report.c3_used},
              {"tau_y", to_json(report.tau_y)},
              {"tau_q", to_json(report.tau_q)}};
}

}  // namespace symperc::io
