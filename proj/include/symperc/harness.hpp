#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "symperc/analytic.hpp"
#include "symperc/errors.hpp"
#include "symperc/process.hpp"
#include "symperc/serialize.hpp"
#include "symperc/solver.hpp"
#include "symperc/structure.hpp"

namespace symperc::harness {

using nlohmann::json;
using sampler::Instance;
using sampler::SpinConfig;
using solver::SolutionSet;

enum class Experiment {
  Figure1,
  Concentration,
  Freezing,
  Contiguity,
  CapacityScan,
  ProcessDiagnostics
};

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Figure1: return "figure1";
    case Experiment::Concentration: return "concentration";
    case Experiment::Freezing: return "freezing";
    case Experiment::Contiguity: return "contiguity";
    case Experiment::CapacityScan: return "capacity_scan";
    case Experiment::ProcessDiagnostics: return "process_diagnostics";
  }
  return "?";
}

inline Experiment experiment_from_name(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  if (name == "figure1") return Experiment::Figure1;
  if (name == "concentration") return Experiment::Concentration;
  if (name == "freezing") return Experiment::Freezing;
  if (name == "contiguity") return Experiment::Contiguity;
  if (name == "capacity_scan") return Experiment::CapacityScan;
  if (name == "process_diagnostics") return Experiment::ProcessDiagnostics;
  throw config_error("unknown experiment: " + name);
}

// Event computable from (sigma*, S); the built-ins cover complete freezing,
// small solution counts, and isolation at a distance.
struct EventSpec {
  enum class Type { All, FrozenEqN, CountLe, NearestGe };
  Type type = Type::All;
  std::uint64_t threshold = 0;  // CountLe
  int distance = 0;             // NearestGe

  std::string name() const {
    switch (type) {
      case Type::All: return "all";
      case Type::FrozenEqN: return "frozen_eq_n";
      case Type::CountLe: return "count_le_" + std::to_string(threshold);
      case Type::NearestGe: return "nearest_ge_" + std::to_string(distance);
    }
    return "?";
  }

  bool indicator(const SpinConfig& sigma, const SolutionSet& s) const {
    switch (type) {
      case Type::All: return true;
      case Type::FrozenEqN: return structure::frozen_count(s, sigma) == s.n;
      case Type::CountLe: return s.codes.size() <= threshold;
      case Type::NearestGe: {
        const auto nearest = solver::nearest_other(s, sigma);
        return nearest && nearest->distance >= distance;
      }
    }
    return false;
  }

  // Sum of the indicator over all solutions in S.
  std::uint64_t weight(const SolutionSet& s) const {
    switch (type) {
      case Type::All: return s.codes.size();
      case Type::CountLe: return s.codes.size() <= threshold ? s.codes.size() : 0;
      case Type::FrozenEqN: {
        std::uint64_t w = 0;
        for (std::uint64_t code : s.codes) {
          bool frozen = true;
          for (int j = 0; j < s.n && frozen; ++j)
            frozen = !s.contains(code ^ (std::uint64_t(1) << j));
          if (frozen) ++w;
        }
        return w;
      }
      case Type::NearestGe: {
        std::uint64_t w = 0;
        for (std::uint64_t code : s.codes) {
          bool far_enough = true;
          for (std::uint64_t other : s.codes) {
            if (other == code) continue;
            if (std::popcount(other ^ code) < distance) {
              far_enough = false;
              break;
            }
          }
          if (far_enough) ++w;
        }
        return w;
      }
    }
    return 0;
  }

  static EventSpec from_json(const json& j) {
    EventSpec e;
    const std::string type = j.at("type").get<std::string>();
    if (type == "all") {
      e.type = Type::All;
    } else if (type == "frozen_eq_n") {
      e.type = Type::FrozenEqN;
    } else if (type == "count_le") {
      e.type = Type::CountLe;
      e.threshold = j.at("threshold").get<std::uint64_t>();
    } else if (type == "nearest_ge") {
      e.type = Type::NearestGe;
      e.distance = j.at("distance").get<int>();
    } else {
      throw config_error("unknown event type: " + type);
    }
    return e;
  }

  json to_json() const {
    json j{{"type", type == Type::All         ? "all"
                    : type == Type::FrozenEqN ? "frozen_eq_n"
                    : type == Type::CountLe   ? "count_le"
                                              : "nearest_ge"}};
    if (type == Type::CountLe) j["threshold"] = threshold;
    if (type == Type::NearestGe) j["distance"] = distance;
    return j;
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Figure1;
  int n = 0;
  std::vector<int> n_grid;        // concentration sweeps; falls back to {n}
  double kappa = 1.0;
  std::vector<double> alphas;     // single alpha or a grid, experiment-dependent
  std::optional<int> m_override;  // explicit constraint count (contiguity)
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  unsigned workers = 1;
  double delta = 0.05;            // freezing radius offset
  int max_rejects = 1000;
  int grid_points = 2000;
  std::uint64_t pair_budget = 2048;
  std::vector<int> martingale_steps = {5, 10, 15};
  std::uint64_t martingale_budget = 10000;
  std::vector<EventSpec> events;

  void validate() const {
    if (trials < 1) throw config_error("trials must be >= 1");
    if (!(kappa > 0.0)) throw config_error("kappa must be > 0");
    if (workers < 1) throw config_error("workers must be >= 1");
    switch (experiment) {
      case Experiment::Figure1:
        if (alphas.empty()) throw config_error("figure1 needs alpha or alpha_grid");
        if (grid_points < 2) throw config_error("grid_points must be >= 2");
        break;
      case Experiment::Concentration:
        if (alphas.size() != 1) throw config_error("concentration needs a single alpha");
        if (n_grid.empty() && n < 1) throw config_error("concentration needs n or n_grid");
        break;
      case Experiment::Freezing:
        if (alphas.empty()) throw config_error("freezing needs alpha or alpha_grid");
        if (n < 1) throw config_error("freezing needs n");
        if (!(delta > 0.0)) throw config_error("delta must be > 0");
        break;
      case Experiment::Contiguity:
        if (n < 1) throw config_error("contiguity needs n");
        if (!m_override && alphas.size() != 1)
          throw config_error("contiguity needs m or a single alpha");
        break;
      case Experiment::CapacityScan:
        if (alphas.size() < 2) throw config_error("capacity_scan needs an alpha grid");
        if (n < 1) throw config_error("capacity_scan needs n");
        break;
      case Experiment::ProcessDiagnostics:
        if (alphas.size() != 1) throw config_error("process_diagnostics needs a single alpha");
        if (n < 1) throw config_error("process_diagnostics needs n");
        break;
    }
    for (double a : alphas)
      if (!(a > 0.0)) throw config_error("alpha values must be > 0");
    for (int nk : n_grid)
      if (nk < 1) throw config_error("n_grid values must be >= 1");
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    try {
      c.experiment = experiment_from_name(j.at("experiment").get<std::string>());
      if (j.contains("n")) c.n = j.at("n").get<int>();
      if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<int>>();
      if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
      if (j.contains("alpha")) c.alphas = {j.at("alpha").get<double>()};
      if (j.contains("alpha_grid")) c.alphas = j.at("alpha_grid").get<std::vector<double>>();
      if (j.contains("m")) c.m_override = j.at("m").get<int>();
      if (j.contains("trials")) c.trials = j.at("trials").get<int>();
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
      if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
      if (j.contains("delta")) c.delta = j.at("delta").get<double>();
      if (j.contains("max_rejects")) c.max_rejects = j.at("max_rejects").get<int>();
      if (j.contains("grid_points")) c.grid_points = j.at("grid_points").get<int>();
      if (j.contains("pair_budget")) c.pair_budget = j.at("pair_budget").get<std::uint64_t>();
      if (j.contains("martingale")) {
        const json& m = j.at("martingale");
        if (m.contains("t_steps")) c.martingale_steps = m.at("t_steps").get<std::vector<int>>();
        if (m.contains("budget")) c.martingale_budget = m.at("budget").get<std::uint64_t>();
      }
      if (j.contains("events"))
        for (const json& e : j.at("events")) c.events.push_back(EventSpec::from_json(e));
    } catch (const json::exception& e) {
      throw config_error(std::string("config parse: ") + e.what());
    }
    c.validate();
    return c;
  }

  json to_json() const {
    json j{{"experiment", experiment_name(experiment)},
           {"n", n},
           {"n_grid", n_grid},
           {"kappa", kappa},
           {"alpha_grid", alphas},
           {"trials", trials},
           {"seed", seed},
           {"out", out_dir},
           {"workers", workers},
           {"delta", delta},
           {"max_rejects", max_rejects},
           {"grid_points", grid_points},
           {"pair_budget", pair_budget},
           {"martingale", {{"t_steps", martingale_steps}, {"budget", martingale_budget}}}};
    if (m_override) j["m"] = *m_override;
    json ev = json::array();
    for (const EventSpec& e : events) ev.push_back(e.to_json());
    j["events"] = std::move(ev);
    return j;
  }
};

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::string digest;
  std::vector<std::pair<std::string, double>> observables;
  int rejected_for_emptiness = 0;
  bool failed = false;
};

struct RunResult {
  std::vector<std::string> files;
  json summary;
};

namespace detail {

// Per-index fan-out across a fixed worker pool; each index writes only its
// own slot, so output never depends on scheduling.
template <class Fn>
inline void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned used = unsigned(std::min<std::uint64_t>(workers, count));
  pool.reserve(used);
  for (unsigned w = 0; w < used; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string trials_csv(const std::vector<std::string>& keys,
                              const std::vector<TrialRecord>& records) {
  std::string out = "trial,seed,digest,rejects";
  for (const std::string& k : keys) out += "," + k;
  out += "\n";
  for (const TrialRecord& rec : records) {
    if (rec.failed) continue;
    out += std::to_string(rec.trial) + "," + std::to_string(rec.seed) + "," + rec.digest + "," +
           std::to_string(rec.rejected_for_emptiness);
    for (const auto& [key, value] : rec.observables) {
      (void)key;
      out += "," + io::fmt_double(value);
    }
    out += "\n";
  }
  return out;
}

inline double observable(const TrialRecord& rec, const std::string& key) {
  for (const auto& [k, v] : rec.observables)
    if (k == key) return v;
  throw std::logic_error("missing observable: " + key);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t count = 0;
};

inline MeanSe mean_se(const std::vector<double>& values) {
  MeanSe r;
  r.count = values.size();
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / double(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(ss / double(values.size() - 1) / double(values.size()));
  }
  return r;
}

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  std::string s = buf;
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

inline std::uint64_t mix_tag(std::uint64_t lane, std::uint64_t index) {
  return (lane << 48) ^ index;
}

}  // namespace detail

struct RandomModelTrial {
  Instance instance;
  SolutionSet solutions;
  SpinConfig sampled;
  int rejects = 0;
};

// One draw from the random model: sample constraints, reject while the
// solution set is empty, then pick a uniform solution.
inline RandomModelTrial run_random_model_trial(int n, int m, double kappa, std::uint64_t seed,
                                               int max_rejects) {
  for (int attempt = 0; attempt <= max_rejects; ++attempt) {
    const std::uint64_t instance_seed = derive_seed(seed, std::uint64_t(attempt));
    Instance inst = sampler::sample_random_instance(n, m, kappa, instance_seed);
    SolutionSet sol = solver::enumerate(inst);
    if (!sol.codes.empty()) {
      RandomStream pick(derive_seed(instance_seed, 0xF00Dull));
      const SpinConfig sigma = sol.spin_at(pick.below(sol.codes.size()));
      return RandomModelTrial{std::move(inst), std::move(sol), sigma, attempt};
    }
  }
  throw std::runtime_error("run_random_model_trial: max_rejects exceeded (" +
                           std::to_string(max_rejects) + ")");
}

// --- figure1 ----------------------------------------------------------------

inline RunResult run_figure1(const ExperimentConfig& config) {
  RunResult result;
  json curves = json::array();
  for (double alpha : config.alphas) {
    const analytic::ModelParams params{config.kappa, alpha};
    if (!(alpha < analytic::alpha_c(config.kappa))) {
      curves.push_back(json{{"alpha", alpha}, {"skipped", "alpha >= alpha_c, beta_c undefined"}});
      continue;
    }
    const analytic::CurveTable table = analytic::free_energy_gap_curve(params, config.grid_points);
    const std::string stem = "gap_curve_alpha_" + detail::alpha_tag(alpha);
    io::write_file(std::filesystem::path(config.out_dir) / (stem + ".csv"), io::to_csv(table));
    io::write_file(std::filesystem::path(config.out_dir) / (stem + ".json"),
                   io::sidecar_json(table).dump(2) + "\n");
    result.files.push_back(stem + ".csv");
    result.files.push_back(stem + ".json");
    curves.push_back(json{{"alpha", alpha},
                          {"beta_c", table.roots.at(0)},
                          {"critical_points", table.critical_points}});
  }
  result.summary = json{{"kappa", config.kappa}, {"curves", std::move(curves)}};
  return result;
}

// --- concentration ----------------------------------------------------------

inline RunResult run_concentration(const ExperimentConfig& config) {
  const double alpha = config.alphas.at(0);
  const double log_p = std::log(analytic::gauss_p(config.kappa));
  std::vector<int> ns = config.n_grid.empty() ? std::vector<int>{config.n} : config.n_grid;
  RunResult result;
  json per_n = json::array();
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const int n = ns[k];
    const int m = int(std::floor(alpha * double(n)));
    std::vector<TrialRecord> records(std::size_t(config.trials));
    detail::parallel_for(std::uint64_t(config.trials), config.workers, [&](std::uint64_t i) {
      TrialRecord& rec = records[i];
      rec.trial = i;
      rec.seed = derive_seed(config.seed, detail::mix_tag(k, i));
      try {
        const RandomModelTrial trial =
            run_random_model_trial(n, m, config.kappa, rec.seed, config.max_rejects);
        rec.digest = io::instance_digest(trial.instance);
        rec.rejected_for_emptiness = trial.rejects;
        const double q_m = std::log(std::ldexp(double(trial.solutions.codes.size()), -n)) -
                           double(m) * log_p;
        rec.observables = {{"cardinality", double(trial.solutions.codes.size())}, {"q_m", q_m}};
      } catch (const std::runtime_error&) {
        rec.failed = true;
      }
    });
    std::vector<double> abs_q, cards;
    std::uint64_t failures = 0;
    for (const TrialRecord& rec : records) {
      if (rec.failed) {
        ++failures;
        continue;
      }
      abs_q.push_back(std::fabs(detail::observable(rec, "q_m")));
      cards.push_back(detail::observable(rec, "cardinality"));
    }
    std::sort(abs_q.begin(), abs_q.end());
    const detail::MeanSe card_stats = detail::mean_se(cards);
    const double median_abs_q = detail::quantile_sorted(abs_q, 0.5);
    const std::string file = "trials_n" + std::to_string(n) + ".csv";
    io::write_file(std::filesystem::path(config.out_dir) / file,
                   detail::trials_csv({"cardinality", "q_m"}, records));
    result.files.push_back(file);
    per_n.push_back(json{{"n", n},
                         {"m", m},
                         {"trials", abs_q.size()},
                         {"failures", failures},
                         {"median_abs_q", median_abs_q},
                         {"iqr_abs_q", detail::quantile_sorted(abs_q, 0.75) -
                                           detail::quantile_sorted(abs_q, 0.25)},
                         {"max_abs_q", abs_q.empty() ? 0.0 : abs_q.back()},
                         {"mean_cardinality", card_stats.mean},
                         {"se_cardinality", card_stats.se},
                         {"expected_cardinality", std::exp2(double(n)) *
                                                      std::pow(analytic::gauss_p(config.kappa), m)},
                         {"median_abs_q_over_log_n", median_abs_q / std::log(double(n))}});
  }
  result.summary = json{{"kappa", config.kappa}, {"alpha", alpha}, {"per_n", std::move(per_n)}};
  return result;
}

// --- freezing ---------------------------------------------------------------

inline RunResult run_freezing(const ExperimentConfig& config) {
  RunResult result;
  json per_point = json::array();
  const int n = config.n;
  for (std::size_t a_idx = 0; a_idx < config.alphas.size(); ++a_idx) {
    const double alpha = config.alphas[a_idx];
    if (!(alpha < analytic::alpha_c(config.kappa))) {
      per_point.push_back(json{{"alpha", alpha}, {"skipped", "alpha >= alpha_c"}});
      continue;
    }
    const int m = int(std::floor(alpha * double(n)));
    const double bc = analytic::beta_c({config.kappa, alpha});
    const int radius = std::max(0, int(std::floor((bc - config.delta) * double(n))));

    auto farm = [&](bool planted_model) {
      std::vector<TrialRecord> records(std::size_t(config.trials));
      detail::parallel_for(std::uint64_t(config.trials), config.workers, [&](std::uint64_t i) {
        TrialRecord& rec = records[i];
        rec.trial = i;
        rec.seed = derive_seed(config.seed,
                               detail::mix_tag((a_idx << 1) | (planted_model ? 1 : 0), i));
        try {
          SolutionSet sol;
          SpinConfig sigma;
          Instance inst;
          if (planted_model) {
            RandomStream rng(rec.seed);
            sigma = sampler::random_spin(n, rng);
            inst = sampler::sample_planted_instance(n, m, config.kappa, sigma,
                                                    derive_seed(rec.seed, 1));
            sol = solver::enumerate(inst);
          } else {
            RandomModelTrial trial =
                run_random_model_trial(n, m, config.kappa, rec.seed, config.max_rejects);
            inst = std::move(trial.instance);
            sol = std::move(trial.solutions);
            sigma = trial.sampled;
            rec.rejected_for_emptiness = trial.rejects;
          }
          rec.digest = io::instance_digest(inst);
          const int frozen = structure::frozen_count(sol, sigma);
          const auto nearest = solver::nearest_other(sol, sigma);
          rec.observables = {
              {"cardinality", double(sol.codes.size())},
              {"frozen", double(frozen)},
              {"completely_frozen", frozen == n ? 1.0 : 0.0},
              {"nearest_other", nearest ? double(nearest->distance) : double(n)},
              {"isolated_at_radius", structure::isolation_verdict(sol, sigma, radius) ? 1.0 : 0.0}};
        } catch (const std::runtime_error&) {
          rec.failed = true;
        }
      });
      return records;
    };

    for (bool planted_model : {true, false}) {
      const std::vector<TrialRecord> records = farm(planted_model);
      std::vector<double> iso, frz, nearest;
      std::uint64_t failures = 0;
      for (const TrialRecord& rec : records) {
        if (rec.failed) {
          ++failures;
          continue;
        }
        iso.push_back(detail::observable(rec, "isolated_at_radius"));
        frz.push_back(detail::observable(rec, "completely_frozen"));
        nearest.push_back(detail::observable(rec, "nearest_other"));
      }
      const std::string model = planted_model ? "planted" : "random";
      const std::string file =
          "freezing_" + model + "_alpha_" + detail::alpha_tag(alpha) + ".csv";
      io::write_file(std::filesystem::path(config.out_dir) / file,
                     detail::trials_csv({"cardinality", "frozen", "completely_frozen",
                                         "nearest_other", "isolated_at_radius"},
                                        records));
      result.files.push_back(file);
      const detail::MeanSe iso_stats = detail::mean_se(iso);
      const detail::MeanSe frz_stats = detail::mean_se(frz);
      const detail::MeanSe near_stats = detail::mean_se(nearest);
      per_point.push_back(json{{"alpha", alpha},
                               {"model", model},
                               {"m", m},
                               {"beta_c", bc},
                               {"radius", radius},
                               {"trials", iso.size()},
                               {"failures", failures},
                               {"isolation_fraction", iso_stats.mean},
                               {"isolation_se", iso_stats.se},
                               {"frozen_fraction", frz_stats.mean},
                               {"frozen_se", frz_stats.se},
                               {"mean_nearest_other", near_stats.mean},
                               {"beta_c_times_n", bc * double(n)}});
    }
  }
  result.summary =
      json{{"kappa", config.kappa}, {"n", n}, {"delta", config.delta}, {"points", per_point}};
  return result;
}

// --- contiguity -------------------------------------------------------------

// Monte Carlo check of the exact change-of-measure identity
//   P_pl((sigma*, S) in A) = E[ sum_{sigma in S} 1_A(sigma, S) ] / E|S| .
// The right side absorbs both the emptiness indicator and the P(S != 0)
// factor, so unconditioned random trials estimate it directly.
inline RunResult run_contiguity(const ExperimentConfig& config) {
  const int n = config.n;
  const int m = config.m_override ? *config.m_override
                                  : int(std::floor(config.alphas.at(0) * double(n)));
  std::vector<EventSpec> events = config.events;
  if (events.empty())
    events = {EventSpec{EventSpec::Type::FrozenEqN},
              EventSpec{EventSpec::Type::CountLe, 8, 0},
              EventSpec{EventSpec::Type::NearestGe, 0, 4}};
  const double expected_count =
      std::exp2(double(n)) * std::pow(analytic::gauss_p(config.kappa), m);

  std::vector<std::string> keys{"cardinality"};
  for (const EventSpec& e : events) keys.push_back(e.name());

  auto run_side = [&](bool planted_side) {
    std::vector<TrialRecord> records(std::size_t(config.trials));
    detail::parallel_for(std::uint64_t(config.trials), config.workers, [&](std::uint64_t i) {
      TrialRecord& rec = records[i];
      rec.trial = i;
      rec.seed = derive_seed(config.seed, detail::mix_tag(planted_side ? 1 : 2, i));
      RandomStream rng(rec.seed);
      rec.observables.reserve(keys.size());
      if (planted_side) {
        const SpinConfig sigma = sampler::random_spin(n, rng);
        const Instance inst = sampler::sample_planted_instance(n, m, config.kappa, sigma,
                                                               derive_seed(rec.seed, 1));
        const SolutionSet sol = solver::enumerate(inst);
        rec.digest = io::instance_digest(inst);
        rec.observables.emplace_back("cardinality", double(sol.codes.size()));
        for (const EventSpec& e : events)
          rec.observables.emplace_back(e.name(), e.indicator(sigma, sol) ? 1.0 : 0.0);
      } else {
        const Instance inst = sampler::sample_random_instance(n, m, config.kappa, rec.seed);
        const SolutionSet sol = solver::enumerate(inst);
        rec.digest = io::instance_digest(inst);
        rec.observables.emplace_back("cardinality", double(sol.codes.size()));
        for (const EventSpec& e : events)
          rec.observables.emplace_back(e.name(), double(e.weight(sol)) / expected_count);
      }
    });
    return records;
  };

  RunResult result;
  const std::vector<TrialRecord> planted = run_side(true);
  const std::vector<TrialRecord> random = run_side(false);
  for (const auto& [side, records] :
       {std::pair{"planted", &planted}, std::pair{"random", &random}}) {
    const std::string file = std::string("contiguity_") + side + ".csv";
    io::write_file(std::filesystem::path(config.out_dir) / file,
                   detail::trials_csv(keys, *records));
    result.files.push_back(file);
  }

  json report = json::array();
  for (const EventSpec& e : events) {
    std::vector<double> lhs, rhs;
    lhs.reserve(planted.size());
    rhs.reserve(random.size());
    for (const TrialRecord& rec : planted) lhs.push_back(detail::observable(rec, e.name()));
    for (const TrialRecord& rec : random) rhs.push_back(detail::observable(rec, e.name()));
    const detail::MeanSe l = detail::mean_se(lhs);
    const detail::MeanSe r = detail::mean_se(rhs);
    const double combined = std::sqrt(l.se * l.se + r.se * r.se);
    const bool degenerate = combined == 0.0;
    report.push_back(json{{"event", e.name()},
                          {"planted_estimate", l.mean},
                          {"planted_se", l.se},
                          {"random_estimate", r.mean},
                          {"random_se", r.se},
                          {"z", degenerate ? 0.0 : (l.mean - r.mean) / combined},
                          {"degenerate", degenerate}});
  }
  result.summary = json{{"kappa", config.kappa},
                        {"n", n},
                        {"m", m},
                        {"trials_per_side", config.trials},
                        {"expected_cardinality", expected_count},
                        {"events", std::move(report)}};
  io::write_file(std::filesystem::path(config.out_dir) / "contiguity_report.json",
                 result.summary.dump(2) + "\n");
  result.files.push_back("contiguity_report.json");
  return result;
}

// --- capacity scan ----------------------------------------------------------

inline RunResult run_capacity_scan(const ExperimentConfig& config) {
  const int n = config.n;
  std::vector<double> alphas = config.alphas;
  std::sort(alphas.begin(), alphas.end());
  std::vector<int> ms(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a)
    ms[a] = int(std::floor(alphas[a] * double(n)));
  const int m_max = ms.back();

  // Nested prefixes of a single instance per trial make per-instance
  // emptiness exactly monotone across the grid.
  std::vector<std::vector<std::uint8_t>> nonempty(std::size_t(config.trials));
  detail::parallel_for(std::uint64_t(config.trials), config.workers, [&](std::uint64_t i) {
    const Instance inst = sampler::sample_random_instance(n, m_max, config.kappa,
                                                          derive_seed(config.seed, i));
    const solver::Filtration filtration = solver::enumerate_filtration(inst);
    auto& row = nonempty[i];
    row.resize(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a)
      row[a] = filtration.cardinality[std::size_t(ms[a])] > 0 ? 1 : 0;
  });

  std::string csv = "alpha,m,nonempty_fraction,se\n";
  json points = json::array();
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::vector<double> vals;
    vals.reserve(std::size_t(config.trials));
    for (const auto& row : nonempty) vals.push_back(double(row[a]));
    const detail::MeanSe stats = detail::mean_se(vals);
    csv += io::fmt_double(alphas[a]) + "," + std::to_string(ms[a]) + "," +
           io::fmt_double(stats.mean) + "," + io::fmt_double(stats.se) + "\n";
    points.push_back(json{{"alpha", alphas[a]},
                          {"m", ms[a]},
                          {"nonempty_fraction", stats.mean},
                          {"se", stats.se}});
  }
  RunResult result;
  io::write_file(std::filesystem::path(config.out_dir) / "capacity_scan.csv", csv);
  result.files.push_back("capacity_scan.csv");
  result.summary = json{{"kappa", config.kappa},
                        {"n", n},
                        {"trials", config.trials},
                        {"alpha_c", analytic::alpha_c(config.kappa)},
                        {"points", std::move(points)}};
  return result;
}

// --- process diagnostics ----------------------------------------------------

inline RunResult run_process_diagnostics(const ExperimentConfig& config) {
  const int n = config.n;
  const double alpha = config.alphas.at(0);
  const int m = int(std::floor(alpha * double(n)));

  std::vector<process::ProcessTrace> traces(std::size_t(config.trials));
  detail::parallel_for(std::uint64_t(config.trials), config.workers, [&](std::uint64_t i) {
    const std::uint64_t seed = derive_seed(config.seed, detail::mix_tag(3, i));
    const Instance inst = sampler::sample_random_instance(n, m, config.kappa, seed);
    RandomStream reg_rng(derive_seed(seed, 0x9E6ull));
    process::TraceOptions options;
    options.regularity_pair_budget = config.pair_budget;
    options.rng = &reg_rng;
    traces[i] = process::trace(inst, options);
  });

  RunResult result;
  std::string csv = "trial,t,cardinality,Q,Y,regularity_ratio\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (const auto& rec : traces[i].steps) {
      csv += std::to_string(i) + "," + std::to_string(rec.t) + "," +
             std::to_string(rec.cardinality) + ",";
      csv += rec.q ? io::fmt_double(*rec.q) : std::string();
      csv += ",";
      csv += rec.y ? io::fmt_double(*rec.y) : std::string();
      csv += ",";
      csv += rec.regularity_ratio ? io::fmt_double(*rec.regularity_ratio) : std::string();
      csv += "\n";
    }
  }
  io::write_file(std::filesystem::path(config.out_dir) / "traces.csv", csv);
  result.files.push_back("traces.csv");

  const process::TailReport tail = process::tail_diagnostic(traces);
  io::write_file(std::filesystem::path(config.out_dir) / "tail_report.json",
                 io::to_json(tail).dump(2) + "\n");
  result.files.push_back("tail_report.json");

  json martingale = json::array();
  double pooled_mean = 0.0, pooled_var = 0.0;
  for (std::size_t k = 0; k < config.martingale_steps.size(); ++k) {
    const int t = config.martingale_steps[k];
    // One conditioned prefix with nonempty S_t per requested step.
    Instance prefix;
    int rejects = 0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > config.max_rejects)
        throw std::runtime_error("process_diagnostics: no nonempty S_t found");
      prefix = sampler::sample_random_instance(
          n, t, config.kappa, derive_seed(config.seed, detail::mix_tag(4, (k << 32) | attempt)));
      if (!solver::enumerate(prefix).codes.empty()) break;
      ++rejects;
    }
    RandomStream rng(derive_seed(config.seed, detail::mix_tag(5, k)));
    const process::MartingaleEstimate est =
        process::martingale_check(prefix, config.martingale_budget, rng);
    pooled_mean += est.mean;
    pooled_var += est.standard_error * est.standard_error;
    martingale.push_back(json{{"t", t},
                              {"mean", est.mean},
                              {"standard_error", est.standard_error},
                              {"samples", est.samples},
                              {"rejects", rejects}});
  }
  const double k_steps = double(config.martingale_steps.size());
  json mart_doc{{"per_t", std::move(martingale)},
                {"pooled_mean", pooled_mean / k_steps},
                {"pooled_se", std::sqrt(pooled_var) / k_steps}};
  io::write_file(std::filesystem::path(config.out_dir) / "martingale.json",
                 mart_doc.dump(2) + "\n");
  result.files.push_back("martingale.json");

  std::vector<double> ratios;
  for (const auto& tr : traces)
    for (const auto& rec : tr.steps)
      if (rec.regularity_ratio) ratios.push_back(*rec.regularity_ratio);
  std::sort(ratios.begin(), ratios.end());
  json reg_doc{{"count", ratios.size()},
               {"mean", detail::mean_se(ratios).mean},
               {"median", detail::quantile_sorted(ratios, 0.5)},
               {"q90", detail::quantile_sorted(ratios, 0.9)},
               {"max", ratios.empty() ? 0.0 : ratios.back()}};
  io::write_file(std::filesystem::path(config.out_dir) / "regularity.json",
                 reg_doc.dump(2) + "\n");
  result.files.push_back("regularity.json");

  result.summary = json{{"kappa", config.kappa},
                        {"n", n},
                        {"alpha", alpha},
                        {"trials", config.trials},
                        {"tail", io::to_json(tail)},
                        {"martingale", mart_doc},
                        {"regularity", reg_doc}};
  return result;
}

// --- dispatch ---------------------------------------------------------------

inline std::string config_hash(const ExperimentConfig& config) {
  const std::string bytes = config.to_json().dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline RunResult run(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  RunResult result;
  switch (config.experiment) {
    case Experiment::Figure1: result = run_figure1(config); break;
    case Experiment::Concentration: result = run_concentration(config); break;
    case Experiment::Freezing: result = run_freezing(config); break;
    case Experiment::Contiguity: result = run_contiguity(config); break;
    case Experiment::CapacityScan: result = run_capacity_scan(config); break;
    case Experiment::ProcessDiagnostics: result = run_process_diagnostics(config); break;
  }
  io::write_file(std::filesystem::path(config.out_dir) / "summary.json",
                 result.summary.dump(2) + "\n");
  result.files.push_back("summary.json");
  std::sort(result.files.begin(), result.files.end());
  const json manifest{{"tool", kToolName},
                      {"version", kVersion},
                      {"experiment", experiment_name(config.experiment)},
                      {"config", config.to_json()},
                      {"config_hash", config_hash(config)},
                      {"files", result.files}};
  io::write_file(std::filesystem::path(config.out_dir) / "manifest.json",
                 manifest.dump(2) + "\n");
  result.files.push_back("manifest.json");
  return result;
}

}  // namespace symperc::harness
