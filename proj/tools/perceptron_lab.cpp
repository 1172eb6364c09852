// Command-line front end for the experiment harness. Every experiment reads a
// JSON config; --seed/--out/--workers override the config in place so batch
// scripts can fan a single config across seeds.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "symperc/symperc.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitCapabilityError = 3;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
};

symperc::harness::ExperimentConfig load_config(const CliOptions& options,
                                               symperc::harness::Experiment expected) {
  std::ifstream in(options.config_path);
  if (!in) throw symperc::config_error("cannot open config: " + options.config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw symperc::config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.contains("experiment")) j["experiment"] = symperc::harness::experiment_name(expected);
  auto config = symperc::harness::ExperimentConfig::from_json(j);
  if (config.experiment != expected)
    throw symperc::config_error("config experiment does not match the subcommand");
  if (options.seed) config.seed = *options.seed;
  if (options.out_dir) config.out_dir = *options.out_dir;
  if (options.workers) config.workers = *options.workers;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale laboratory for the symmetric binary perceptron"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    symperc::harness::Experiment experiment;
  };
  const Sub subs[] = {
      {"figure1", "Free-energy gap curves with located roots", symperc::harness::Experiment::Figure1},
      {"concentration", "Log solution-count concentration trials",
       symperc::harness::Experiment::Concentration},
      {"freezing", "Frozen-coordinate and isolation trials", symperc::harness::Experiment::Freezing},
      {"contiguity", "Planted vs reweighted-random identity check",
       symperc::harness::Experiment::Contiguity},
      {"capacity-scan", "Empirical satisfiability across constraint densities",
       symperc::harness::Experiment::CapacityScan},
      {"process-diagnostics", "Constraint-by-constraint process statistics",
       symperc::harness::Experiment::ProcessDiagnostics},
  };

  CliOptions options;
  symperc::harness::Experiment selected{};
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", options.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", [&options](const CLI::results_t& r) {
         options.seed = std::stoull(r.at(0));
         return true;
       },
       "master seed override");
    cmd->add_option("--out", [&options](const CLI::results_t& r) {
         options.out_dir = r.at(0);
         return true;
       },
       "output directory override");
    cmd->add_option("--workers", [&options](const CLI::results_t& r) {
         options.workers = unsigned(std::stoul(r.at(0)));
         return true;
       },
       "worker thread count override");
    cmd->callback([&selected, &sub] { selected = sub.experiment; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    const auto config = load_config(options, selected);
    const auto result = symperc::harness::run(config);
    std::cout << "wrote " << result.files.size() << " files to " << config.out_dir << "\n";
    return 0;
  } catch (const symperc::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const symperc::capability_error& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return kExitCapabilityError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
