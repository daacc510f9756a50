// dickesim: permutation-invariant Lindblad simulations of identical TLS
// ensembles from JSON configs. Exit codes: 0 success, 2 config error,
// 3 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dickesim/scenarios.hpp"

namespace {

const std::vector<std::string> kScenarios = {
    "superradiance", "steady_superradiance", "squeezing", "open_dicke",
    "time_crystal",  "two_ensembles",        "usc",       "generic",
    "bench"};

int run(const std::string& scenario, const std::string& config_path, const std::string& out_dir,
        int jobs) {
  dickesim::Json config;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file '" << config_path << "'\n";
      return 2;
    }
    try {
      in >> config;
    } catch (const std::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (config.contains("scenario") && config.at("scenario").get<std::string>() != scenario) {
    std::cerr << "error: config names scenario '" << config.at("scenario").get<std::string>()
              << "' but '" << scenario << "' was requested\n";
    return 2;
  }

  try {
    dickesim::scenarios::run_scenario(scenario, config, {out_dir, jobs});
  } catch (const dickesim::scenarios::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation-invariant Lindblad simulations of identical two-level ensembles"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  int jobs = 1;

  for (const auto& name : kScenarios) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (default: current)");
    sub->add_option("--jobs", jobs, "maximum concurrent sweep points")->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);
  return run(app.get_subcommands().front()->get_name(), config_path, out_dir, jobs);
}
