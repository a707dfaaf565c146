#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pspace/config.hpp"
#include "pspace/ground.hpp"
#include "pspace/runner.hpp"

namespace {

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw pspace::ConfigError("expected key=value, got '" + item + "'");
    const std::string value = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw pspace::ConfigError("'" + item + "' is not numeric");
    out[item.substr(0, eq)] = v;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson-space functional inequality checker"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  double tail_mass = 0.0;
  std::size_t budget = 0;
  std::string mode, out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed for Monte Carlo engines");
  auto* tail_opt = app.add_option("--tail-mass", tail_mass, "Discarded Poisson mass for truncation")
                       ->check(CLI::Range(1e-300, 0.5));
  auto* budget_opt = app.add_option("--budget", budget, "Maximum number of truncated states");
  auto* mode_opt = app.add_option("--mode", mode, "Engine mode")->check(CLI::IsMember({"exact", "mc"}));
  auto* out_opt = app.add_option("--out", out_dir, "Directory for reports and tables");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the checks of a YAML experiment config");
  run->add_option("config", config_path, "Config file")->required();

  auto* list = app.add_subcommand("list-checks", "Print the catalog of checks");

  std::string example_name;
  std::vector<std::string> example_params;
  auto* example = app.add_subcommand("example", "Print the CSV table of a worked example");
  example->add_option("name", example_name, "Example name")->required();
  example->add_option("params", example_params, "key=value parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? pspace::kExitOk : pspace::kExitConfigError;
  }

  if (run->parsed()) {
    pspace::RunOverrides o;
    if (*seed_opt) o.seed = seed;
    if (*tail_opt) o.tail_mass = tail_mass;
    if (*budget_opt) o.budget = budget;
    if (*mode_opt) o.mode = pspace::parse_mode(mode);
    if (*out_opt) o.out_dir = out_dir;
    return pspace::run_config_file(config_path, o, std::cerr);
  }

  if (list->parsed()) {
    std::cout << pspace::catalog_text();
    return pspace::kExitOk;
  }

  try {
    const std::string csv = pspace::run_example(example_name, parse_params(example_params));
    if (*out_opt) {
      std::filesystem::create_directories(out_dir);
      const auto path = std::filesystem::path(out_dir) / (example_name + ".csv");
      std::ofstream(path, std::ios::binary) << csv;
      std::cerr << "wrote " << path.string() << '\n';
    } else {
      std::cout << csv;
    }
  } catch (const pspace::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pspace::kExitConfigError;
  } catch (const pspace::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pspace::kExitConfigError;
  } catch (const pspace::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return pspace::kExitBudget;
  }
  return pspace::kExitOk;
}
