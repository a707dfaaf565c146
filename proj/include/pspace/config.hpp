#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pspace/engine.hpp"

namespace pspace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckSpec {
  std::string check;
  std::string functional;   // name from the functionals section
  std::string functional2;  // second argument of two-functional checks
  /// Parameter grids; the check runs once per point of their product.
  std::map<std::string, std::vector<double>> grid;
  bool bypass_gate = false;
  /// Marks every record of this entry as an intentional violation demonstration.
  bool demo = false;

  bool operator==(const CheckSpec&) const = default;
};

struct ExperimentConfig {
  std::string name;
  std::vector<double> weights;
  double tail_mass = TruncatedStateSpace::kDefaultTailMass;
  std::vector<int> caps;  // overrides tail_mass when non-empty
  std::size_t budget = TruncatedStateSpace::kDefaultBudget;
  EngineMode mode = EngineMode::exact;
  std::uint64_t seed = 0;
  std::size_t replications = 10000;
  std::size_t inner_replications = Engine::kDefaultInnerReplications;
  unsigned threads = 1;
  std::vector<std::pair<std::string, std::string>> functionals;  // name -> DSL source
  std::vector<CheckSpec> checks;
  std::string report = "report.tsv";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML text. Throws ConfigError on malformed input or unknown keys.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

EngineMode parse_mode(const std::string& mode);

}  // namespace pspace
