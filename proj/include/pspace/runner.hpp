#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pspace/config.hpp"
#include "pspace/report.hpp"

namespace pspace {

enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfigError = 2, kExitBudget = 3 };

struct CatalogEntry {
  std::string id;
  std::string group;  // inequalities, identities or examples
  std::string anchor;
  std::string hypotheses;
  std::vector<std::string> required;
  std::vector<std::string> optional;
  int functionals = 0;  // how many named functionals the check consumes
};

/// Every runnable check, in the order reports are written.
const std::vector<CatalogEntry>& catalog();
const CatalogEntry* find_check(const std::string& id);
/// Tab-separated catalog listing, one entry per line.
std::string catalog_text();

/// One report line: name, params, lhs, rhs, slack, stderr, verdict, certs.
std::string format_record(const InequalityReport& report);
std::string report_header();

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tail_mass;
  std::optional<std::size_t> budget;
  std::optional<EngineMode> mode;
  std::optional<std::string> out_dir;
};

ExperimentConfig apply_overrides(ExperimentConfig config, const RunOverrides& overrides);

/// Checks names, required parameters and functional sources. Throws ConfigError or DslError.
void validate_config(const ExperimentConfig& config);

struct RunResult {
  int exit_code = kExitOk;
  std::vector<InequalityReport> records;
  std::string report_text;
};

/// Runs every check of a validated config. Throws ConfigError, DslError or BudgetExceeded.
RunResult run_experiment(const ExperimentConfig& config);

/// Loads, validates, runs and writes the report; maps failures to exit codes.
int run_config_file(const std::string& path, const RunOverrides& overrides, std::ostream& diagnostics);

/// CSV table for a named worked example; unknown names or keys throw ConfigError.
std::string run_example(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> example_names();

}  // namespace pspace
