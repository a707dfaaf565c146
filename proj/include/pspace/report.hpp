#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pspace/functional.hpp"

namespace pspace {

enum class Verdict { holds, holds_within_stat_error, violated, hypothesis_not_met };

const char* to_string(Verdict v);

/// Relation the two sides are expected to satisfy.
enum class Relation { less_equal, equal };

/// One-sided z used for Monte Carlo verdicts.
inline constexpr double kStatZ = 4.0;

struct InequalityReport {
  std::string name;
  Relation relation = Relation::less_equal;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  std::optional<double> stderr;
  double tolerance = 0.0;
  Verdict verdict = Verdict::holds;
  std::vector<MonotonicityCertificate> hypothesis_certificates;
  std::map<std::string, std::string> parameters;
  /// Set on counterexample demonstrations; never affects the process exit code.
  bool intentional_violation_demo = false;
  std::string note;

  bool ok() const {
    return verdict == Verdict::holds || verdict == Verdict::holds_within_stat_error;
  }
};

/// Fills slack and verdict. Exact: violated iff lhs > rhs + tolerance (or
/// |lhs - rhs| > tolerance for equalities). With a stderr: violated iff the
/// gap exceeds tolerance + z * stderr, and holds-within-stat-error when only
/// the z band rescues it.
void decide(InequalityReport& report);

/// Marks the report hypothesis-not-met when any certificate carries a witness.
/// Returns true when every certificate holds.
bool apply_gate(InequalityReport& report);

std::string format_double(double v);

}  // namespace pspace
