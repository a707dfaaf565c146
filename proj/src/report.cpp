#include "pspace/report.hpp"

#include <cmath>
#include <cstdio>

namespace pspace {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::holds_within_stat_error: return "holds-within-stat-error";
    case Verdict::violated: return "violated";
    case Verdict::hypothesis_not_met: return "hypothesis-not-met";
  }
  return "?";
}

void decide(InequalityReport& report) {
  report.slack = report.rhs - report.lhs;
  if (report.verdict == Verdict::hypothesis_not_met) return;
  const double gap = report.relation == Relation::equal ? std::abs(report.lhs - report.rhs)
                                                        : report.lhs - report.rhs;
  if (std::isnan(gap)) {
    report.verdict = Verdict::violated;
    return;
  }
  if (gap <= report.tolerance) {
    report.verdict = Verdict::holds;
    return;
  }
  if (report.stderr && gap <= report.tolerance + kStatZ * *report.stderr) {
    report.verdict = Verdict::holds_within_stat_error;
    return;
  }
  report.verdict = Verdict::violated;
}

bool apply_gate(InequalityReport& report) {
  for (const auto& cert : report.hypothesis_certificates) {
    if (!cert.holds()) {
      report.verdict = Verdict::hypothesis_not_met;
      return false;
    }
  }
  return true;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace pspace
