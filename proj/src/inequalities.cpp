#include "pspace/inequalities.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pspace/semigroup.hpp"

namespace pspace {

namespace {

std::string fmt(double v) { return format_double(v); }

double phi(double u) { return u == 0.0 ? 0.0 : u * std::log(u); }

// Mean and variance of F, with the stderr of the variance in Monte Carlo mode.
struct Spread {
  double mean = 0.0;
  double variance = 0.0;
  MomentEstimate moments;
};

double sup_over_states(const Engine& engine, const StateFunction& f) { return engine.sup_abs(f); }

double exact_variance(const Engine& engine, const Functional& f, double* mean_out = nullptr) {
  const double mean = engine.expect([&](const Configuration& c) { return f(c); }).value;
  const double var = engine.expect([&](const Configuration& c) {
                             const double d = f(c) - mean;
                             return d * d;
                           }).value;
  if (mean_out) *mean_out = mean;
  return var;
}

void finish(InequalityReport& r, const Engine& engine, double scale) {
  if (engine.is_exact()) r.tolerance = engine.exact_tolerance(scale);
  r.parameters.emplace("mode", to_string(engine.mode()));
  if (r.verdict == Verdict::hypothesis_not_met) {
    r.slack = r.rhs - r.lhs;
    return;
  }
  decide(r);
}

// Positivity screen shared by the two log-Sobolev forms. Returns an empty
// string when admissible, otherwise the refusal reason.
std::string positivity_screen(const Engine& engine, const Functional& f, double floor,
                              std::size_t& hits) {
  std::string reason;
  const std::size_t m = engine.space().atom_count();
  engine.for_each_weighted([&](const Configuration& c, double w) {
    if (!reason.empty() || w <= 0.0) return;
    const double v = f(c);
    if (v < 0.0) {
      reason = "F negative at " + to_string(c);
      return;
    }
    if (floor > 0.0 && v < floor) {
      reason = "F below floor at " + to_string(c);
      return;
    }
    if (v == 0.0) {
      for (std::size_t i = 0; i < m; ++i) {
        if (f(c.plus(i)) != 0.0) {
          reason = "F vanishes at " + to_string(c) + " with non-zero D F";
          return;
        }
      }
      ++hits;
    }
  });
  return reason;
}

}  // namespace

EntropyValue entropy(const Engine& engine, const Functional& f) {
  EntropyValue out;
  const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> v) {
    const double x = f(c);
    if (x < 0.0) throw PreconditionError("entropy of a negative value at " + to_string(c));
    if (x == 0.0) ++out.convention_hits;
    v[0] = phi(x);
    v[1] = x;
  });
  out.value = m.mean[0] - phi(m.mean[1]);
  if (!engine.is_exact()) {
    const double grad[2] = {1.0, m.mean[1] > 0.0 ? -(std::log(m.mean[1]) + 1.0) : 0.0};
    out.stderr = m.delta_stderr(grad);
  } else {
    const double scale = std::max(std::abs(m.mean[0]), std::abs(phi(m.mean[1])));
    if (out.value < -engine.exact_tolerance(scale))
      throw std::logic_error("negative entropy for a non-negative functional");
  }
  return out;
}

InequalityReport check_poincare(const Engine& engine, const Functional& f) {
  const auto& w = engine.space().weights();
  InequalityReport r;
  r.name = "poincare";
  auto energy = [&](const Configuration& c) {
    const double base = f(c);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = f(c.plus(i)) - base;
      s += w[i] * d * d;
    }
    return s;
  };
  if (engine.is_exact()) {
    r.lhs = exact_variance(engine, f);
    r.rhs = engine.expect(energy).value;
  } else {
    const auto m = engine.expect_moments(3, [&](const Configuration& c, std::span<double> v) {
      v[0] = f(c);
      v[1] = v[0] * v[0];
      v[2] = energy(c);
    });
    r.lhs = m.mean[1] - m.mean[0] * m.mean[0];
    r.rhs = m.mean[2];
    const double grad[3] = {-2.0 * m.mean[0], 1.0, -1.0};
    r.stderr = m.delta_stderr(grad);
  }
  const double sup = sup_over_states(engine, [&](const Configuration& c) { return f(c); });
  finish(r, engine, sup * sup * (1.0 + engine.space().total_mass()));
  return r;
}

namespace {

enum class LsiForm { modified, min_form };

InequalityReport check_lsi(const Engine& engine, const Functional& f, double floor, LsiForm form) {
  InequalityReport r;
  r.name = form == LsiForm::modified ? "modified_lsi" : "min_form_lsi";
  r.parameters["floor"] = fmt(floor);
  std::size_t hits = 0;
  const std::string refusal = positivity_screen(engine, f, floor, hits);
  r.parameters["convention_hits"] = std::to_string(hits);
  if (!refusal.empty()) {
    r.verdict = Verdict::hypothesis_not_met;
    r.note = "refused: " + refusal;
    r.parameters.emplace("mode", to_string(engine.mode()));
    return r;
  }
  const auto& w = engine.space().weights();
  auto integrand = [&](const Configuration& c) {
    const double x = f(c);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double y = f(c.plus(i));
      const double d = y - x;
      if (d == 0.0) continue;  // also covers the 0 log 0 states admitted above
      double term;
      if (form == LsiForm::modified) {
        term = phi(y) - phi(x) - (std::log(x) + 1.0) * d;
      } else {
        const double quad = d * d / x;
        const double cross = y == 0.0 ? std::numeric_limits<double>::infinity()
                                      : d * (std::log(y) - std::log(x));
        term = std::min(quad, cross);
      }
      s += w[i] * term;
    }
    return s;
  };
  const auto m = engine.expect_moments(3, [&](const Configuration& c, std::span<double> v) {
    const double x = f(c);
    v[0] = phi(x);
    v[1] = x;
    v[2] = integrand(c);
  });
  r.lhs = m.mean[0] - phi(m.mean[1]);
  r.rhs = m.mean[2];
  if (!engine.is_exact()) {
    const double grad[3] = {1.0, m.mean[1] > 0 ? -(std::log(m.mean[1]) + 1.0) : 0.0, -1.0};
    r.stderr = m.delta_stderr(grad);
  }
  const double sup = sup_over_states(engine, [&](const Configuration& c) { return phi(f(c)); });
  finish(r, engine, std::max({sup, std::abs(phi(m.mean[1])), std::abs(r.rhs)}));
  return r;
}

}  // namespace

InequalityReport check_modified_lsi(const Engine& engine, const Functional& f, double floor) {
  return check_lsi(engine, f, floor, LsiForm::modified);
}

InequalityReport check_min_form_lsi(const Engine& engine, const Functional& f, double floor) {
  return check_lsi(engine, f, floor, LsiForm::min_form);
}

InequalityReport check_pathwise_lemma(double a, double b, double q) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw PreconditionError("pathwise lemma needs finite a, b >= 0");
  if (!(q > 1.0)) throw PreconditionError("pathwise lemma needs q > 1");
  InequalityReport r;
  r.name = "pathwise_lemma";
  r.parameters = {{"a", fmt(a)}, {"b", fmt(b)}, {"q", fmt(q)}};
  if (a == b) {
    r.lhs = r.rhs = 0.0;
  } else if (b == 0.0) {
    r.lhs = std::numeric_limits<double>::infinity();  // a^{2q} / 0
    r.rhs = std::numeric_limits<double>::infinity();  // max((a/0)^q, 1) = inf
    r.verdict = Verdict::holds;
    r.slack = 0.0;
    r.note = "b = 0: right side is +inf by the 1/0 = inf convention";
    return r;
  } else {
    // Work relative to b with log1p/expm1 so that a close to b keeps full precision.
    const double rel = (a - b) / b;
    const double log_ratio = std::log1p(rel);
    const double bq = std::pow(b, q);
    const double num = std::expm1(q * log_ratio);
    const double lhs_scaled = num * num;
    const double rhs_scaled = q * q / (q - 1.0) * rel * std::expm1((q - 1.0) * log_ratio) *
                              std::max(std::exp(q * log_ratio), 1.0);
    r.lhs = bq * lhs_scaled;
    r.rhs = bq * rhs_scaled;
  }
  r.tolerance = kPathwiseRelativeTolerance * std::abs(r.rhs);
  decide(r);
  return r;
}

PathwiseSweep sweep_pathwise_lemma(std::size_t draws, std::uint64_t seed, double ab_max, double q_max) {
  PathwiseSweep out;
  std::mt19937_64 rng(seed);
  // (0, max]: reflect the half-open [0, max) draw.
  std::uniform_real_distribution<double> ab(0.0, ab_max), qd(0.0, q_max - 1.0);
  for (std::size_t k = 0; k < draws; ++k) {
    const double a = ab_max - ab(rng);
    const double b = ab_max - ab(rng);
    const double q = q_max - qd(rng);
    const auto r = check_pathwise_lemma(a, b, q);
    ++out.draws;
    if (r.verdict == Verdict::violated) ++out.violations;
    if (std::isfinite(r.rhs) && r.rhs > 0.0) out.worst_ratio = std::max(out.worst_ratio, r.lhs / r.rhs);
  }
  return out;
}

InequalityReport check_entropy_power(const Engine& engine, const Functional& g, double q) {
  if (!(q > 1.0)) throw PreconditionError("entropy-power bound needs q > 1");
  InequalityReport r;
  r.name = "entropy_power";
  r.parameters["q"] = fmt(q);
  r.hypothesis_certificates.push_back(certify_monotonicity(g, engine, SignProperty::df_le0));
  const bool negative = engine.sup_abs([&](const Configuration& c) { return std::min(0.0, g(c)); }) > 0.0;
  if (negative) r.note = "G takes negative values";
  const auto& w = engine.space().weights();
  if (!apply_gate(r) || negative) {
    r.verdict = Verdict::hypothesis_not_met;
    r.parameters.emplace("mode", to_string(engine.mode()));
    return r;
  }
  const auto m = engine.expect_moments(3, [&](const Configuration& c, std::span<double> v) {
    const double x = g(c);
    const double xq = std::pow(x, q);
    v[0] = phi(xq);
    v[1] = xq;
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double y = g(c.plus(i));
      s += w[i] * (std::pow(y, q - 1.0) - std::pow(x, q - 1.0)) * (y - x);
    }
    v[2] = s;
  });
  const double factor = q * q / (q - 1.0);
  r.lhs = m.mean[0] - phi(m.mean[1]);
  r.rhs = factor * m.mean[2];
  if (!engine.is_exact()) {
    const double grad[3] = {1.0, m.mean[1] > 0 ? -(std::log(m.mean[1]) + 1.0) : 0.0, -factor};
    r.stderr = m.delta_stderr(grad);
  }
  const double sup = sup_over_states(engine, [&](const Configuration& c) { return phi(std::pow(g(c), q)); });
  finish(r, engine, std::max({sup, std::abs(r.rhs), std::abs(phi(m.mean[1]))}));
  return r;
}

double hypercontractive_exponent(double p, double t) { return 1.0 + (p - 1.0) * std::exp(t); }

InequalityReport check_restricted_hypercontractivity(const Engine& engine, const Functional& f,
                                                     double t, double p) {
  if (!(t >= 0.0)) throw PreconditionError("t must be non-negative");
  if (!(p > 1.0)) throw PreconditionError("p must exceed 1");
  InequalityReport r;
  r.name = "restricted_hypercontractivity";
  const double q = hypercontractive_exponent(p, t);
  r.parameters = {{"p", fmt(p)}, {"q", fmt(q)}, {"t", fmt(t)}};
  r.hypothesis_certificates.push_back(certify_monotonicity(f, engine, SignProperty::df_le0));
  const bool negative = engine.sup_abs([&](const Configuration& c) { return std::min(0.0, f(c)); }) > 0.0;
  if (!apply_gate(r) || negative) {
    if (negative) r.note = "F takes negative values";
    r.verdict = Verdict::hypothesis_not_met;
    r.parameters.emplace("mode", to_string(engine.mode()));
    return r;
  }
  const Functional pt = apply_semigroup(engine, f, t);
  const LpNorm lhs = lp_norm(engine, pt, q);
  const LpNorm rhs = lp_norm(engine, f, p);
  r.lhs = lhs.value;
  r.rhs = rhs.value;
  if (lhs.stderr || rhs.stderr) {
    // d lhs / d E[(P_t F)^q] = lhs^(1-q) / q, and h'(v) = q v^(q-1).
    const double inner = r.lhs > 0.0
                             ? std::pow(r.lhs, 1.0 - q) *
                                   std::sqrt(inner_estimate_variance(engine, f, t, [q](double v) {
                                     return std::pow(std::max(v, 0.0), q - 1.0);
                                   }))
                             : 0.0;
    r.stderr = std::sqrt(std::pow(lhs.stderr.value_or(0.0), 2) + std::pow(rhs.stderr.value_or(0.0), 2) +
                         inner * inner);
  }
  finish(r, engine, r.rhs);
  return r;
}

InequalityReport check_weak_hypercontractivity(const Engine& engine, const Functional& f, double t) {
  if (!(t >= 0.0)) throw PreconditionError("t must be non-negative");
  InequalityReport r;
  r.name = "weak_hypercontractivity";
  r.parameters = {{"t", fmt(t)}};
  const Functional pt = apply_semigroup(engine, f, t);
  const double order = std::exp(t);
  const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> v) {
    v[0] = std::exp(order * pt(c));
    v[1] = std::exp(f(c));
  });
  r.lhs = std::pow(m.mean[0], 1.0 / order);
  r.rhs = m.mean[1];
  if (!engine.is_exact()) {
    const double grad[2] = {std::pow(m.mean[0], 1.0 / order - 1.0) / order, -1.0};
    const double outer = m.delta_stderr(grad);
    const double inner = grad[0] * std::sqrt(inner_estimate_variance(
                                       engine, f, t, [order](double v) { return order * std::exp(order * v); }));
    r.stderr = std::sqrt(outer * outer + inner * inner);
  }
  finish(r, engine, r.rhs);
  return r;
}

TalagrandTerms talagrand_terms(const Engine& engine, const Functional& f, double constant) {
  const auto& w = engine.space().weights();
  const std::size_t n = w.size();
  const auto m = engine.expect_moments(2 * n, [&](const Configuration& c, std::span<double> v) {
    const double base = f(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = f(c.plus(i)) - base;
      v[2 * i] = std::abs(d);
      v[2 * i + 1] = d * d;
    }
  });
  TalagrandTerms out;
  for (std::size_t i = 0; i < n; ++i) {
    const double l1 = m.mean[2 * i];
    const double l2sq = m.mean[2 * i + 1];
    const double l2 = std::sqrt(l2sq);
    out.l1.push_back(l1);
    out.l2.push_back(l2);
    out.poincare_term.push_back(w[i] * l2sq);
    // Zero-derivative atoms contribute 0; the integrand is bounded by ||D_i F||_2^2.
    const double term = l2 == 0.0 ? 0.0 : constant * w[i] * l2sq / (1.0 + std::log(l2 / l1));
    out.term.push_back(term);
    out.rhs += term;
  }
  return out;
}

double talagrand_bound(const Engine& engine, const Functional& f, double constant) {
  return talagrand_terms(engine, f, constant).rhs;
}

std::vector<MonotonicityCertificate> talagrand_hypotheses(const Functional& f, const Engine& engine) {
  auto up = certify_monotonicity(f, engine, SignProperty::df_ge0);
  if (up.holds()) {
    auto concave = certify_monotonicity(f, engine, SignProperty::d2f_le0);
    if (concave.holds()) return {up, concave};
    auto down = certify_monotonicity(f, engine, SignProperty::df_le0);
    if (down.holds()) {
      // D F = 0 everywhere: both branches apply.
      auto convex = certify_monotonicity(f, engine, SignProperty::d2f_ge0);
      if (convex.holds()) return {down, convex};
    }
    return {up, concave};
  }
  auto down = certify_monotonicity(f, engine, SignProperty::df_le0);
  if (!down.holds()) return {up, down};
  return {down, certify_monotonicity(f, engine, SignProperty::d2f_ge0)};
}

InequalityReport check_talagrand(const Engine& engine, const Functional& f, TalagrandOptions options) {
  InequalityReport r;
  r.name = "talagrand";
  r.parameters["constant"] = fmt(options.constant);
  r.hypothesis_certificates = talagrand_hypotheses(f, engine);
  const bool gate_ok = apply_gate(r);
  if (!gate_ok && !options.bypass_gate) {
    r.parameters.emplace("mode", to_string(engine.mode()));
    return r;
  }
  if (!gate_ok) {
    r.verdict = Verdict::holds;
    r.intentional_violation_demo = true;
    r.note = "hypotheses bypassed: counterexample demonstration";
  }
  const auto terms = talagrand_terms(engine, f, options.constant);
  r.rhs = terms.rhs;
  if (engine.is_exact()) {
    r.lhs = exact_variance(engine, f);
  } else {
    const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> v) {
      v[0] = f(c);
      v[1] = v[0] * v[0];
    });
    r.lhs = m.mean[1] - m.mean[0] * m.mean[0];
    const double grad[2] = {-2.0 * m.mean[0], 1.0};
    r.stderr = m.delta_stderr(grad);
    r.note += r.note.empty() ? "stderr covers the variance only" : "; stderr covers the variance only";
  }
  const double sup = sup_over_states(engine, [&](const Configuration& c) { return f(c); });
  finish(r, engine, sup * sup * (1.0 + engine.space().total_mass()));
  return r;
}

double l1_alpha(double sup_norm) {
  return 2.0 * sup_norm > 1.0 ? 1.0 : 2.0 / (std::numbers::e + 1.0);
}

double l1_atom_term(double m) {
  if (m == 0.0) return 0.0;
  const double small = 2.0 / (1.0 + std::log(1.0 / m));
  if (m < 1.0) return small;
  if (m > 1.0) return m;
  return std::min(small, m);
}

InequalityReport l1_variance_bound(const Engine& engine, const Functional& f) {
  if (!f.bounded_by()) throw PreconditionError("L1 variance bound needs a bounded functional");
  InequalityReport r;
  r.name = "l1_variance";
  r.hypothesis_certificates = talagrand_hypotheses(f, engine);
  const bool gate_ok = apply_gate(r);
  const auto& w = engine.space().weights();
  const double sup = engine.sup_abs([&](const Configuration& c) { return f(c); });
  const double alpha = l1_alpha(sup);
  r.parameters = {{"alpha", fmt(alpha)}, {"sup_norm", fmt(sup)}};
  const auto m = engine.expect_moments(w.size(), [&](const Configuration& c, std::span<double> v) {
    const double base = f(c);
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = std::abs(f(c.plus(i)) - base);
  });
  double integral = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) integral += w[i] * l1_atom_term(m.mean[i]);
  r.rhs = 11.0 * std::pow(2.0 * sup, alpha) * integral;
  r.lhs = exact_variance(engine, f);
  if (!gate_ok) {
    r.parameters.emplace("mode", to_string(engine.mode()));
    r.slack = r.rhs - r.lhs;
    return r;
  }
  finish(r, engine, sup * sup);
  return r;
}

std::vector<InequalityReport> check_concentration(const Engine& engine, const Functional& f,
                                                  const std::vector<double>& thresholds) {
  const auto cert = certify_monotonicity(f, engine, SignProperty::df_le0);
  const auto& w = engine.space().weights();
  double alpha_sq = 0.0;
  engine.for_each_weighted([&](const Configuration& c, double) {
    const double base = f(c);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = f(c.plus(i)) - base;
      s += w[i] * d * d;
    }
    alpha_sq = std::max(alpha_sq, s);
  });
  const double mean = engine.expect([&](const Configuration& c) { return f(c); }).value;
  std::vector<InequalityReport> out;
  for (double t : thresholds) {
    if (!(t > 0.0)) throw PreconditionError("concentration thresholds must be positive");
    InequalityReport r;
    r.name = "concentration";
    r.parameters = {{"alpha_sq", fmt(alpha_sq)}, {"threshold", fmt(t)}};
    r.hypothesis_certificates.push_back(cert);
    if (!apply_gate(r)) {
      r.parameters.emplace("mode", to_string(engine.mode()));
      out.push_back(std::move(r));
      continue;
    }
    const Estimate tail = engine.probability([&](const Configuration& c) { return f(c) - mean > t; });
    r.lhs = tail.value;
    r.stderr = tail.stderr;
    r.rhs = alpha_sq > 0.0 ? std::exp(-t * t / (2.0 * alpha_sq)) : 0.0;
    r.note = "alpha^2 is the sup over probed states";
    finish(r, engine, 1.0);
    out.push_back(std::move(r));
  }
  return out;
}

LsiFailure check_lsi_failure(int k_max) {
  if (k_max < 1) throw PreconditionError("k_max must be at least 1");
  LsiFailure out;
  for (int k = 1; k <= k_max; ++k) {
    LsiFailureRow row;
    row.k = k;
    row.tail = poisson_upper_tail(k, 1.0);
    row.pmf = poisson_pmf(k, 1.0);
    row.ratio = -row.tail * std::log(row.tail) / row.pmf;
    out.rows.push_back(row);
  }
  out.increasing_from = k_max;
  for (int idx = k_max - 1; idx > 0; --idx) {
    if (out.rows[static_cast<std::size_t>(idx)].ratio > out.rows[static_cast<std::size_t>(idx - 1)].ratio)
      out.increasing_from = idx;  // rows[idx-1] -> k = idx
    else
      break;
  }
  if (k_max > 1 && out.rows[1].ratio > out.rows[0].ratio && out.increasing_from == 1)
    out.increasing_from = 1;
  return out;
}

}  // namespace pspace
