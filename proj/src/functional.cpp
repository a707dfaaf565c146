#include "pspace/functional.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pspace {

const char* to_string(Sign s) {
  switch (s) {
    case Sign::nonneg: return "nonneg";
    case Sign::nonpos: return "nonpos";
    case Sign::zero: return "zero";
    case Sign::unknown: break;
  }
  return "unknown";
}

namespace {

std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Sign scale_sign(Sign s, double a) {
  if (a == 0.0 || s == Sign::zero) return Sign::zero;
  if (s == Sign::unknown || a > 0.0) return s;
  return s == Sign::nonneg ? Sign::nonpos : Sign::nonneg;
}

Sign combine_sign(Sign a, Sign b) {
  if (a == Sign::zero) return b;
  if (b == Sign::zero) return a;
  return a == b ? a : Sign::unknown;
}

}  // namespace

Functional::Functional(Rule rule, std::string description)
    : rule_(std::move(rule)), description_(std::move(description)) {
  if (!rule_) throw PreconditionError("functional needs an evaluation rule");
}

double Functional::operator()(const Configuration& c) const {
  const double v = rule_(c);
  if (!std::isfinite(v))
    throw NonFiniteValue(description_ + " is not finite at " + to_string(c));
  if (bounded_by_ && std::abs(v) > *bounded_by_ * (1.0 + 1e-12))
    throw PreconditionError(description_ + " exceeds its declared bound at " + to_string(c));
  return v;
}

Functional Functional::with_signs(Sign df, Sign d2f) const {
  Functional out = *this;
  out.sign_df_ = df;
  out.sign_d2f_ = d2f;
  return out;
}

Functional Functional::with_bound(double bound) const {
  if (!(bound >= 0.0)) throw PreconditionError("bound must be non-negative");
  Functional out = *this;
  out.bounded_by_ = bound;
  return out;
}

Functional Functional::with_description(std::string description) const {
  Functional out = *this;
  out.description_ = std::move(description);
  return out;
}

Functional Functional::constant(double value) {
  return Functional([value](const Configuration&) { return value; },
                    "const(" + fmt_number(value) + ")")
      .with_signs(Sign::zero, Sign::zero)
      .with_bound(std::abs(value));
}

Functional Functional::count(std::size_t atom) {
  return Functional([atom](const Configuration& c) { return static_cast<double>(c.counts.at(atom)); },
                    "count(" + std::to_string(atom) + ")")
      .with_signs(Sign::nonneg, Sign::zero);
}

Functional Functional::count_squared(std::size_t atom) {
  return Functional(
             [atom](const Configuration& c) {
               const double n = c.counts.at(atom);
               return n * n;
             },
             "count_sq(" + std::to_string(atom) + ")")
      .with_signs(Sign::nonneg, Sign::nonneg);
}

Functional Functional::indicator_le(std::size_t atom, int k) {
  return Functional([atom, k](const Configuration& c) { return c.counts.at(atom) <= k ? 1.0 : 0.0; },
                    "indicator_le(" + std::to_string(atom) + "," + std::to_string(k) + ")")
      .with_signs(Sign::nonpos, Sign::unknown)
      .with_bound(1.0);
}

Functional Functional::indicator_ge(std::size_t atom, int k) {
  return Functional([atom, k](const Configuration& c) { return c.counts.at(atom) >= k ? 1.0 : 0.0; },
                    "indicator_ge(" + std::to_string(atom) + "," + std::to_string(k) + ")")
      .with_signs(Sign::nonneg, Sign::unknown)
      .with_bound(1.0);
}

Functional Functional::exp_neg(double a, std::size_t atom) {
  Functional f([a, atom](const Configuration& c) { return std::exp(-a * c.counts.at(atom)); },
               "exp_neg(" + fmt_number(a) + "," + std::to_string(atom) + ")");
  if (a >= 0.0) return f.with_signs(Sign::nonpos, Sign::nonneg).with_bound(1.0);
  return f.with_signs(Sign::nonneg, Sign::nonneg);
}

Functional Functional::tabulated(std::size_t atom, std::vector<double> values) {
  if (values.empty()) throw PreconditionError("table needs at least one value");
  double bound = 0.0;
  bool nondecreasing = true, nonincreasing = true, convex = true, concave = true;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (!std::isfinite(values[n])) throw NonFiniteValue("table values must be finite");
    bound = std::max(bound, std::abs(values[n]));
    if (n + 1 < values.size()) {
      nondecreasing &= values[n + 1] >= values[n];
      nonincreasing &= values[n + 1] <= values[n];
    }
  }
  // Second differences, including the flat continuation past the table.
  auto at = [&](std::size_t n) { return values[std::min(n, values.size() - 1)]; };
  for (std::size_t n = 0; n < values.size(); ++n) {
    const double d2 = at(n + 2) - 2.0 * at(n + 1) + at(n);
    convex &= d2 >= 0.0;
    concave &= d2 <= 0.0;
  }
  const Sign df = nondecreasing && nonincreasing ? Sign::zero
                  : nondecreasing                  ? Sign::nonneg
                  : nonincreasing                  ? Sign::nonpos
                                                   : Sign::unknown;
  const Sign d2f = convex && concave ? Sign::zero
                   : convex           ? Sign::nonneg
                   : concave          ? Sign::nonpos
                                      : Sign::unknown;
  std::string desc = "table(" + std::to_string(atom);
  for (double v : values) desc += "," + fmt_number(v);
  desc += ")";
  auto shared = std::make_shared<const std::vector<double>>(std::move(values));
  return Functional(
             [atom, shared](const Configuration& c) {
               const auto n = static_cast<std::size_t>(c.counts.at(atom));
               return (*shared)[std::min(n, shared->size() - 1)];
             },
             std::move(desc))
      .with_signs(df, d2f)
      .with_bound(bound);
}

Functional Functional::cumulative(std::size_t atom, std::vector<double> g) {
  if (g.empty()) throw PreconditionError("cumulative functional needs at least one g value");
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!(g[j] >= 0.0) || !std::isfinite(g[j]))
      throw PreconditionError("g must be non-negative and finite");
    if (j > 0 && g[j] > g[j - 1]) throw PreconditionError("g must be non-increasing");
  }
  std::vector<double> prefix(g.size() + 1, 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) prefix[j + 1] = prefix[j] + g[j];
  const double last = g.back();
  std::string desc = "cumsum_g(" + std::to_string(atom);
  for (double v : g) desc += "," + fmt_number(v);
  desc += ")";
  auto shared = std::make_shared<const std::vector<double>>(std::move(prefix));
  Functional f(
      [atom, shared, last](const Configuration& c) {
        const auto n = static_cast<std::size_t>(c.counts.at(atom));
        const std::size_t len = shared->size() - 1;
        if (n <= len) return (*shared)[n];
        return shared->back() + static_cast<double>(n - len) * last;
      },
      std::move(desc));
  f = f.with_signs(Sign::nonneg, Sign::nonpos);
  if (last == 0.0) f = f.with_bound(shared->back());
  return f;
}

Functional operator+(const Functional& f, const Functional& g) {
  return affine({{1.0, f}, {1.0, g}});
}

Functional operator-(const Functional& f, const Functional& g) {
  return affine({{1.0, f}, {-1.0, g}});
}

Functional operator*(double a, const Functional& f) { return affine({{a, f}}); }

Functional operator+(const Functional& f, double b) { return affine({{1.0, f}}, b); }

Functional affine(const std::vector<std::pair<double, Functional>>& terms, double offset) {
  std::string desc;
  Sign df = Sign::zero, d2f = Sign::zero;
  double bound = std::abs(offset);
  bool bounded = true;
  bool first = true;
  for (const auto& [a, f] : terms) {
    desc += (first ? "" : " + ") + fmt_number(a) + "*" + f.description();
    first = false;
    df = combine_sign(df, scale_sign(f.declared_sign_df(), a));
    d2f = combine_sign(d2f, scale_sign(f.declared_sign_d2f(), a));
    if (bounded && f.bounded_by()) bound += std::abs(a) * *f.bounded_by();
    else bounded = false;
  }
  if (offset != 0.0 || terms.empty()) desc += (first ? "" : " + ") + fmt_number(offset);
  Functional out(
      [terms, offset](const Configuration& c) {
        double v = offset;
        for (const auto& [a, f] : terms) v += a * f(c);
        return v;
      },
      std::move(desc));
  out = out.with_signs(df, d2f);
  if (bounded) out = out.with_bound(bound);
  return out;
}

Functional map(const Functional& f, std::function<double(double)> phi, std::string description) {
  return Functional([f, phi = std::move(phi)](const Configuration& c) { return phi(f(c)); },
                    std::move(description));
}

Functional power(const Functional& f, double q) {
  Functional out(
      [f, q](const Configuration& c) {
        const double v = f(c);
        if (v < 0.0) throw PreconditionError("power of a negative value at " + to_string(c));
        return std::pow(v, q);
      },
      "pow(" + f.description() + "," + fmt_number(q) + ")");
  // x -> x^q is increasing on [0,inf) for q > 0, so the sign of D F carries over.
  if (q > 0.0) out = out.with_signs(f.declared_sign_df(), Sign::unknown);
  if (f.bounded_by() && q > 0.0) out = out.with_bound(std::pow(*f.bounded_by(), q));
  return out;
}

Functional product(const Functional& f, const Functional& g) {
  Functional out([f, g](const Configuration& c) { return f(c) * g(c); },
                 "(" + f.description() + ")*(" + g.description() + ")");
  if (f.bounded_by() && g.bounded_by()) out = out.with_bound(*f.bounded_by() * *g.bounded_by());
  return out;
}

Functional difference(const Functional& f, std::size_t atom) {
  Functional out([f, atom](const Configuration& c) { return add_one_cost(f, c, atom); },
                 "D" + std::to_string(atom) + "(" + f.description() + ")");
  if (f.bounded_by()) out = out.with_bound(2.0 * *f.bounded_by());
  return out;
}

double add_one_cost(const Functional& f, const Configuration& c, std::size_t atom) {
  return f(c.plus(atom)) - f(c);
}

double add_one_cost(const Functional& f, const Configuration& c, std::size_t atom,
                    const TruncatedStateSpace& trunc) {
  if (!trunc.contains(c))
    throw CapOverflow("add-one cost at " + to_string(c) + " leaves the evaluation caps");
  return add_one_cost(f, c, atom);
}

double second_difference(const Functional& f, const Configuration& c, std::size_t i, std::size_t j) {
  const Configuration ci = c.plus(i);
  return f(ci.plus(j)) - f(ci) - f(c.plus(j)) + f(c);
}

double second_difference(const Functional& f, const Configuration& c, std::size_t i, std::size_t j,
                         const TruncatedStateSpace& trunc) {
  if (!trunc.contains(c))
    throw CapOverflow("second difference at " + to_string(c) + " leaves the evaluation caps");
  return second_difference(f, c, i, j);
}

const char* to_string(SignProperty p) {
  switch (p) {
    case SignProperty::df_le0: return "DF<=0";
    case SignProperty::df_ge0: return "DF>=0";
    case SignProperty::d2f_le0: return "D2F<=0";
    case SignProperty::d2f_ge0: return "D2F>=0";
  }
  return "?";
}

const char* to_string(CertificateKind k) { return k == CertificateKind::exact ? "exact" : "sampled"; }

std::string to_string(const MonotonicityCertificate& cert) {
  std::ostringstream os;
  os << to_string(cert.kind) << ':' << to_string(cert.property) << ':';
  if (cert.holds()) {
    os << "ok(states=" << cert.states_checked << ')';
  } else {
    const auto& w = *cert.witness;
    os << "witness(state=" << to_string(w.state) << ",i=" << w.atom_i;
    if (w.atom_j) os << ",j=" << *w.atom_j;
    os.precision(17);
    os << ",value=" << w.value << ')';
  }
  return os.str();
}

namespace {

bool is_second_order(SignProperty p) {
  return p == SignProperty::d2f_le0 || p == SignProperty::d2f_ge0;
}

bool violates(SignProperty p, double value, double scale) {
  const double tol = kSignTolerance * std::max(1.0, scale);
  switch (p) {
    case SignProperty::df_le0:
    case SignProperty::d2f_le0: return value > tol;
    case SignProperty::df_ge0:
    case SignProperty::d2f_ge0: return value < -tol;
  }
  return false;
}

// Checks one state; returns a witness on the first violation.
std::optional<SignWitness> check_state(const Functional& f, const Configuration& c,
                                       SignProperty property) {
  const std::size_t m = c.size();
  const double base = f(c);
  if (!is_second_order(property)) {
    for (std::size_t i = 0; i < m; ++i) {
      const double up = f(c.plus(i));
      const double d = up - base;
      if (violates(property, d, std::max(std::abs(up), std::abs(base))))
        return SignWitness{c, i, std::nullopt, d};
    }
    return std::nullopt;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const Configuration ci = c.plus(i);
    const double fi = f(ci);
    for (std::size_t j = i; j < m; ++j) {
      const double fij = f(ci.plus(j));
      const double fj = j == i ? fi : f(c.plus(j));
      const double d2 = fij - fi - fj + base;
      const double scale =
          std::max({std::abs(fij), std::abs(fi), std::abs(fj), std::abs(base)});
      if (violates(property, d2, scale)) return SignWitness{c, i, j, d2};
    }
  }
  return std::nullopt;
}

}  // namespace

MonotonicityCertificate certify_monotonicity(const Functional& f, const TruncatedStateSpace& trunc,
                                             SignProperty property) {
  MonotonicityCertificate cert{CertificateKind::exact, property, 0, std::nullopt};
  // Cannot break out of for_each_state, so index directly.
  for (std::size_t idx = 0; idx < trunc.state_count(); ++idx) {
    const Configuration c = trunc.configuration(idx);
    ++cert.states_checked;
    if (auto w = check_state(f, c, property)) {
      cert.witness = std::move(w);
      break;
    }
  }
  return cert;
}

MonotonicityCertificate certify_monotonicity_sampled(const Functional& f, const GroundSpace& space,
                                                     SignProperty property, std::size_t samples,
                                                     std::uint64_t seed) {
  MonotonicityCertificate cert{CertificateKind::sampled, property, 0, std::nullopt};
  for (std::size_t r = 0; r < samples; ++r) {
    const Configuration c = sample_configuration(space, derive_seed(seed, r));
    ++cert.states_checked;
    if (auto w = check_state(f, c, property)) {
      cert.witness = std::move(w);
      break;
    }
  }
  return cert;
}

MonotonicityCertificate certify_monotonicity(const Functional& f, const Engine& engine,
                                             SignProperty property) {
  if (engine.is_exact()) return certify_monotonicity(f, engine.truncation(), property);
  MonotonicityCertificate cert{CertificateKind::sampled, property, 0, std::nullopt};
  for (const auto& c : engine.samples()) {
    ++cert.states_checked;
    if (auto w = check_state(f, c, property)) {
      cert.witness = std::move(w);
      break;
    }
  }
  return cert;
}

bool witness_reproduces(const Functional& f, const MonotonicityCertificate& cert) {
  if (!cert.witness) return false;
  const auto& w = *cert.witness;
  const double v = w.atom_j ? second_difference(f, w.state, w.atom_i, *w.atom_j)
                            : add_one_cost(f, w.state, w.atom_i);
  return v == w.value;
}

Estimate gamma_expectation(const Functional& f, const Functional& g, const Engine& engine) {
  const auto& weights = engine.space().weights();
  return engine.expect([&](const Configuration& c) {
    const double fc = f(c), gc = g(c);
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const Configuration ci = c.plus(i);
      s += weights[i] * (f(ci) - fc) * (g(ci) - gc);
    }
    return s;
  });
}

}  // namespace pspace
