#pragma once

// Functionals of configurations, the add-one-cost operator and its second
// difference, sign certification, and the carre-du-champ expectation.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pspace/engine.hpp"
#include "pspace/ground.hpp"

namespace pspace {

/// Declared sign of a difference; `zero` means identically zero.
enum class Sign { nonneg, nonpos, zero, unknown };

const char* to_string(Sign s);

/// A real-valued rule on configurations, with optional declared structure.
///
/// The rule must be total on every configuration the engine may probe: the
/// truncated states, their one- and two-point extensions, and (for P_t) the
/// states reachable by adding a truncated Poisson refresh.
class Functional {
 public:
  using Rule = std::function<double(const Configuration&)>;

  Functional(Rule rule, std::string description);

  double operator()(const Configuration& c) const;

  const std::string& description() const { return description_; }
  Sign declared_sign_df() const { return sign_df_; }
  Sign declared_sign_d2f() const { return sign_d2f_; }
  std::optional<double> bounded_by() const { return bounded_by_; }

  Functional with_signs(Sign df, Sign d2f) const;
  Functional with_bound(double bound) const;
  Functional with_description(std::string description) const;

  static Functional constant(double value);
  static Functional count(std::size_t atom);
  static Functional count_squared(std::size_t atom);
  /// 1{c_atom <= k}
  static Functional indicator_le(std::size_t atom, int k);
  /// 1{c_atom >= k}
  static Functional indicator_ge(std::size_t atom, int k);
  /// exp(-a * c_atom)
  static Functional exp_neg(double a, std::size_t atom);
  /// values[c_atom], extended by the last value beyond the table.
  static Functional tabulated(std::size_t atom, std::vector<double> values);
  /// G(n) = sum_{j<n} g(j) with g extended by its last value; g must be
  /// non-negative and non-increasing.
  static Functional cumulative(std::size_t atom, std::vector<double> g);

 private:
  Rule rule_;
  std::string description_;
  Sign sign_df_ = Sign::unknown;
  Sign sign_d2f_ = Sign::unknown;
  std::optional<double> bounded_by_;
};

Functional operator+(const Functional& f, const Functional& g);
Functional operator-(const Functional& f, const Functional& g);
Functional operator*(double a, const Functional& f);
Functional operator+(const Functional& f, double b);

/// sum_k coeff_k * F_k + offset
Functional affine(const std::vector<std::pair<double, Functional>>& terms, double offset = 0.0);
/// Pointwise composition x -> phi(F(x)).
Functional map(const Functional& f, std::function<double(double)> phi, std::string description);
/// F^q; F must be non-negative where evaluated.
Functional power(const Functional& f, double q);
Functional product(const Functional& f, const Functional& g);
/// The functional c -> D_atom F(c).
Functional difference(const Functional& f, std::size_t atom);

/// D_i F(c) = F(c + e_i) - F(c)
double add_one_cost(const Functional& f, const Configuration& c, std::size_t atom);
/// Checked variant: c must lie within the truncation caps, so that c + e_i
/// stays within the evaluation caps (caps extended by one).
double add_one_cost(const Functional& f, const Configuration& c, std::size_t atom,
                    const TruncatedStateSpace& trunc);
/// D^2_{i,j} F(c) = F(c+e_i+e_j) - F(c+e_i) - F(c+e_j) + F(c)
double second_difference(const Functional& f, const Configuration& c, std::size_t i, std::size_t j);
double second_difference(const Functional& f, const Configuration& c, std::size_t i, std::size_t j,
                         const TruncatedStateSpace& trunc);

enum class SignProperty { df_le0, df_ge0, d2f_le0, d2f_ge0 };
enum class CertificateKind { exact, sampled };

const char* to_string(SignProperty p);
const char* to_string(CertificateKind k);

struct SignWitness {
  Configuration state;
  std::size_t atom_i = 0;
  std::optional<std::size_t> atom_j;  // set for second-difference properties
  double value = 0.0;
};

struct MonotonicityCertificate {
  CertificateKind kind = CertificateKind::exact;
  SignProperty property = SignProperty::df_le0;
  std::size_t states_checked = 0;
  std::optional<SignWitness> witness;

  bool holds() const { return !witness.has_value(); }
};

std::string to_string(const MonotonicityCertificate& cert);

/// Relative tolerance for sign decisions, scaled by the magnitude of the
/// values entering the difference.
inline constexpr double kSignTolerance = 1e-12;

/// Exhaustive check over every truncated state and every atom (pair).
MonotonicityCertificate certify_monotonicity(const Functional& f, const TruncatedStateSpace& trunc,
                                             SignProperty property);
/// Check over `samples` configurations drawn from the Poisson law.
MonotonicityCertificate certify_monotonicity_sampled(const Functional& f, const GroundSpace& space,
                                                     SignProperty property, std::size_t samples,
                                                     std::uint64_t seed);
/// Exact engines certify exhaustively; Monte Carlo engines over their sample.
MonotonicityCertificate certify_monotonicity(const Functional& f, const Engine& engine,
                                             SignProperty property);

/// Re-evaluates the witness; true when the recorded violation is reproduced.
bool witness_reproduces(const Functional& f, const MonotonicityCertificate& cert);

/// sum_i w_i E[D_i F * D_i G]
Estimate gamma_expectation(const Functional& f, const Functional& g, const Engine& engine);

}  // namespace pspace
