#pragma once

// Worked reductions with closed forms: maxima of a Poisson sample, the
// one-dimensional cumulative functionals and their counterexample, and the
// exponential functional near-optimality table.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pspace/functional.hpp"

namespace pspace::examples {

enum class MaximaMode { analytic, monte_carlo };

struct MaximaModel {
  /// Mass outside the ball, n * mu(B(0, t)^c).
  double m = 1.0;
  MaximaMode mode = MaximaMode::analytic;
  /// r -> mu(|x| > r), non-increasing with values in [0, 1].
  std::function<double(double)> radial_tail;
  /// Optional inverse of radial_tail on (0, 1); bisection is used without it.
  std::function<double(double)> radial_quantile;
};

struct MaximaClosedForms {
  double m = 0.0;
  double variance = 0.0;
  double poincare_rhs = 0.0;
  double talagrand_rhs = 0.0;
  double dx_l1 = 0.0;      // ||D_z F||_1 for z outside the ball
  double dx_l2 = 0.0;      // ||D_z F||_2
  double log_ratio = 0.0;  // log(||D_z F||_2 / ||D_z F||_1)
};

MaximaClosedForms maxima_closed_forms(const MaximaModel& model);

struct MaximaSimulation {
  double m = 0.0;
  std::size_t replications = 0;
  MaximaClosedForms closed;
  double variance_radial = 0.0, variance_radial_stderr = 0.0;
  double energy_radial = 0.0, energy_radial_stderr = 0.0;  // m P[no point outside]
  double variance_full = 0.0, variance_full_stderr = 0.0;
  bool radial_matches_closed = false;
  bool energy_matches_closed = false;
  bool routes_agree = false;
};

MaximaSimulation maxima_monte_carlo(const MaximaModel& model, double n_points_intensity, double t,
                                    std::size_t replications, std::uint64_t seed);

/// G(0) = 0, G(n) = sum_{j<n} g(j) on a single atom of weight lambda.
Functional one_dim_cumulative(const std::vector<double>& g, double lambda);

struct OneDimComparison {
  double lambda = 0.0;
  double variance = 0.0;
  double poincare_rhs = 0.0;   // lambda E[g(X)^2]
  double talagrand_rhs = 0.0;  // 2 lambda E[g(X)^2] / (1 + log(||g||_2 / ||g||_1))
  double g_l1 = 0.0;
  double g_l2 = 0.0;
  double log_ratio = 0.0;
  double talagrand_over_poincare = 0.0;
};

OneDimComparison one_dim_bound_comparison(const std::vector<double>& g, double lambda);
std::vector<OneDimComparison> one_dim_lambda_grid(const std::vector<double>& g,
                                                  const std::vector<double>& lambdas);

/// g = 1{j <= M}, written with its trailing zero.
std::vector<double> indicator_sequence(int M);

struct FkRecord {
  int k = 0;
  double lambda = 1.0;
  double variance = 0.0;       // pi([0, k-1]) pi([k, inf))
  double e_df = 0.0;           // E|D F_k| = pi(k-1)
  double e_df_sq = 0.0;        // E[(D F_k)^2] = pi(k-1)
  double denom = 0.0;          // 1 + (1/2) log(1 / pi(k-1))
  double lhs_over_rhs = 0.0;   // against the displayed constant 1/2
  double lhs_over_rhs_c2 = 0.0;  // against the constant 2
};

/// F_k = 1{c <= k-1} on one atom.
FkRecord counterexample_fk(int k, double lambda = 1.0);

struct FkScan {
  std::vector<FkRecord> rows;
  /// Smallest k with lhs_over_rhs > 1 on all of [k, k_max].
  std::optional<int> k0;
  /// Smallest k from which lhs_over_rhs is strictly increasing up to k_max.
  std::optional<int> increasing_from;
  /// First k where the constant-2 ratio exceeds 1.
  std::optional<int> first_above_one_c2;
};

FkScan scan_counterexample(int k_max, double lambda = 1.0);

struct NearOptimalityRow {
  double a = 0.0, q = 0.0;
  double lhs = 0.0;  // 1 - aq e^{-aq} - e^{-aq}
  double rhs = 0.0;  // q^2/(q-1) (1 - e^{-a})(1 - e^{-(q-1)a})
  double ratio = 0.0;
};

struct NearOptimalityTable {
  double gamma = 1.0;
  std::vector<NearOptimalityRow> rows;
  double min_ratio = 0.0;
  bool all_at_least_one = false;
};

NearOptimalityTable near_optimality_scan(const std::vector<double>& a_grid,
                                         const std::vector<double>& q_grid, double gamma);

/// Entropy and Gamma sides for G = e^{-a c}, one atom of weight gamma, in closed form and by engine.
struct NearOptimalityCrossCheck {
  double closed_entropy = 0.0;
  double engine_entropy = 0.0;
  double closed_rhs = 0.0;
  double engine_rhs = 0.0;
  double closed_moment = 0.0;  // E[G^q] = exp(gamma (e^{-qa} - 1))
  double engine_moment = 0.0;
};

NearOptimalityCrossCheck near_optimality_cross_check(double a, double q, double gamma,
                                                     double tail_mass = 1e-12);

std::string to_csv(const MaximaClosedForms& row);
std::string to_csv(const std::vector<OneDimComparison>& rows);
std::string to_csv(const FkScan& scan);
std::string to_csv(const NearOptimalityTable& table);

}  // namespace pspace::examples
