#include "pspace/worked_examples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pspace/engine.hpp"
#include "pspace/inequalities.hpp"

namespace pspace::examples {

namespace {

// Sample mean and variance with the large-sample stderr of each.
struct Moments {
  std::vector<double> xs;

  double mean() const {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  }
  double mean_stderr() const { return std::sqrt(variance() / static_cast<double>(xs.size())); }
  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return s / static_cast<double>(xs.size() - 1);
  }
  double variance_stderr() const {
    const double mu = mean();
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      const double d = (x - mu) * (x - mu);
      m2 += d;
      m4 += d * d;
    }
    const double n = static_cast<double>(xs.size());
    m2 /= n;
    m4 /= n;
    return std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  }
};

void validate_radial_tail(const std::function<double(double)>& tail, double t) {
  if (!tail) throw PreconditionError("maxima Monte Carlo needs a radial tail");
  std::vector<double> grid{0.0, t};
  for (double r = 1e-3; r <= 1e4; r *= 1.5) grid.push_back(r);
  std::sort(grid.begin(), grid.end());
  double previous = 1.0;
  for (double r : grid) {
    const double v = tail(r);
    if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("radial tail must take values in [0, 1]");
    if (v > previous) throw PreconditionError("radial tail must be non-increasing");
    previous = v;
  }
}

// Inverse transform: the radius r with tail(r) = u, by bisection.
double radius_by_bisection(const std::function<double(double)>& tail, double u) {
  if (tail(0.0) <= u) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (tail(hi) > u) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > u ? lo : hi) = mid;
  }
  return hi;
}

bool within(double a, double b, double se) { return std::abs(a - b) <= kStatZ * se; }

}  // namespace

MaximaClosedForms maxima_closed_forms(const MaximaModel& model) {
  const double m = model.m;
  if (!(m > 0.0) || !std::isfinite(m)) throw PreconditionError("maxima model needs m > 0");
  MaximaClosedForms out;
  out.m = m;
  const double p0 = std::exp(-m);
  out.variance = p0 * -std::expm1(-m);
  out.poincare_rhs = m * p0;
  out.dx_l1 = p0;
  out.dx_l2 = std::exp(-m / 2.0);
  out.log_ratio = m / 2.0;
  out.talagrand_rhs = kTalagrandConstant * m * p0 / (1.0 + out.log_ratio);
  return out;
}

MaximaSimulation maxima_monte_carlo(const MaximaModel& model, double n_points_intensity, double t,
                                    std::size_t replications, std::uint64_t seed) {
  if (model.mode != MaximaMode::monte_carlo)
    throw PreconditionError("maxima Monte Carlo needs a monte-carlo model");
  if (!(n_points_intensity > 0.0)) throw PreconditionError("intensity n must be positive");
  if (!(t >= 0.0)) throw PreconditionError("radius t must be non-negative");
  if (replications < 2) throw PreconditionError("at least two replications are needed");
  validate_radial_tail(model.radial_tail, t);

  MaximaSimulation out;
  out.replications = replications;
  out.m = n_points_intensity * model.radial_tail(t);
  MaximaModel reduced = model;
  reduced.m = out.m;
  if (out.m > 0.0) out.closed = maxima_closed_forms(reduced);

  Moments radial, energy, full;
  radial.xs.reserve(replications);
  energy.xs.reserve(replications);
  full.xs.reserve(replications);

  std::mt19937_64 rng_radial(derive_seed(seed, 1));
  std::poisson_distribution<long> outside(out.m > 0.0 ? out.m : 1.0);
  for (std::size_t r = 0; r < replications; ++r) {
    const long k = out.m > 0.0 ? outside(rng_radial) : 0;
    const double f = k > 0 ? 1.0 : 0.0;
    radial.xs.push_back(f);
    // Adding a point outside the ball changes F only when none was there.
    energy.xs.push_back(out.m * (1.0 - f));
  }

  std::mt19937_64 rng_full(derive_seed(seed, 2));
  std::poisson_distribution<long> total(n_points_intensity);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < replications; ++r) {
    const long kappa = total(rng_full);
    double max_radius = 0.0;
    for (long j = 0; j < kappa; ++j) {
      const double u = 1.0 - unit(rng_full);  // (0, 1]
      const double radius =
          model.radial_quantile ? model.radial_quantile(u) : radius_by_bisection(model.radial_tail, u);
      max_radius = std::max(max_radius, radius);
    }
    full.xs.push_back(max_radius > t ? 1.0 : 0.0);
  }

  out.variance_radial = radial.variance();
  out.variance_radial_stderr = radial.variance_stderr();
  out.energy_radial = energy.mean();
  out.energy_radial_stderr = energy.mean_stderr();
  out.variance_full = full.variance();
  out.variance_full_stderr = full.variance_stderr();
  out.radial_matches_closed = within(out.variance_radial, out.closed.variance, out.variance_radial_stderr);
  out.energy_matches_closed = within(out.energy_radial, out.closed.poincare_rhs, out.energy_radial_stderr);
  out.routes_agree = within(out.variance_radial, out.variance_full,
                            std::hypot(out.variance_radial_stderr, out.variance_full_stderr));
  return out;
}

Functional one_dim_cumulative(const std::vector<double>& g, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw PreconditionError("lambda must be positive");
  return Functional::cumulative(0, g);
}

std::vector<double> indicator_sequence(int M) {
  if (M < 0) throw PreconditionError("M must be non-negative");
  std::vector<double> g(static_cast<std::size_t>(M) + 2, 1.0);
  g.back() = 0.0;
  return g;
}

OneDimComparison one_dim_bound_comparison(const std::vector<double>& g, double lambda) {
  const Functional G = one_dim_cumulative(g, lambda);
  const Engine engine = Engine::exact(GroundSpace({lambda}));
  const auto poincare = check_poincare(engine, G);
  const auto terms = talagrand_terms(engine, G, kTalagrandConstant);
  OneDimComparison out;
  out.lambda = lambda;
  out.variance = poincare.lhs;
  out.poincare_rhs = poincare.rhs;
  out.talagrand_rhs = terms.rhs;
  out.g_l1 = terms.l1[0];
  out.g_l2 = terms.l2[0];
  out.log_ratio = out.g_l2 > 0.0 ? std::log(out.g_l2 / out.g_l1) : 0.0;
  out.talagrand_over_poincare = out.poincare_rhs > 0.0 ? out.talagrand_rhs / out.poincare_rhs : 0.0;
  return out;
}

std::vector<OneDimComparison> one_dim_lambda_grid(const std::vector<double>& g,
                                                  const std::vector<double>& lambdas) {
  std::vector<OneDimComparison> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) out.push_back(one_dim_bound_comparison(g, l));
  return out;
}

FkRecord counterexample_fk(int k, double lambda) {
  if (k < 2) throw PreconditionError("counterexample needs k >= 2");
  if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
  FkRecord r;
  r.k = k;
  r.lambda = lambda;
  const double upper = poisson_upper_tail(k - 1, lambda);  // pi([k, inf))
  const double lower = 1.0 - upper;
  r.variance = lower * upper;
  r.e_df = poisson_pmf(k - 1, lambda);
  r.e_df_sq = r.e_df;
  const double log_pmf = (k - 1) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k));
  r.denom = 1.0 - 0.5 * log_pmf;
  // pi([k, inf)) / pi(k-1), summed from the ratio recursion so that nothing underflows.
  double tail_over_pmf = 0.0;
  for (double term = lambda / k, j = k; term > tail_over_pmf * 1e-18 || j < lambda; term *= lambda / ++j)
    tail_over_pmf += term;
  const double base = lower * tail_over_pmf * r.denom / lambda;
  r.lhs_over_rhs = base / kTalagrandDisplayedConstant;
  r.lhs_over_rhs_c2 = base / kTalagrandConstant;
  return r;
}

FkScan scan_counterexample(int k_max, double lambda) {
  if (k_max < 2) throw PreconditionError("scan needs k_max >= 2");
  FkScan scan;
  for (int k = 2; k <= k_max; ++k) {
    scan.rows.push_back(counterexample_fk(k, lambda));
  }
  const auto& rows = scan.rows;
  const std::size_t n = rows.size();
  for (std::size_t i = n; i-- > 0;) {
    if (rows[i].lhs_over_rhs <= 1.0) break;
    scan.k0 = rows[i].k;
  }
  if (n > 0) scan.increasing_from = rows[n - 1].k;
  for (std::size_t i = n; i-- > 1;) {
    if (!(rows[i].lhs_over_rhs > rows[i - 1].lhs_over_rhs)) break;
    scan.increasing_from = rows[i - 1].k;
  }
  for (const auto& r : rows) {
    if (r.lhs_over_rhs_c2 > 1.0) {
      scan.first_above_one_c2 = r.k;
      break;
    }
  }
  return scan;
}

NearOptimalityTable near_optimality_scan(const std::vector<double>& a_grid,
                                         const std::vector<double>& q_grid, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw PreconditionError("gamma must be in (0, inf)");
  NearOptimalityTable table;
  table.gamma = gamma;
  table.min_ratio = std::numeric_limits<double>::infinity();
  for (double a : a_grid) {
    if (!(a > 0.0)) throw PreconditionError("a must be positive");
    for (double q : q_grid) {
      if (!(q > 1.0)) throw PreconditionError("q must exceed 1");
      NearOptimalityRow row{a, q, 0.0, 0.0, 0.0};
      const double x = a * q;
      // 1 - x e^{-x} - e^{-x}, kept accurate for small x.
      row.lhs = -std::expm1(-x) - x * std::exp(-x);
      row.rhs = q * q / (q - 1.0) * -std::expm1(-a) * -std::expm1(-(q - 1.0) * a);
      row.ratio = row.rhs / row.lhs;
      table.min_ratio = std::min(table.min_ratio, row.ratio);
      table.rows.push_back(row);
    }
  }
  table.all_at_least_one = table.rows.empty() || table.min_ratio >= 1.0;
  return table;
}

NearOptimalityCrossCheck near_optimality_cross_check(double a, double q, double gamma, double tail_mass) {
  if (!(a > 0.0) || !(q > 1.0) || !(gamma > 0.0)) throw PreconditionError("need a > 0, q > 1, gamma > 0");
  NearOptimalityCrossCheck out;
  const double x = a * q;
  out.closed_moment = std::exp(gamma * std::expm1(-x));
  out.closed_entropy = gamma * out.closed_moment * (-std::expm1(-x) - x * std::exp(-x));
  out.closed_rhs = q * q / (q - 1.0) * gamma * out.closed_moment * -std::expm1(-a) *
                   -std::expm1(-(q - 1.0) * a);

  const Engine engine = Engine::exact(GroundSpace({gamma}), tail_mass);
  const Functional g = Functional::exp_neg(a, 0);
  const Functional gq = Functional::exp_neg(x, 0);
  out.engine_entropy = entropy(engine, gq).value;
  out.engine_moment = engine.expect([&](const Configuration& c) { return gq(c); }).value;
  const auto report = check_entropy_power(engine, g, q);
  out.engine_rhs = report.rhs;
  return out;
}

std::string to_csv(const MaximaClosedForms& row) {
  std::ostringstream os;
  os << "m,variance,poincare_rhs,talagrand_rhs,dx_l1,dx_l2,log_ratio\n";
  os << format_double(row.m) << ',' << format_double(row.variance) << ','
     << format_double(row.poincare_rhs) << ',' << format_double(row.talagrand_rhs) << ','
     << format_double(row.dx_l1) << ',' << format_double(row.dx_l2) << ','
     << format_double(row.log_ratio) << '\n';
  return os.str();
}

std::string to_csv(const std::vector<OneDimComparison>& rows) {
  std::ostringstream os;
  os << "lambda,variance,poincare_rhs,talagrand_rhs,g_l1,g_l2,log_ratio,talagrand_over_poincare\n";
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << format_double(r.variance) << ','
       << format_double(r.poincare_rhs) << ',' << format_double(r.talagrand_rhs) << ','
       << format_double(r.g_l1) << ',' << format_double(r.g_l2) << ','
       << format_double(r.log_ratio) << ',' << format_double(r.talagrand_over_poincare) << '\n';
  }
  return os.str();
}

std::string to_csv(const FkScan& scan) {
  std::ostringstream os;
  os << "k,lambda,variance,e_df,e_df_sq,denom,lhs_over_rhs,lhs_over_rhs_c2\n";
  for (const auto& r : scan.rows) {
    os << r.k << ',' << format_double(r.lambda) << ',' << format_double(r.variance) << ','
       << format_double(r.e_df) << ',' << format_double(r.e_df_sq) << ','
       << format_double(r.denom) << ',' << format_double(r.lhs_over_rhs) << ','
       << format_double(r.lhs_over_rhs_c2) << '\n';
  }
  return os.str();
}

std::string to_csv(const NearOptimalityTable& table) {
  std::ostringstream os;
  os << "a,q,gamma,lhs,rhs,ratio\n";
  for (const auto& r : table.rows) {
    os << format_double(r.a) << ',' << format_double(r.q) << ',' << format_double(table.gamma)
       << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
       << format_double(r.ratio) << '\n';
  }
  return os.str();
}

}  // namespace pspace::examples
