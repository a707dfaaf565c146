#pragma once

// The Ornstein-Uhlenbeck semigroup on a finite atomic Poisson space, in its
// thinning-plus-refresh form: (P_t F)(c) = E F(thin_{e^-t}(c) + refresh), with
// refresh ~ Poisson((1 - e^-t) w) independent per atom.
//
// Exact mode assembles the operator as a tensor product of one-atom kernels;
// Monte Carlo mode simulates thinning and refresh per state.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pspace/engine.hpp"
#include "pspace/functional.hpp"
#include "pspace/report.hpp"

namespace pspace {

/// One-atom kernel K_t(n, .) = law of Binomial(n, e^-t) + Poisson((1-e^-t) w),
/// with the refresh truncated at `refresh_cap`. Rows are never renormalised.
class AtomKernel {
 public:
  AtomKernel(double weight, int refresh_cap, double t);

  double survival() const { return survival_; }
  std::span<const double> refresh() const { return refresh_; }
  /// Row for starting count n; entry k is the probability of ending at k.
  std::vector<double> row(int n) const;

 private:
  double survival_;
  std::vector<double> refresh_;
};

/// Returns P_t F as a functional. t = 0 returns F itself; t = +inf returns the
/// constant E F under the engine.
Functional apply_semigroup(const Engine& engine, const Functional& f, double t);

/// Thinning-plus-refresh Monte Carlo estimate of (P_t F)(c), with stderr.
/// Deterministic in (engine seed, t, c).
Estimate semigroup_estimate(const Engine& engine, const Functional& f, double t,
                            const Configuration& c, std::size_t replications);

/// Variance that the inner estimates of P_t F add to the sample mean of h(P_t F) under a
/// Monte Carlo engine, where `dh` is h'. The inner estimate is fixed per state, so repeated
/// samples of one state share its error. Zero for exact engines.
double inner_estimate_variance(const Engine& engine, const Functional& f, double t,
                               const std::function<double(double)>& dh);

/// Birth-death form (L F)(c) = sum_i [w_i (F(c+e_i) - F(c)) + c_i (F(c-e_i) - F(c))].
double generator(const GroundSpace& space, const Functional& f, const Configuration& c);
Functional generator_functional(const GroundSpace& space, const Functional& f);

InequalityReport mean_preservation_check(const Engine& engine, const Functional& f, double t);
/// max over states and atoms of |D_i(P_t F) - e^-t P_t(D_i F)|. Exact mode.
InequalityReport commutation_check(const Engine& engine, const Functional& f, double t);
/// max over states of |P_s(P_t F) - P_{s+t} F|. Exact mode.
InequalityReport semigroup_property_check(const Engine& engine, const Functional& f, double s,
                                          double t);
/// max over states of |(P_h F - F)/h - L F| against its second-order Taylor bound. Exact mode.
InequalityReport generator_check(const Engine& engine, const Functional& f, double h);
/// E[F L G], E[G L F] and -E Gamma(F, G) agree pairwise. Exact mode.
InequalityReport symmetry_check(const Engine& engine, const Functional& f, const Functional& g);

struct LpNorm {
  double p = 2.0;
  double value = 0.0;
  std::optional<double> stderr;
  /// Monte Carlo p = inf norms are sample maxima, hence lower bounds.
  bool lower_bound = false;
};

LpNorm lp_norm(const Engine& engine, const Functional& f, double p);

/// |D_i (P_t F)| <= 2 e^-t for |F| <= 1. Exact mode.
InequalityReport pointwise_gradient_check(const Engine& engine, const Functional& f, double t);
/// || D P_t F ||_{L^p(Omega; L^2(w))} <= e^-t / sqrt(1 - e^-t) ||F||_p, p in [2, inf].
InequalityReport integrated_gradient_check(const Engine& engine, const Functional& f, double t,
                                           double p);

/// max |F| over the box [0, caps_i + extra_i]; throws BudgetExceeded past `budget` states.
double sup_abs_on_box(const Functional& f, std::span<const int> caps, int extra,
                      std::size_t budget);

}  // namespace pspace
