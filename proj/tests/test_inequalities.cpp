#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pspace/inequalities.hpp"
#include "pspace/semigroup.hpp"

using namespace pspace;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double phi(double u) { return u == 0.0 ? 0.0 : u * std::log(u); }

Engine one_atom(double lambda) { return Engine::exact(GroundSpace({lambda})); }

}  // namespace

TEST_CASE("entropy of constants vanishes") {
  const auto e = entropy(one_atom(2.0), Functional::constant(3.0));
  CHECK_THAT(e.value, WithinAbs(0.0, 1e-10));
  CHECK_THROWS_AS(entropy(one_atom(1.0), Functional::constant(-1.0)), PreconditionError);
}

TEST_CASE("entropy of a power of the exponential functional has its closed form") {
  for (double gamma : {0.5, 1.0, 3.0}) {
    for (auto [a, q] : {std::pair{0.5, 2.0}, std::pair{1.0, 1.5}, std::pair{0.2, 3.0}}) {
      const double x = a * q;
      const double closed = gamma * std::exp(gamma * (std::exp(-x) - 1.0)) * (1.0 - x * std::exp(-x) - std::exp(-x));
      CHECK_THAT(entropy(one_atom(gamma), Functional::exp_neg(x, 0)).value, WithinAbs(closed, 1e-11));
    }
  }
}

TEST_CASE("entropy of an indicator by brute-force summation") {
  const double lambda = 1.5;
  const auto e = entropy(one_atom(lambda), Functional::indicator_le(0, 2));
  const double p = oracle::expect_one_atom([](int n) { return n <= 2 ? 1.0 : 0.0; }, lambda);
  CHECK_THAT(e.value, WithinAbs(-p * std::log(p), 1e-12));
  CHECK(e.convention_hits > 0);
}

TEST_CASE("Poincare: constants, linear saturation, random corpus") {
  auto r = check_poincare(one_atom(2.0), Functional::constant(1.0));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.lhs == Catch::Approx(0.0).margin(1e-12));
  r = check_poincare(one_atom(2.0), Functional::count(0));
  CHECK_THAT(r.lhs, WithinRel(2.0, 1e-9));
  CHECK_THAT(r.rhs, WithinRel(2.0, 1e-11));
  CHECK(r.verdict == Verdict::holds);

  std::mt19937_64 rng(3);
  const auto engine = Engine::exact(GroundSpace({0.7, 1.9}));
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = affine({{1.0, Functional::tabulated(0, oracle::random_table(rng, 10, -1, 1))},
                           {1.0, product(Functional::tabulated(0, oracle::random_table(rng, 10, -1, 1)),
                                         Functional::tabulated(1, oracle::random_table(rng, 10, -1, 1)))}});
    CHECK(check_poincare(engine, f).verdict == Verdict::holds);
  }
}

TEST_CASE("Poincare under Monte Carlo reports a stderr") {
  const auto mc = Engine::monte_carlo(GroundSpace({1.0}), 5000, 2);
  const auto r = check_poincare(mc, Functional::count(0));
  REQUIRE(r.stderr);
  CHECK(r.ok());
}

TEST_CASE("modified LSI for exp(-a c) against the oracle") {
  for (double lambda : {0.5, 2.0}) {
    for (double a : {0.1, 1.0}) {
      const auto r = check_modified_lsi(one_atom(lambda), Functional::exp_neg(a, 0));
      const double rhs = lambda * oracle::expect_one_atom(
                                      [a](int n) {
                                        const double x = std::exp(-a * n), y = std::exp(-a * (n + 1));
                                        return phi(y) - phi(x) - (std::log(x) + 1.0) * (y - x);
                                      },
                                      lambda);
      const double lhs = oracle::expect_one_atom([a](int n) { return phi(std::exp(-a * n)); }, lambda) -
                         phi(oracle::laplace(a, lambda));
      CHECK_THAT(r.rhs, WithinAbs(rhs, 1e-12));
      CHECK_THAT(r.lhs, WithinAbs(lhs, 1e-12));
      CHECK(r.verdict == Verdict::holds);
    }
  }
  const auto r = check_modified_lsi(one_atom(1.0), Functional::count(0) + 1.0);
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.slack > 1e-9);
}

TEST_CASE("min-form right-hand side dominates the modified one") {
  const auto engine = one_atom(1.0);
  const auto f = Functional::exp_neg(0.5, 0);
  const auto mod = check_modified_lsi(engine, f);
  const auto mn = check_min_form_lsi(engine, f);
  CHECK(mn.verdict == Verdict::holds);
  CHECK(mod.rhs <= mn.rhs * (1 + 1e-12));
  CHECK(mn.slack >= mod.slack);
  CHECK(check_min_form_lsi(engine, Functional::count(0) + 1.0).verdict == Verdict::holds);
  CHECK(check_min_form_lsi(engine, Functional::constant(2.0)).verdict == Verdict::holds);
}

TEST_CASE("LSI positivity rules") {
  const auto engine = one_atom(1.0);
  // Zero only where F is flat: admitted, with convention hits.
  auto r = check_modified_lsi(engine, Functional::indicator_le(0, 2));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.parameters.at("convention_hits") != "0");
  // Zero next to a jump: refused.
  r = check_modified_lsi(engine, Functional::indicator_ge(0, 1));
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  r = check_min_form_lsi(engine, Functional::indicator_ge(0, 1));
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  // Below a positive floor: refused.
  r = check_modified_lsi(engine, Functional::exp_neg(1.0, 0), 0.5);
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  r = check_modified_lsi(engine, (-1.0) * Functional::count(0));
  CHECK(r.verdict == Verdict::hypothesis_not_met);
}

TEST_CASE("pathwise lemma: boundary conventions and a hand value") {
  auto r = check_pathwise_lemma(3.0, 3.0, 2.0);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.verdict == Verdict::holds);
  r = check_pathwise_lemma(2.0, 0.0, 1.5);
  CHECK(std::isinf(r.rhs));
  CHECK(r.verdict == Verdict::holds);
  r = check_pathwise_lemma(0.0, 0.0, 1.5);
  CHECK(r.verdict == Verdict::holds);
  // a = 2, b = 1, q = 2: (4 - 1)^2 / 1 = 9 <= 4 * 1 * 1 * 4 = 16
  r = check_pathwise_lemma(2.0, 1.0, 2.0);
  CHECK_THAT(r.lhs, WithinRel(9.0, 1e-14));
  CHECK_THAT(r.rhs, WithinRel(16.0, 1e-14));
  CHECK_THROWS_AS(check_pathwise_lemma(1.0, 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(check_pathwise_lemma(-1.0, 1.0, 2.0), PreconditionError);
}

TEST_CASE("pathwise lemma matches direct evaluation") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ab(0.01, 100.0), qd(1.01, 5.0);
  for (int k = 0; k < 2000; ++k) {
    const double a = ab(rng), b = ab(rng), q = qd(rng);
    const double lhs = std::pow(std::pow(a, q) - std::pow(b, q), 2) / std::pow(b, q);
    const double rhs = q * q / (q - 1) * (a - b) * (std::pow(a, q - 1) - std::pow(b, q - 1)) * std::max(std::pow(a / b, q), 1.0);
    const auto r = check_pathwise_lemma(a, b, q);
    CHECK_THAT(r.lhs, WithinRel(lhs, 1e-8));
    CHECK_THAT(r.rhs, WithinRel(rhs, 1e-8));
  }
}

TEST_CASE("pathwise lemma sweep finds no violation") {
  const auto sweep = sweep_pathwise_lemma(100000, 1);
  CHECK(sweep.draws == 100000);
  CHECK(sweep.violations == 0);
  CHECK(sweep.worst_ratio <= 1.0);
  CHECK(sweep.worst_ratio > 0.5);
}

TEST_CASE("entropy-power bound on the exponential family") {
  for (double a : {0.05, 0.3, 1.0, 2.5}) {
    for (double q : {1.1, 2.0, 3.5}) {
      const double x = a * q;
      const double reduced_lhs = 1.0 - x * std::exp(-x) - std::exp(-x);
      const double reduced_rhs = q * q / (q - 1) * (1 - std::exp(-a)) * (1 - std::exp(-(q - 1) * a));
      CHECK(reduced_lhs <= reduced_rhs);
      const auto r = check_entropy_power(one_atom(1.0), Functional::exp_neg(a, 0), q);
      CHECK(r.verdict == Verdict::holds);
      const double scale = std::exp(std::exp(-x) - 1.0);
      CHECK_THAT(r.lhs, WithinAbs(scale * reduced_lhs, 1e-11));
      CHECK_THAT(r.rhs, WithinAbs(scale * reduced_rhs, 1e-11));
    }
  }
  CHECK(check_entropy_power(one_atom(1.0), Functional::count(0), 2.0).verdict == Verdict::hypothesis_not_met);
}

TEST_CASE("q to 1 limit of the entropy-power bound") {
  for (double a : {0.0, 0.01, 0.5, 1.0, 3.0}) {
    const double lhs = 1.0 - a * std::exp(-a) - std::exp(-a);
    const double rhs = a * (1.0 - std::exp(-a));
    CHECK(lhs <= rhs + 1e-16);
    if (a == 0.0) CHECK(lhs == rhs);
  }
}

TEST_CASE("restricted hypercontractivity at a=1, t=1, p=2") {
  const auto r = check_restricted_hypercontractivity(one_atom(1.0), Functional::exp_neg(1.0, 0), 1.0, 2.0);
  const double q = 1.0 + std::numbers::e;
  const double lhs = std::pow(oracle::expect_one_atom([&](int n) { return std::pow(oracle::semigroup_exp(1.0, 1.0, 1.0, n), q); }, 1.0), 1.0 / q);
  const double rhs = std::sqrt(oracle::laplace(2.0, 1.0));
  CHECK_THAT(r.lhs, WithinRel(lhs, 1e-10));
  CHECK_THAT(r.rhs, WithinRel(rhs, 1e-12));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.slack > 1e-3);
  CHECK(r.parameters.at("q") == format_double(hypercontractive_exponent(2.0, 1.0)));
}

TEST_CASE("restricted hypercontractivity gate") {
  const auto engine = one_atom(1.0);
  const auto r = check_restricted_hypercontractivity(engine, Functional::count(0), 0.5, 2.0);
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  REQUIRE(r.hypothesis_certificates.size() == 1);
  CHECK(witness_reproduces(Functional::count(0), r.hypothesis_certificates[0]));
  const auto c = check_restricted_hypercontractivity(engine, Functional::constant(2.0), 0.5, 2.0);
  CHECK(c.verdict == Verdict::holds);
  CHECK_THAT(c.lhs, WithinRel(2.0, 1e-11));
}

TEST_CASE("weak hypercontractivity") {
  const auto engine = one_atom(1.0);
  auto r = check_weak_hypercontractivity(engine, Functional::constant(0.0), 0.5);
  CHECK_THAT(r.lhs, WithinRel(1.0, 1e-11));
  CHECK(r.verdict == Verdict::holds);
  const auto f = Functional::indicator_le(0, 2) - Functional::indicator_ge(0, 5);
  r = check_weak_hypercontractivity(engine, f, 0.7);
  CHECK(r.verdict == Verdict::holds);
  auto fv = [](int n) { return (n <= 2 ? 1.0 : 0.0) - (n >= 5 ? 1.0 : 0.0); };
  const double et = std::exp(0.7);
  const double lhs = std::pow(oracle::expect_one_atom([&](int n) { return std::exp(et * oracle::semigroup_one_atom(fv, 1.0, 0.7, n)); }, 1.0, 60), 1.0 / et);
  CHECK_THAT(r.lhs, WithinRel(lhs, 1e-10));
}

TEST_CASE("Talagrand bound: constants and the cumulative family") {
  auto r = check_talagrand(one_atom(1.0), Functional::constant(1.0));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.rhs == 0.0);
  for (int M : {0, 1, 3}) {
    for (double lambda : {1.0, 4.0}) {
      std::vector<double> g(static_cast<std::size_t>(M) + 2, 1.0);
      g.back() = 0.0;
      const auto engine = one_atom(lambda);
      const auto G = Functional::cumulative(0, g);
      r = check_talagrand(engine, G);
      CHECK(r.verdict == Verdict::holds);
      const double p = oracle::expect_one_atom([M](int n) { return n <= M ? 1.0 : 0.0; }, lambda);
      const double closed = 2.0 * lambda * p / (1.0 - 0.5 * std::log(p));
      CHECK_THAT(talagrand_bound(engine, G), WithinRel(closed, 1e-11));
    }
  }
}

TEST_CASE("Talagrand with the displayed constant fails on linear functionals") {
  const auto engine = one_atom(1.0);
  const auto r = check_talagrand(engine, Functional::count(0), {kTalagrandDisplayedConstant, false});
  CHECK(r.verdict == Verdict::violated);
  CHECK_THAT(r.lhs, WithinRel(1.0, 1e-9));
  CHECK_THAT(r.rhs, WithinRel(0.5, 1e-9));
  CHECK(check_talagrand(engine, Functional::count(0)).verdict == Verdict::holds);
}

TEST_CASE("Talagrand gate and the F_k demonstration") {
  const auto engine = one_atom(1.0);
  const auto f = Functional::indicator_le(0, 3);
  auto r = check_talagrand(engine, f, {kTalagrandDisplayedConstant, false});
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  r = check_talagrand(engine, f, {kTalagrandDisplayedConstant, true});
  CHECK(r.intentional_violation_demo);
  CHECK(r.lhs / r.rhs > 1.0);
  CHECK(r.verdict == Verdict::violated);
}

TEST_CASE("Talagrand terms are atomwise below the Poincare terms") {
  std::mt19937_64 rng(21);
  const auto engine = Engine::exact(GroundSpace({0.6, 2.2}));
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = affine({{1.0, Functional::tabulated(0, oracle::random_nonincreasing(rng, 8, 1.0))},
                           {1.0, Functional::tabulated(1, oracle::random_nonincreasing(rng, 8, 1.0))}});
    const auto terms = talagrand_terms(engine, f, kTalagrandDisplayedConstant);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(terms.l2[i] >= terms.l1[i] * (1 - 1e-12));
      CHECK(terms.term[i] <= 0.5 * terms.poincare_term[i] * (1 + 1e-12));
    }
  }
}

TEST_CASE("L1 variance bound") {
  CHECK(l1_alpha(0.4) == 2.0 / (std::numbers::e + 1.0));
  CHECK(l1_alpha(3.0) == 1.0);
  CHECK(l1_atom_term(1.0) == 1.0);
  CHECK(l1_atom_term(0.0) == 0.0);
  CHECK_THAT(l1_atom_term(0.5), WithinRel(2.0 / (1.0 + std::log(2.0)), 1e-15));
  CHECK(l1_atom_term(2.5) == 2.5);

  const auto engine = one_atom(1.0);
  CHECK(l1_variance_bound(engine, Functional::constant(0.5)).verdict == Verdict::holds);
  CHECK_THROWS_AS(l1_variance_bound(engine, Functional::count(0)), PreconditionError);

  // 1{c <= 3} is non-increasing but not convex: the gate refuses, yet the numbers still satisfy the bound.
  auto r = l1_variance_bound(engine, Functional::indicator_le(0, 3));
  CHECK(r.verdict == Verdict::hypothesis_not_met);
  CHECK(r.lhs < r.rhs);
  const double p = oracle::expect_one_atom([](int n) { return n <= 3 ? 1.0 : 0.0; }, 1.0);
  CHECK_THAT(r.lhs, WithinRel(p * (1 - p), 1e-9));

  r = l1_variance_bound(engine, Functional::cumulative(0, {1.0, 1.0, 1.0, 1.0, 0.0}));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.slack > 0.0);
}

TEST_CASE("concentration for lambda - c") {
  for (double lambda : {1.0, 4.0}) {
    const auto engine = one_atom(lambda);
    const auto f = Functional::constant(lambda) - Functional::count(0);
    const auto reports = check_concentration(engine, f, {0.5, 1.0, 1.5});
    REQUIRE(reports.size() == 3);
    for (const auto& r : reports) {
      CHECK(r.verdict == Verdict::holds);
      const double t = std::stod(r.parameters.at("threshold"));
      const double tail = oracle::expect_one_atom([&](int n) { return lambda - n > t ? 1.0 : 0.0; }, lambda);
      CHECK_THAT(r.lhs, WithinAbs(tail, 1e-12));
      CHECK_THAT(r.rhs, WithinRel(std::exp(-t * t / (2 * lambda)), 1e-12));
    }
  }
  for (const auto& r : check_concentration(one_atom(1.0), Functional::exp_neg(1.0, 0), {0.1, 0.3, 0.6}))
    CHECK(r.verdict == Verdict::holds);
  for (const auto& r : check_concentration(one_atom(1.0), Functional::constant(1.0), {0.5})) {
    CHECK(r.lhs == 0.0);
    CHECK(r.verdict == Verdict::holds);
  }
  CHECK(check_concentration(one_atom(1.0), Functional::count(0), {1.0})[0].verdict == Verdict::hypothesis_not_met);
}

TEST_CASE("naive LSI ratio grows without bound") {
  const auto f = check_lsi_failure(40);
  REQUIRE(f.rows.size() == 40);
  const auto& k1 = f.rows[0];
  const double tail = oracle::poisson_tail_above(1, 1.0);
  CHECK_THAT(k1.ratio, WithinRel(-tail * std::log(tail) / oracle::poisson_pmf(1, 1.0), 1e-10));
  CHECK(std::isfinite(k1.ratio));
  CHECK(k1.ratio > 0.0);
  CHECK(f.rows[29].ratio > f.rows[9].ratio);
  CHECK(f.rows[39].ratio > f.rows[29].ratio);
  CHECK(f.increasing_from <= 2);
  for (std::size_t k = 1; k < f.rows.size(); ++k) CHECK(f.rows[k].ratio > f.rows[k - 1].ratio);
}

TEST_CASE("every checker holds on constants") {
  const auto engine = Engine::exact(GroundSpace({1.0, 0.5}));
  const auto c = Functional::constant(0.7);
  CHECK(check_poincare(engine, c).verdict == Verdict::holds);
  CHECK(check_modified_lsi(engine, c).verdict == Verdict::holds);
  CHECK(check_min_form_lsi(engine, c).verdict == Verdict::holds);
  CHECK(check_entropy_power(engine, c, 2.0).verdict == Verdict::holds);
  CHECK(check_restricted_hypercontractivity(engine, c, 0.5, 1.5).verdict == Verdict::holds);
  CHECK(check_weak_hypercontractivity(engine, c, 0.5).verdict == Verdict::holds);
  CHECK(check_talagrand(engine, c).verdict == Verdict::holds);
  CHECK(l1_variance_bound(engine, c).verdict == Verdict::holds);
  CHECK(check_concentration(engine, c, {0.2})[0].verdict == Verdict::holds);
}
