#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "pspace/functional.hpp"

using namespace pspace;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Configuration c0{std::vector<int>{3, 1}};

}  // namespace

TEST_CASE("add-one cost of basic functionals") {
  CHECK(add_one_cost(Functional::constant(4.0), c0, 0) == 0.0);
  CHECK(add_one_cost(Functional::count(0), c0, 0) == 1.0);
  CHECK(add_one_cost(Functional::count(0), c0, 1) == 0.0);
  // D (c^2) = 2c + 1
  CHECK(add_one_cost(Functional::count_squared(0), c0, 0) == 7.0);
  CHECK(add_one_cost(Functional::indicator_le(0, 3), c0, 0) == -1.0);
  CHECK(add_one_cost(Functional::indicator_ge(1, 2), c0, 1) == 1.0);
  CHECK_THAT(add_one_cost(Functional::exp_neg(0.5, 0), c0, 0),
             WithinRel(std::exp(-2.0) - std::exp(-1.5), 1e-14));
}

TEST_CASE("second difference of count squared is 2 on the diagonal") {
  const auto f = Functional::count_squared(0);
  CHECK(second_difference(f, c0, 0, 0) == 2.0);
  CHECK(second_difference(f, c0, 0, 1) == 0.0);
  const auto prod = product(Functional::count(0), Functional::count(1));
  CHECK(second_difference(prod, c0, 0, 1) == 1.0);
}

TEST_CASE("checked differences refuse states beyond the caps") {
  const auto trunc = TruncatedStateSpace::from_caps(GroundSpace({1.0, 1.0}), {3, 3});
  const auto f = Functional::count(0);
  CHECK(add_one_cost(f, c0, 0, trunc) == 1.0);
  CHECK_THROWS_AS(add_one_cost(f, Configuration({4, 0}), 0, trunc), CapOverflow);
  CHECK_THROWS_AS(second_difference(f, Configuration({0, 5}), 0, 1, trunc), CapOverflow);
}

TEST_CASE("non-finite values are rejected") {
  const Functional bad([](const Configuration& c) { return c[0] > 2 ? NAN : 0.0; }, "bad");
  CHECK_THROWS_AS(bad(c0), NonFiniteValue);
  const auto bounded = Functional::count(0).with_bound(2.0);
  CHECK_THROWS_AS(bounded(c0), PreconditionError);
}

TEST_CASE("exhaustive certificates hold or give a reproducible witness") {
  const auto trunc = TruncatedStateSpace::from_tail_mass(GroundSpace({1.0, 2.0}), 1e-10);
  const auto dec = Functional::exp_neg(0.3, 1);
  auto cert = certify_monotonicity(dec, trunc, SignProperty::df_le0);
  CHECK(cert.holds());
  CHECK(cert.kind == CertificateKind::exact);
  CHECK(cert.states_checked == trunc.state_count());
  CHECK(certify_monotonicity(dec, trunc, SignProperty::d2f_ge0).holds());

  const auto inc = Functional::count(0);
  cert = certify_monotonicity(inc, trunc, SignProperty::df_le0);
  REQUIRE_FALSE(cert.holds());
  CHECK(cert.witness->value > 0.0);
  CHECK(witness_reproduces(inc, cert));
  CHECK_FALSE(witness_reproduces(dec, cert));

  const auto convex = Functional::count_squared(1);
  cert = certify_monotonicity(convex, trunc, SignProperty::d2f_le0);
  REQUIRE_FALSE(cert.holds());
  REQUIRE(cert.witness->atom_j);
  CHECK(witness_reproduces(convex, cert));
  CHECK(to_string(cert).rfind("exact:D2F<=0:witness", 0) == 0);
}

TEST_CASE("sampled certificates are labelled and seeded") {
  const GroundSpace s({1.0, 1.0});
  const auto f = Functional::indicator_le(0, 4);
  const auto a = certify_monotonicity_sampled(f, s, SignProperty::df_le0, 200, 5);
  CHECK(a.kind == CertificateKind::sampled);
  CHECK(a.holds());
  const auto g = Functional::indicator_le(0, 0) - Functional::indicator_le(0, 1);
  const auto b1 = certify_monotonicity_sampled(g, s, SignProperty::df_le0, 200, 5);
  const auto b2 = certify_monotonicity_sampled(g, s, SignProperty::df_le0, 200, 5);
  REQUIRE_FALSE(b1.holds());
  CHECK(b1.witness->state == b2.witness->state);
}

TEST_CASE("cumulative functionals carry their shape") {
  const auto g = Functional::cumulative(0, {1.0, 0.5, 0.25, 0.0});
  CHECK(g(Configuration({0})) == 0.0);
  CHECK(g(Configuration({2})) == 1.5);
  CHECK(g(Configuration({10})) == 1.75);
  CHECK(g.declared_sign_df() == Sign::nonneg);
  CHECK(g.declared_sign_d2f() == Sign::nonpos);
  REQUIRE(g.bounded_by());
  CHECK(*g.bounded_by() == 1.75);
  CHECK_FALSE(Functional::cumulative(0, {1.0, 1.0}).bounded_by());
  CHECK_THROWS_AS(Functional::cumulative(0, {1.0, 2.0}), PreconditionError);
  CHECK_THROWS_AS(Functional::cumulative(0, {-1.0}), PreconditionError);
}

TEST_CASE("tabulated functionals detect their shape") {
  const auto f = Functional::tabulated(0, {3.0, 2.0, 1.5, 1.25});
  CHECK(f.declared_sign_df() == Sign::nonpos);
  CHECK(f.declared_sign_d2f() == Sign::nonneg);
  CHECK(f(Configuration({9})) == 1.25);
  const auto g = Functional::tabulated(0, {0.0, 1.0, 0.0});
  CHECK(g.declared_sign_df() == Sign::unknown);
}

TEST_CASE("affine combinations propagate signs and bounds") {
  const auto a = Functional::exp_neg(1.0, 0);
  const auto b = Functional::indicator_le(0, 2);
  const auto sum = 2.0 * a + b;
  CHECK(sum.declared_sign_df() == Sign::nonpos);
  REQUIRE(sum.bounded_by());
  CHECK(*sum.bounded_by() == 3.0);
  const auto diff = a - b;
  CHECK(diff.declared_sign_df() == Sign::unknown);
  const auto shifted = (-1.0) * a + 1.0;
  CHECK(shifted.declared_sign_df() == Sign::nonneg);
  CHECK_THAT(shifted(Configuration({1})), WithinRel(1.0 - std::exp(-1.0), 1e-15));
}

TEST_CASE("carre du champ expectation matches the oracle") {
  const double lambda = 1.7;
  const auto engine = Engine::exact(GroundSpace({lambda}));
  const auto f = Functional::exp_neg(0.4, 0);
  const auto g = Functional::count_squared(0);
  const double expected = lambda * oracle::expect_one_atom(
                                       [](int n) {
                                         const double df = std::exp(-0.4 * (n + 1)) - std::exp(-0.4 * n);
                                         return df * (2.0 * n + 1.0);
                                       },
                                       lambda);
  CHECK_THAT(gamma_expectation(f, g, engine).value, WithinRel(expected, 1e-11));
  // Gamma(count, count) = lambda
  CHECK_THAT(gamma_expectation(Functional::count(0), Functional::count(0), engine).value,
             WithinRel(lambda, 1e-11));
}

TEST_CASE("random tables: exhaustive certificates agree with a direct scan") {
  std::mt19937_64 rng(2024);
  const auto trunc = TruncatedStateSpace::from_caps(GroundSpace({1.0}), {12});
  for (int trial = 0; trial < 100; ++trial) {
    auto values = trial % 2 ? oracle::random_nonincreasing(rng, 14, 1.0) : oracle::random_table(rng, 14, -1.0, 1.0);
    const auto f = Functional::tabulated(0, values);
    bool decreasing = true;
    for (int n = 0; n <= 12; ++n) {
      const double next = values[std::min<std::size_t>(n + 1, values.size() - 1)];
      decreasing &= next <= values[n];
    }
    CHECK(certify_monotonicity(f, trunc, SignProperty::df_le0).holds() == decreasing);
  }
}
