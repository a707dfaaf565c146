#include "pspace/mecke.hpp"

#include <cmath>

namespace pspace {

InequalityReport check_mecke(const Engine& engine, const MeckeIntegrand& h) {
  const auto& weights = engine.space().weights();
  const std::size_t m = weights.size();
  double sup_h = 0.0;
  auto eval = [&](const Configuration& c, std::size_t i) {
    const double v = h(c, i);
    if (!std::isfinite(v)) throw NonFiniteValue("Mecke integrand not finite at " + to_string(c));
    sup_h = std::max(sup_h, std::abs(v));
    return v;
  };
  const auto moments = engine.expect_moments(2, [&](const Configuration& c, std::span<double> out) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (c[i] > 0) lhs += c[i] * eval(c, i);
      rhs += weights[i] * eval(c.plus(i), i);
    }
    out[0] = lhs;
    out[1] = rhs;
  });

  InequalityReport r;
  r.name = "mecke";
  r.relation = Relation::equal;
  r.lhs = moments.mean[0];
  r.rhs = moments.mean[1];
  r.parameters["mode"] = to_string(engine.mode());
  if (engine.is_exact()) {
    r.tolerance = 10.0 * engine.tail_mass() * std::max(1.0, sup_h) *
                      (1.0 + engine.space().total_mass()) +
                  1e-13 * std::max(1.0, std::abs(r.lhs));
  } else {
    const double grad[2] = {1.0, -1.0};
    r.stderr = moments.delta_stderr(grad);
  }
  decide(r);
  return r;
}

}  // namespace pspace
