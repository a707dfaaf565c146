#include "pspace/semigroup.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace pspace {

namespace {

// Extension of the truncation caps at which P_t F is tabulated, so that second
// differences at every truncated state read tabulated values.
constexpr int kDifferenceExtension = 2;

double binomial_pmf(int n, int k, double p, double log_p, double log_q) {
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  k * log_p + (n - k) * log_q);
}

std::uint64_t hash_state(std::uint64_t seed, double t, const Configuration& c) {
  std::uint64_t h = derive_seed(seed, std::bit_cast<std::uint64_t>(t));
  for (int v : c.counts) h = derive_seed(h, static_cast<std::uint64_t>(v));
  return h;
}

std::size_t box_size(std::span<const int> caps, std::size_t budget) {
  std::size_t n = 1;
  for (int c : caps) {
    const auto r = static_cast<std::size_t>(c) + 1;
    if (n > budget / r) throw BudgetExceeded("tabulation box exceeds budget");
    n *= r;
  }
  return n;
}

// Visits every point of the box [0, caps_i] with atom 0 most significant.
template <class Visit>
void for_each_in_box(std::span<const int> caps, Visit&& visit) {
  Configuration c = Configuration::zeros(caps.size());
  const std::size_t total = box_size(caps, std::numeric_limits<std::size_t>::max());
  for (std::size_t idx = 0; idx < total; ++idx) {
    visit(c, idx);
    for (std::size_t i = caps.size(); i-- > 0;) {
      if (c.counts[i] < caps[i]) {
        ++c.counts[i];
        break;
      }
      c.counts[i] = 0;
    }
  }
}

class ExactImage {
 public:
  // `margin` widens the tabulated output box beyond cap + kDifferenceExtension.
  ExactImage(const Engine& engine, Functional f, double t, int margin = 0) : f_(std::move(f)) {
    const auto& trunc = engine.truncation();
    const std::size_t m = engine.space().atom_count();
    for (std::size_t i = 0; i < m; ++i) {
      kernels_.emplace_back(engine.space().weight(i), trunc.cap(i), t);
      out_caps_.push_back(trunc.cap(i) + kDifferenceExtension + margin);
    }
    std::vector<int> ext(m);
    for (std::size_t i = 0; i < m; ++i) ext[i] = out_caps_[i] + trunc.cap(i);
    const std::size_t limit = trunc.budget() * 64;
    table_.resize(box_size(ext, limit));
    for_each_in_box(ext, [&](const Configuration& c, std::size_t idx) { table_[idx] = f_(c); });

    // Contract one axis at a time with that atom's kernel rows.
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t outer = 1, inner = 1;
      for (std::size_t i = 0; i < k; ++i) outer *= static_cast<std::size_t>(ext[i]) + 1;
      for (std::size_t i = k + 1; i < m; ++i) inner *= static_cast<std::size_t>(ext[i]) + 1;
      const auto in_len = static_cast<std::size_t>(ext[k]) + 1;
      const auto out_len = static_cast<std::size_t>(out_caps_[k]) + 1;
      std::vector<std::vector<double>> rows;
      for (int n = 0; n <= out_caps_[k]; ++n) rows.push_back(kernels_[k].row(n));
      std::vector<double> next(outer * out_len * inner, 0.0);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t n = 0; n < out_len; ++n) {
          const auto& row = rows[n];
          double* dst = &next[(o * out_len + n) * inner];
          for (std::size_t np = 0; np < row.size() && np < in_len; ++np) {
            const double w = row[np];
            const double* src = &table_[(o * in_len + np) * inner];
            for (std::size_t r = 0; r < inner; ++r) dst[r] += w * src[r];
          }
        }
      table_ = std::move(next);
      ext[k] = out_caps_[k];
    }
  }

  double operator()(const Configuration& c) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < out_caps_.size(); ++i) {
      if (c[i] > out_caps_[i]) return direct(c);
      idx = idx * (static_cast<std::size_t>(out_caps_[i]) + 1) + static_cast<std::size_t>(c[i]);
    }
    return table_[idx];
  }

 private:
  // Full tensor sum for states outside the tabulated box.
  double direct(const Configuration& c) const {
    const std::size_t m = kernels_.size();
    std::vector<std::vector<double>> rows;
    std::vector<int> lens;
    for (std::size_t i = 0; i < m; ++i) {
      rows.push_back(kernels_[i].row(c[i]));
      lens.push_back(static_cast<int>(rows.back().size()) - 1);
    }
    double sum = 0.0;
    for_each_in_box(lens, [&](const Configuration& target, std::size_t) {
      double w = 1.0;
      for (std::size_t i = 0; i < m; ++i) w *= rows[i][static_cast<std::size_t>(target[i])];
      if (w != 0.0) sum += w * f_(target);
    });
    return sum;
  }

  Functional f_;
  std::vector<AtomKernel> kernels_;
  std::vector<int> out_caps_;
  std::vector<double> table_;
};

std::string fmt(double v) { return format_double(v); }

Functional exact_image(const Engine& engine, const Functional& f, double t, int margin) {
  auto image = std::make_shared<const ExactImage>(engine, f, t, margin);
  return Functional([image](const Configuration& c) { return (*image)(c); },
                    "P[" + fmt(t) + "](" + f.description() + ")");
}

void require_exact(const Engine& engine, const char* what) {
  if (!engine.is_exact()) throw PreconditionError(std::string(what) + " requires exact mode");
}

}  // namespace

AtomKernel::AtomKernel(double weight, int refresh_cap, double t) : survival_(std::exp(-t)) {
  if (!(t >= 0.0)) throw PreconditionError("semigroup time must be non-negative");
  const double refresh_mean = -std::expm1(-t) * weight;
  for (int k = 0; k <= refresh_cap; ++k) refresh_.push_back(poisson_pmf(k, refresh_mean));
}

std::vector<double> AtomKernel::row(int n) const {
  const double p = survival_;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  std::vector<double> binom(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) binom[static_cast<std::size_t>(k)] = binomial_pmf(n, k, p, log_p, log_q);
  std::vector<double> out(binom.size() + refresh_.size() - 1, 0.0);
  for (std::size_t k = 0; k < binom.size(); ++k)
    for (std::size_t j = 0; j < refresh_.size(); ++j) out[k + j] += binom[k] * refresh_[j];
  return out;
}

Functional apply_semigroup(const Engine& engine, const Functional& f, double t) {
  if (!(t >= 0.0)) throw PreconditionError("semigroup time must be non-negative");
  if (t == 0.0) return f;
  const std::string desc = "P[" + fmt(t) + "](" + f.description() + ")";
  std::optional<double> bound = f.bounded_by();
  if (std::isinf(t)) {
    const double mean = engine.expect([&](const Configuration& c) { return f(c); }).value;
    return Functional([mean](const Configuration&) { return mean; }, desc);
  }
  Functional out = [&] {
    if (engine.is_exact()) {
      auto image = std::make_shared<const ExactImage>(engine, f, t);
      return Functional([image](const Configuration& c) { return (*image)(c); }, desc);
    }
    return Functional(
        [engine, f, t](const Configuration& c) {
          return semigroup_estimate(engine, f, t, c, engine.inner_replications()).value;
        },
        desc);
  }();
  // Averages of F stay within F's bound and inherit the sign of D F (commutation).
  out = out.with_signs(f.declared_sign_df(), f.declared_sign_d2f());
  if (bound) out = out.with_bound(*bound);
  return out;
}

Estimate semigroup_estimate(const Engine& engine, const Functional& f, double t,
                            const Configuration& c, std::size_t replications) {
  if (!(t >= 0.0)) throw PreconditionError("semigroup time must be non-negative");
  if (replications < 2) throw PreconditionError("need at least two replications");
  const auto& space = engine.space();
  const double keep = std::exp(-t);
  std::mt19937_64 rng(hash_state(engine.seed(), t, c));
  std::vector<std::poisson_distribution<int>> refresh;
  for (double w : space.weights()) refresh.emplace_back(-std::expm1(-t) * w);
  double sum = 0.0, sum_sq = 0.0;
  Configuration target = c;
  for (std::size_t r = 0; r < replications; ++r) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::binomial_distribution<int> thin(c[i], keep);
      target.counts[i] = thin(rng) + refresh[i](rng);
    }
    const double v = f(target);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(replications);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return Estimate{mean, std::sqrt(var / n)};
}

double inner_estimate_variance(const Engine& engine, const Functional& f, double t,
                               const std::function<double(double)>& dh) {
  if (engine.is_exact() || t == 0.0) return 0.0;
  std::map<std::vector<int>, std::size_t> counts;
  for (const auto& c : engine.samples()) ++counts[c.counts];
  const double n = static_cast<double>(engine.samples().size());
  double var = 0.0;
  for (const auto& [state, k] : counts) {
    const auto e = semigroup_estimate(engine, f, t, Configuration(state), engine.inner_replications());
    const double term = static_cast<double>(k) / n * dh(e.value) * e.stderr.value_or(0.0);
    var += term * term;
  }
  return var;
}

double generator(const GroundSpace& space, const Functional& f, const Configuration& c) {
  const double fc = f(c);
  double v = 0.0;
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    v += space.weight(i) * (f(c.plus(i)) - fc);
    if (c[i] > 0) v += c[i] * (f(c.minus(i)) - fc);
  }
  return v;
}

Functional generator_functional(const GroundSpace& space, const Functional& f) {
  return Functional([space, f](const Configuration& c) { return generator(space, f, c); },
                    "L(" + f.description() + ")");
}

InequalityReport mean_preservation_check(const Engine& engine, const Functional& f, double t) {
  const Functional pt = apply_semigroup(engine, f, t);
  InequalityReport r;
  r.name = "mean_preservation";
  r.relation = Relation::equal;
  r.parameters = {{"t", fmt(t)}, {"mode", to_string(engine.mode())}};
  if (engine.is_exact()) {
    r.lhs = engine.expect([&](const Configuration& c) { return pt(c); }).value;
    r.rhs = engine.expect([&](const Configuration& c) { return f(c); }).value;
    const auto& caps = engine.truncation().caps();
    r.tolerance = engine.exact_tolerance(
        sup_abs_on_box(f, caps, 0, engine.truncation().budget()));
  } else {
    const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> out) {
      out[0] = pt(c);
      out[1] = f(c);
    });
    r.lhs = m.mean[0];
    r.rhs = m.mean[1];
    const double grad[2] = {1.0, -1.0};
    const double outer = m.delta_stderr(grad);
    r.stderr = std::sqrt(outer * outer + inner_estimate_variance(engine, f, t, [](double) { return 1.0; }));
  }
  decide(r);
  return r;
}

InequalityReport commutation_check(const Engine& engine, const Functional& f, double t) {
  require_exact(engine, "commutation check");
  const std::size_t m = engine.space().atom_count();
  const Functional pt = apply_semigroup(engine, f, t);
  std::vector<Functional> pt_diff;
  for (std::size_t i = 0; i < m; ++i) pt_diff.push_back(apply_semigroup(engine, difference(f, i), t));
  const double decay = std::exp(-t);
  double worst = 0.0, scale = 0.0;
  engine.truncation().for_each_state([&](const Configuration& c, std::size_t) {
    for (std::size_t i = 0; i < m; ++i) {
      const double lhs = add_one_cost(pt, c, i);
      const double rhs = decay * pt_diff[i](c);
      worst = std::max(worst, std::abs(lhs - rhs));
      scale = std::max({scale, std::abs(pt(c)), std::abs(pt(c.plus(i)))});
    }
  });
  InequalityReport r;
  r.name = "commutation";
  r.relation = Relation::equal;
  r.lhs = worst;
  r.rhs = 0.0;
  r.tolerance = engine.exact_tolerance(scale);
  r.parameters = {{"t", fmt(t)}};
  r.note = "lhs is the max deviation |D(P_t F) - e^-t P_t DF|";
  decide(r);
  return r;
}

InequalityReport semigroup_property_check(const Engine& engine, const Functional& f, double s,
                                          double t) {
  require_exact(engine, "semigroup property check");
  // The outer contraction reads the inner image up to twice the caps.
  int margin = 0;
  for (int c : engine.truncation().caps()) margin = std::max(margin, c);
  const Functional inner = t == 0.0 ? f : exact_image(engine, f, t, margin);
  const Functional composed = apply_semigroup(engine, inner, s);
  const Functional direct = apply_semigroup(engine, f, s + t);
  double worst = 0.0, scale = 0.0;
  engine.truncation().for_each_state([&](const Configuration& c, std::size_t) {
    const double a = composed(c), b = direct(c);
    worst = std::max(worst, std::abs(a - b));
    scale = std::max({scale, std::abs(a), std::abs(b)});
  });
  InequalityReport r;
  r.name = "semigroup_property";
  r.relation = Relation::equal;
  r.lhs = worst;
  r.rhs = 0.0;
  r.tolerance = engine.exact_tolerance(scale);
  r.parameters = {{"s", fmt(s)}, {"t", fmt(t)}};
  r.note = "lhs is the max deviation |P_s P_t F - P_(s+t) F|";
  decide(r);
  return r;
}

InequalityReport generator_check(const Engine& engine, const Functional& f, double h) {
  require_exact(engine, "generator check");
  if (!(h > 0.0)) throw PreconditionError("generator step must be positive");
  const auto& space = engine.space();
  const auto& trunc = engine.truncation();
  const Functional ph = apply_semigroup(engine, f, h);
  double worst = 0.0;
  trunc.for_each_state([&](const Configuration& c, std::size_t) {
    const double fd = (ph(c) - f(c)) / h;
    worst = std::max(worst, std::abs(fd - generator(space, f, c)));
  });
  // Taylor remainder: |P_h F - F - h L F| <= (h^2 / 2) sup |L^2 F| over the
  // states the truncated kernel can reach (counts up to twice the caps).
  const Functional lf = generator_functional(space, f);
  const Functional l2f = generator_functional(space, lf);
  const double sup_l2 = sup_abs_on_box(l2f, trunc.caps(), *std::max_element(trunc.caps().begin(),
                                                                            trunc.caps().end()),
                                       trunc.budget());
  const double sup_f = sup_abs_on_box(f, trunc.caps(), *std::max_element(trunc.caps().begin(),
                                                                         trunc.caps().end()),
                                      trunc.budget());
  InequalityReport r;
  r.name = "generator";
  r.lhs = worst;
  r.rhs = 0.5 * h * sup_l2;
  r.tolerance = (10.0 * engine.tail_mass() + 64.0 * std::numeric_limits<double>::epsilon()) *
                std::max(1.0, sup_f) / h;
  r.parameters = {{"h", fmt(h)}};
  r.note = "lhs is max |(P_h F - F)/h - L F|; rhs the second-order Taylor bound";
  decide(r);
  return r;
}

InequalityReport symmetry_check(const Engine& engine, const Functional& f, const Functional& g) {
  require_exact(engine, "symmetry check");
  const auto& space = engine.space();
  const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> out) {
    out[0] = f(c) * generator(space, g, c);
    out[1] = g(c) * generator(space, f, c);
  });
  const double minus_gamma = -gamma_expectation(f, g, engine).value;
  double scale = 0.0;
  engine.truncation().for_each_state([&](const Configuration& c, std::size_t) {
    scale = std::max({scale, std::abs(f(c) * generator(space, g, c)),
                      std::abs(g(c) * generator(space, f, c))});
  });
  InequalityReport r;
  r.name = "symmetry";
  r.relation = Relation::equal;
  r.lhs = m.mean[0];
  r.rhs = m.mean[1];
  r.tolerance = engine.exact_tolerance(scale);
  r.parameters = {{"E[GLF]", fmt(m.mean[1])}, {"E[FLG]", fmt(m.mean[0])},
                  {"-E[Gamma]", fmt(minus_gamma)}};
  decide(r);
  const double spread = std::max({std::abs(m.mean[0] - m.mean[1]), std::abs(m.mean[0] - minus_gamma),
                                  std::abs(m.mean[1] - minus_gamma)});
  if (spread > r.tolerance) r.verdict = Verdict::violated;
  r.note = "three-way agreement of E[FLG], E[GLF], -E[Gamma(F,G)]";
  return r;
}

LpNorm lp_norm(const Engine& engine, const Functional& f, double p) {
  if (!(p >= 1.0)) throw PreconditionError("p must lie in [1, inf]");
  LpNorm out;
  out.p = p;
  if (std::isinf(p)) {
    out.value = engine.sup_abs([&](const Configuration& c) { return f(c); });
    out.lower_bound = !engine.is_exact();
    return out;
  }
  const Estimate moment = engine.expect([&](const Configuration& c) { return std::pow(std::abs(f(c)), p); });
  if (!std::isfinite(moment.value)) throw NonFiniteValue("moment is not finite");
  out.value = std::pow(moment.value, 1.0 / p);
  if (moment.stderr) {
    out.stderr = moment.value > 0.0
                     ? *moment.stderr * std::pow(moment.value, 1.0 / p - 1.0) / p
                     : 0.0;
  }
  return out;
}

double sup_abs_on_box(const Functional& f, std::span<const int> caps, int extra, std::size_t budget) {
  std::vector<int> box(caps.begin(), caps.end());
  for (auto& b : box) b += extra;
  box_size(box, budget * 64);
  double best = 0.0;
  for_each_in_box(box, [&](const Configuration& c, std::size_t) { best = std::max(best, std::abs(f(c))); });
  return best;
}

InequalityReport pointwise_gradient_check(const Engine& engine, const Functional& f, double t) {
  require_exact(engine, "pointwise gradient check");
  const auto& trunc = engine.truncation();
  if (!(f.bounded_by() && *f.bounded_by() <= 1.0)) {
    const int reach = *std::max_element(trunc.caps().begin(), trunc.caps().end()) + kDifferenceExtension;
    if (sup_abs_on_box(f, trunc.caps(), reach, trunc.budget()) > 1.0)
      throw PreconditionError("pointwise gradient bound requires |F| <= 1");
  }
  const Functional pt = apply_semigroup(engine, f, t);
  double worst = 0.0;
  trunc.for_each_state([&](const Configuration& c, std::size_t) {
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(add_one_cost(pt, c, i)));
  });
  InequalityReport r;
  r.name = "pointwise_gradient";
  r.lhs = worst;
  r.rhs = 2.0 * std::exp(-t);
  r.tolerance = engine.exact_tolerance(1.0);
  r.parameters = {{"t", fmt(t)}};
  decide(r);
  return r;
}

InequalityReport integrated_gradient_check(const Engine& engine, const Functional& f, double t,
                                           double p) {
  if (!(p >= 2.0)) throw PreconditionError("integrated gradient bound needs p >= 2");
  if (!(t > 0.0)) throw PreconditionError("integrated gradient bound needs t > 0");
  const auto& weights = engine.space().weights();
  const Functional pt = apply_semigroup(engine, f, t);
  auto grad_norm = [&](const Configuration& c) {
    const double base = pt(c);
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double d = pt(c.plus(i)) - base;
      s += weights[i] * d * d;
    }
    return std::sqrt(s);
  };
  InequalityReport r;
  r.name = "integrated_gradient";
  const LpNorm fnorm = lp_norm(engine, f, p);
  const double factor = std::exp(-t) / std::sqrt(-std::expm1(-t));
  r.rhs = factor * fnorm.value;
  if (std::isinf(p)) {
    r.lhs = engine.sup_abs(grad_norm);
  } else {
    const auto m = engine.expect_moments(2, [&](const Configuration& c, std::span<double> out) {
      out[0] = std::pow(grad_norm(c), p);
      out[1] = std::pow(std::abs(f(c)), p);
    });
    r.lhs = std::pow(m.mean[0], 1.0 / p);
    if (!engine.is_exact()) {
      const double g0 = m.mean[0] > 0 ? std::pow(m.mean[0], 1.0 / p - 1.0) / p : 0.0;
      const double g1 = m.mean[1] > 0 ? -factor * std::pow(m.mean[1], 1.0 / p - 1.0) / p : 0.0;
      const double grad[2] = {g0, g1};
      r.stderr = m.delta_stderr(grad);
    }
  }
  r.tolerance = engine.is_exact() ? engine.exact_tolerance(r.rhs) : 0.0;
  r.parameters = {{"p", fmt(p)}, {"t", fmt(t)}};
  decide(r);
  return r;
}

}  // namespace pspace
