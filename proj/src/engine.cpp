#include "pspace/engine.hpp"

#include <cmath>
#include <limits>

namespace pspace {

const char* to_string(EngineMode mode) {
  return mode == EngineMode::exact ? "exact" : "mc";
}

double MomentEstimate::delta_stderr(std::span<const double> gradient) const {
  const std::size_t k = mean.size();
  double var = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) var += gradient[i] * gradient[j] * cov(i, j);
  return std::sqrt(std::max(0.0, var));
}

Engine Engine::exact(const GroundSpace& space, double tail_mass, std::size_t budget) {
  return exact(TruncatedStateSpace::from_tail_mass(space, tail_mass, budget));
}

Engine Engine::exact(const TruncatedStateSpace& trunc) {
  auto data = std::make_shared<Data>(Data{EngineMode::exact, trunc.space(), trunc, 0, kDefaultInnerReplications, 0, std::nullopt, {}});
  data->law = poisson_law(trunc.space(), trunc);
  return Engine(std::move(data));
}

Engine Engine::monte_carlo(const GroundSpace& space, std::size_t replications, std::uint64_t seed,
                           double tail_mass, std::size_t inner_replications) {
  if (replications < 2) throw PreconditionError("Monte Carlo needs at least two replications");
  auto trunc = TruncatedStateSpace::from_tail_mass(space, tail_mass,
                                                   std::numeric_limits<std::size_t>::max());
  auto data = std::make_shared<Data>(Data{EngineMode::monte_carlo, space, std::move(trunc), 0, kDefaultInnerReplications, 0, std::nullopt, {}});
  data->replications = replications;
  data->inner_replications = inner_replications;
  data->seed = seed;
  data->samples.reserve(replications);
  for (std::size_t r = 0; r < replications; ++r)
    data->samples.push_back(sample_configuration(space, derive_seed(seed, r)));
  return Engine(std::move(data));
}

const ProbabilityTable& Engine::law() const {
  if (!data_->law) throw PreconditionError("probability table requires exact mode");
  return *data_->law;
}

const std::vector<Configuration>& Engine::samples() const {
  if (is_exact()) throw PreconditionError("samples require Monte Carlo mode");
  return data_->samples;
}

void Engine::for_each_weighted(
    const std::function<void(const Configuration&, double)>& visit) const {
  if (is_exact()) {
    const auto& probs = data_->law->probabilities;
    data_->trunc.for_each_state(
        [&](const Configuration& c, std::size_t idx) { visit(c, probs[idx]); });
    return;
  }
  const double w = 1.0 / static_cast<double>(data_->samples.size());
  for (const auto& c : data_->samples) visit(c, w);
}

Estimate Engine::expect(const StateFunction& f) const {
  auto m = expect_moments(1, [&](const Configuration& c, std::span<double> out) { out[0] = f(c); });
  Estimate e{m.mean[0], std::nullopt};
  if (!is_exact()) e.stderr = std::sqrt(std::max(0.0, m.cov(0, 0)));
  return e;
}

MomentEstimate Engine::expect_moments(
    std::size_t k, const std::function<void(const Configuration&, std::span<double>)>& f) const {
  MomentEstimate out{std::vector<double>(k, 0.0), std::vector<double>(k * k, 0.0)};
  std::vector<double> buf(k);
  if (is_exact()) {
    for_each_weighted([&](const Configuration& c, double w) {
      if (w == 0.0) return;
      f(c, buf);
      for (std::size_t i = 0; i < k; ++i) {
        if (!std::isfinite(buf[i]))
          throw NonFiniteValue("non-finite value at state " + to_string(c));
        out.mean[i] += w * buf[i];
      }
    });
    return out;
  }
  // Two passes keep the covariance numerically centred.
  const auto& samples = data_->samples;
  const double n = static_cast<double>(samples.size());
  std::vector<double> values(samples.size() * k);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    f(samples[r], std::span<double>(values.data() + r * k, k));
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(values[r * k + i]))
        throw NonFiniteValue("non-finite value at sample " + to_string(samples[r]));
      out.mean[i] += values[r * k + i];
    }
  }
  for (auto& m : out.mean) m /= n;
  for (std::size_t r = 0; r < samples.size(); ++r)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        out.covariance[i * k + j] +=
            (values[r * k + i] - out.mean[i]) * (values[r * k + j] - out.mean[j]);
  for (auto& c : out.covariance) c /= (n - 1.0) * n;
  return out;
}

Estimate Engine::probability(const std::function<bool(const Configuration&)>& event) const {
  return expect([&](const Configuration& c) { return event(c) ? 1.0 : 0.0; });
}

double Engine::sup_abs(const StateFunction& f) const {
  double best = 0.0;
  for_each_weighted([&](const Configuration& c, double w) {
    if (w <= 0.0) return;
    const double v = std::abs(f(c));
    if (!std::isfinite(v)) throw NonFiniteValue("non-finite value at state " + to_string(c));
    best = std::max(best, v);
  });
  return best;
}

double Engine::exact_tolerance(double scale) const {
  const double s = std::max(1.0, std::abs(scale));
  // Truncation slack plus a floor for summation round-off.
  return 10.0 * tail_mass() * s + 1e-13 * s;
}

}  // namespace pspace
