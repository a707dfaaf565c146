#pragma once

// Expectation back-ends shared by every check: exact summation against the
// truncated product-Poisson law, or averaging over a seeded Monte Carlo
// sample of configurations.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pspace/ground.hpp"

namespace pspace {

enum class EngineMode { exact, monte_carlo };

const char* to_string(EngineMode mode);

/// A value with an optional standard error (present only for Monte Carlo output).
struct Estimate {
  double value = 0.0;
  std::optional<double> stderr;
};

/// Means of k jointly estimated statistics plus the covariance of those means.
struct MomentEstimate {
  std::vector<double> mean;
  std::vector<double> covariance;  // k*k, row-major; all zero in exact mode

  double cov(std::size_t i, std::size_t j) const { return covariance[i * mean.size() + j]; }
  /// Standard error of g(mean) for a linear functional with the given gradient.
  double delta_stderr(std::span<const double> gradient) const;
};

using StateFunction = std::function<double(const Configuration&)>;

class Engine {
 public:
  static constexpr std::size_t kDefaultInnerReplications = 256;

  static Engine exact(const GroundSpace& space,
                      double tail_mass = TruncatedStateSpace::kDefaultTailMass,
                      std::size_t budget = TruncatedStateSpace::kDefaultBudget);
  static Engine exact(const TruncatedStateSpace& trunc);
  static Engine monte_carlo(const GroundSpace& space, std::size_t replications, std::uint64_t seed,
                            double tail_mass = TruncatedStateSpace::kDefaultTailMass,
                            std::size_t inner_replications = kDefaultInnerReplications);

  EngineMode mode() const { return data_->mode; }
  bool is_exact() const { return data_->mode == EngineMode::exact; }
  const GroundSpace& space() const { return data_->space; }
  /// Truncation used for exact summation and for kernel refresh caps.
  const TruncatedStateSpace& truncation() const { return data_->trunc; }
  double tail_mass() const { return data_->trunc.tail_mass(); }
  std::size_t replications() const { return data_->replications; }
  std::size_t inner_replications() const { return data_->inner_replications; }
  std::uint64_t seed() const { return data_->seed; }

  /// Exact mode only: law of every truncated state, in index order.
  const ProbabilityTable& law() const;
  /// Monte Carlo mode only: the fixed sample of configurations.
  const std::vector<Configuration>& samples() const;

  /// Visits every probed state together with its weight (probability or 1/n).
  void for_each_weighted(const std::function<void(const Configuration&, double)>& visit) const;

  Estimate expect(const StateFunction& f) const;
  MomentEstimate expect_moments(
      std::size_t k, const std::function<void(const Configuration&, std::span<double>)>& f) const;
  /// Probability of an event; in exact mode this is a truncated (sub-stochastic) sum.
  Estimate probability(const std::function<bool(const Configuration&)>& event) const;

  /// max |f| over probed states with positive weight.
  double sup_abs(const StateFunction& f) const;

  /// Absolute tolerance for an exact verdict on a quantity of the given scale.
  double exact_tolerance(double scale) const;

 private:
  struct Data {
    EngineMode mode;
    GroundSpace space;
    TruncatedStateSpace trunc;
    std::size_t replications = 0;
    std::size_t inner_replications = kDefaultInnerReplications;
    std::uint64_t seed = 0;
    std::optional<ProbabilityTable> law;
    std::vector<Configuration> samples;
  };
  explicit Engine(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

}  // namespace pspace
