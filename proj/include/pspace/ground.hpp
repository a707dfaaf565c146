#pragma once

// Finite atomic ground spaces, Poisson configurations on them, and exact
// product-Poisson laws on truncated state spaces.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pspace {

/// Raised when a truncated state space would exceed the configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation's documented precondition does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a difference would be evaluated outside the evaluation caps.
class CapOverflow : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a functional or integrand returns NaN or an infinity.
class NonFiniteValue : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A finite measure space with m atoms and strictly positive weights.
class GroundSpace {
 public:
  explicit GroundSpace(std::vector<double> weights);

  std::size_t atom_count() const { return weights_.size(); }
  double weight(std::size_t atom) const { return weights_.at(atom); }
  std::span<const double> weights() const { return weights_; }
  double total_mass() const { return total_mass_; }

  bool operator==(const GroundSpace&) const = default;

 private:
  std::vector<double> weights_;
  double total_mass_ = 0.0;
};

/// Point measure in collapsed form: counts[i] = number of points at atom i.
struct Configuration {
  std::vector<int> counts;

  Configuration() = default;
  explicit Configuration(std::vector<int> c);
  static Configuration zeros(std::size_t atoms);

  std::size_t size() const { return counts.size(); }
  int operator[](std::size_t i) const { return counts[i]; }
  int total() const;

  /// Configuration plus one point at `atom`.
  Configuration plus(std::size_t atom) const;
  Configuration minus(std::size_t atom) const;

  bool operator==(const Configuration&) const = default;
  auto operator<=>(const Configuration&) const = default;
};

std::string to_string(const Configuration& c);

/// Per-atom truncation of the infinite count lattice.
class TruncatedStateSpace {
 public:
  static constexpr double kDefaultTailMass = 1e-12;
  static constexpr std::size_t kDefaultBudget = 1'000'000;

  /// Chooses the smallest caps with P[Poisson(w_i) > N_i] <= tail_mass / m.
  static TruncatedStateSpace from_tail_mass(const GroundSpace& space,
                                            double tail_mass = kDefaultTailMass,
                                            std::size_t budget = kDefaultBudget);

  /// Explicit caps; the recorded tail mass is the exact discarded mass bound.
  static TruncatedStateSpace from_caps(const GroundSpace& space, std::vector<int> caps,
                                       std::size_t budget = kDefaultBudget);

  const GroundSpace& space() const { return space_; }
  std::span<const int> caps() const { return caps_; }
  int cap(std::size_t atom) const { return caps_.at(atom); }
  double tail_mass() const { return tail_mass_; }
  std::size_t budget() const { return budget_; }
  std::size_t state_count() const { return state_count_; }

  bool contains(const Configuration& c) const;

  /// Mixed-radix index, atom 0 most significant.
  std::size_t index(const Configuration& c) const;
  Configuration configuration(std::size_t index) const;

  /// Visits every state in index order.
  void for_each_state(const std::function<void(const Configuration&, std::size_t)>& visit) const;

 private:
  TruncatedStateSpace(GroundSpace space, std::vector<int> caps, double tail_mass,
                      std::size_t budget);

  GroundSpace space_;
  std::vector<int> caps_;
  double tail_mass_ = 0.0;
  std::size_t budget_ = kDefaultBudget;
  std::size_t state_count_ = 0;
};

double poisson_pmf(int k, double mean);
/// P[Poisson(mean) > n], summed from the tail so small values keep full precision.
double poisson_upper_tail(int n, double mean);
/// Smallest n with P[Poisson(mean) > n] <= tail.
int poisson_cap_for_tail(double mean, double tail);

/// Exact product-Poisson probabilities over a truncated state space.
struct ProbabilityTable {
  TruncatedStateSpace states;
  std::vector<double> probabilities;

  double total() const;
};

ProbabilityTable poisson_law(const GroundSpace& space, const TruncatedStateSpace& trunc);

/// splitmix64 finaliser over (master, stream); used to derive independent sub-streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

Configuration sample_configuration(const GroundSpace& space, std::uint64_t seed);

}  // namespace pspace
