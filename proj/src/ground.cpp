#include "pspace/ground.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace pspace {

GroundSpace::GroundSpace(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw PreconditionError("ground space needs at least one atom");
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw PreconditionError("atom weights must be strictly positive and finite");
    total_mass_ += w;
  }
  if (!std::isfinite(total_mass_)) throw PreconditionError("total mass must be finite");
}

Configuration::Configuration(std::vector<int> c) : counts(std::move(c)) {
  for (int v : counts)
    if (v < 0) throw PreconditionError("configuration counts must be non-negative");
}

Configuration Configuration::zeros(std::size_t atoms) {
  return Configuration(std::vector<int>(atoms, 0));
}

int Configuration::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

Configuration Configuration::plus(std::size_t atom) const {
  Configuration out = *this;
  ++out.counts.at(atom);
  return out;
}

Configuration Configuration::minus(std::size_t atom) const {
  Configuration out = *this;
  if (out.counts.at(atom) == 0) throw PreconditionError("cannot remove a point from an empty atom");
  --out.counts[atom];
  return out;
}

std::string to_string(const Configuration& c) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << ')';
  return os.str();
}

double poisson_pmf(int k, double mean) {
  if (k < 0) return 0.0;
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

double poisson_upper_tail(int n, double mean) {
  if (n < 0) return 1.0;
  // Below the mode the tail is not small; the complement is accurate there.
  if (n + 1 <= mean) {
    double lower = 0.0;
    for (int k = 0; k <= n; ++k) lower += poisson_pmf(k, mean);
    return std::max(0.0, 1.0 - lower);
  }
  double term = poisson_pmf(n + 1, mean);
  double sum = 0.0;
  for (int k = n + 1; term > 0.0; ++k) {
    sum += term;
    if (term < sum * 1e-18) break;
    term *= mean / (k + 1);
  }
  return sum;
}

int poisson_cap_for_tail(double mean, double tail) {
  if (!(tail > 0.0)) throw PreconditionError("tail mass must be positive");
  int n = static_cast<int>(std::floor(mean));
  while (poisson_upper_tail(n, mean) > tail) ++n;
  // Walk back down in case the floor of the mean already overshoots.
  while (n > 0 && poisson_upper_tail(n - 1, mean) <= tail) --n;
  return n;
}

namespace {

std::size_t checked_state_count(std::span<const int> caps, std::size_t budget) {
  std::size_t count = 1;
  for (int c : caps) {
    if (c < 0) throw PreconditionError("caps must be non-negative");
    const auto radix = static_cast<std::size_t>(c) + 1;
    if (count > budget / radix)
      throw BudgetExceeded("truncated state space exceeds budget of " + std::to_string(budget) +
                           " states");
    count *= radix;
  }
  if (count > budget)
    throw BudgetExceeded("truncated state space exceeds budget of " + std::to_string(budget) +
                         " states");
  return count;
}

}  // namespace

TruncatedStateSpace::TruncatedStateSpace(GroundSpace space, std::vector<int> caps, double tail_mass,
                                         std::size_t budget)
    : space_(std::move(space)), caps_(std::move(caps)), tail_mass_(tail_mass), budget_(budget) {
  if (caps_.size() != space_.atom_count())
    throw PreconditionError("caps must have one entry per atom");
  state_count_ = checked_state_count(caps_, budget_);
}

TruncatedStateSpace TruncatedStateSpace::from_tail_mass(const GroundSpace& space, double tail_mass,
                                                        std::size_t budget) {
  if (!(tail_mass > 0.0) || tail_mass >= 1.0)
    throw PreconditionError("tail mass must lie in (0,1)");
  const double per_atom = tail_mass / static_cast<double>(space.atom_count());
  std::vector<int> caps;
  caps.reserve(space.atom_count());
  for (double w : space.weights()) caps.push_back(poisson_cap_for_tail(w, per_atom));
  return TruncatedStateSpace(space, std::move(caps), tail_mass, budget);
}

TruncatedStateSpace TruncatedStateSpace::from_caps(const GroundSpace& space, std::vector<int> caps,
                                                   std::size_t budget) {
  if (caps.size() != space.atom_count())
    throw PreconditionError("caps must have one entry per atom");
  double tail = 0.0;
  for (std::size_t i = 0; i < caps.size(); ++i)
    tail += poisson_upper_tail(caps[i], space.weight(i));
  return TruncatedStateSpace(space, std::move(caps), tail, budget);
}

bool TruncatedStateSpace::contains(const Configuration& c) const {
  if (c.size() != caps_.size()) return false;
  for (std::size_t i = 0; i < caps_.size(); ++i)
    if (c[i] < 0 || c[i] > caps_[i]) return false;
  return true;
}

std::size_t TruncatedStateSpace::index(const Configuration& c) const {
  if (!contains(c)) throw CapOverflow("configuration " + to_string(c) + " outside caps");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < caps_.size(); ++i)
    idx = idx * (static_cast<std::size_t>(caps_[i]) + 1) + static_cast<std::size_t>(c[i]);
  return idx;
}

Configuration TruncatedStateSpace::configuration(std::size_t index) const {
  Configuration c = Configuration::zeros(caps_.size());
  for (std::size_t i = caps_.size(); i-- > 0;) {
    const auto radix = static_cast<std::size_t>(caps_[i]) + 1;
    c.counts[i] = static_cast<int>(index % radix);
    index /= radix;
  }
  return c;
}

void TruncatedStateSpace::for_each_state(
    const std::function<void(const Configuration&, std::size_t)>& visit) const {
  Configuration c = Configuration::zeros(caps_.size());
  for (std::size_t idx = 0; idx < state_count_; ++idx) {
    visit(c, idx);
    // Odometer increment, last atom fastest.
    for (std::size_t i = caps_.size(); i-- > 0;) {
      if (c.counts[i] < caps_[i]) {
        ++c.counts[i];
        break;
      }
      c.counts[i] = 0;
    }
  }
}

double ProbabilityTable::total() const {
  return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
}

ProbabilityTable poisson_law(const GroundSpace& space, const TruncatedStateSpace& trunc) {
  if (!(trunc.space() == space)) throw PreconditionError("truncation built for a different space");
  std::vector<std::vector<double>> marginals(space.atom_count());
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    for (int k = 0; k <= trunc.cap(i); ++k) marginals[i].push_back(poisson_pmf(k, space.weight(i)));

  ProbabilityTable table{trunc, std::vector<double>(trunc.state_count())};
  trunc.for_each_state([&](const Configuration& c, std::size_t idx) {
    double p = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) p *= marginals[i][static_cast<std::size_t>(c[i])];
    table.probabilities[idx] = p;
  });
  return table;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Configuration sample_configuration(const GroundSpace& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Configuration c = Configuration::zeros(space.atom_count());
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    std::poisson_distribution<int> dist(space.weight(i));
    c.counts[i] = dist(rng);
  }
  return c;
}

}  // namespace pspace
