#pragma once

#include <functional>

#include "pspace/engine.hpp"
#include "pspace/report.hpp"

namespace pspace {

/// h(configuration, atom) for the Mecke identity.
using MeckeIntegrand = std::function<double(const Configuration&, std::size_t)>;

/// E sum_i c_i h(c, i)  versus  E sum_i w_i h(c + e_i, i).
///
/// Equality-form report. Exact tolerance is 10 * tail_mass * sup|h| * (1 + total mass).
InequalityReport check_mecke(const Engine& engine, const MeckeIntegrand& h);

}  // namespace pspace
