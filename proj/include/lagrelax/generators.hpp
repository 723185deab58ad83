#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "lagrelax/model.hpp"

namespace lagrelax {

enum class Coupling { Attractive, Frustrated };

Coupling parse_coupling(std::string_view name);

/// m x m Ising grid: theta_v ~ N(0, sigma^2), theta_uv = 1 (attractive) or a
/// fair random sign (frustrated). Node fields are drawn first in vertex order,
/// then edge signs in edge order (right neighbour before lower neighbour).
DiscreteFactorModel generate_ising_grid(std::size_t m, double sigma, Coupling mode, std::uint64_t seed);

/// m x m membrane: one clique per grid edge with J_E = 2 [[1, -1], [-1, 1]].
/// The node term 2 eps and h_v ~ N(0, 1) are spread evenly over the cliques
/// containing v, so every clique is positive definite.
GaussianInfoModel generate_thin_membrane(std::size_t m, double eps, std::uint64_t seed);

/// m x m plate: one clique per node over {i} and its grid neighbours with
/// J = 2 a a^T, a_i = 1 and a_j = -1 / |N(i)|. Node terms as for the membrane.
GaussianInfoModel generate_thin_plate(std::size_t m, double eps, std::uint64_t seed);

/// 1 x n membrane chain for the multiscale experiments.
GaussianInfoModel generate_membrane_chain(std::size_t n, double eps, std::uint64_t seed);

}  // namespace lagrelax
