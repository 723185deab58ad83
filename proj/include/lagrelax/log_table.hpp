#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lagrelax {

// Binary tables are indexed by a bit mask over their scope: bit i holds the
// state of the i-th scope variable, state 0 is label +1 and state 1 is label -1.
// All tables live in the log domain (objective units).

constexpr int label_of_state(std::uint32_t state) { return state == 0 ? 1 : -1; }
constexpr std::uint32_t state_of_label(int label) { return label > 0 ? 0U : 1U; }

inline std::size_t table_size(std::size_t arity) { return std::size_t{1} << arity; }

/// tau == 0: max. tau > 0: tau * log sum exp(v / tau), evaluated stably.
double soft_reduce(std::span<const double> values, double tau);

/// Table of theta * prod_i x_i over `arity` spins.
std::vector<double> feature_table(std::size_t arity, double theta);

/// Label product prod_i x_i at a table index.
int feature_sign(std::size_t index);

/// Expectation of prod_i x_i under the distribution exp(scaled / tau), where
/// `scaled` is already normalized (soft_reduce(scaled, tau) == 0).
double feature_moment(std::span<const double> scaled, double tau);

/// Coefficients c_S of f(x) = sum_S c_S prod_{i in S} x_i, indexed by subset mask.
std::vector<double> monomial_coefficients(std::span<const double> table);

/// Index map from a table over `outer` into a table over `inner` (inner subset of outer).
std::vector<std::uint32_t> projection_map(std::span<const std::size_t> outer,
                                          std::span<const std::size_t> inner);

}  // namespace lagrelax
