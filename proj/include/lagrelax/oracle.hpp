#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "lagrelax/model.hpp"

namespace lagrelax {

inline constexpr std::size_t kBruteForceCap = 24;
inline constexpr std::size_t kGridStateCap = 12;

struct DiscreteOptimum {
  double value = 0.0;
  /// Every assignment within `tol` of the maximum, in enumeration order.
  std::vector<Assignment> maximizers;
};

/// Exhaustive enumeration; throws TooLarge above kBruteForceCap vertices.
DiscreteOptimum brute_force_map(const DiscreteFactorModel& model, double tol = 1e-9);

/// Max-marginal of the original objective on a hyperedge, by enumeration.
std::vector<double> brute_force_max_marginal(const DiscreteFactorModel& model, const VertexSet& scope);

struct GridOptimum {
  double value = 0.0;
  Assignment maximizer;
};

/// Dynamic programming over grid lines of at most kGridStateCap vertices.
/// Hyperedges must lie within two adjacent lines; throws TooLarge when both
/// grid sides exceed the cap.
GridOptimum exact_grid_map(const DiscreteFactorModel& model);

struct GaussianOptimum {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  double value = 0.0;
};

/// Exact J^-1 h, diag(J^-1) and 1/2 h^T J^-1 h; throws NotPositiveDefinite.
GaussianOptimum exact_gaussian_solve(const GaussianInfoModel& model);

/// Exact covariance block P_E = (J^-1)_{E,E}.
Eigen::MatrixXd exact_covariance_block(const GaussianInfoModel& model, const VertexSet& vertices);

}  // namespace lagrelax
