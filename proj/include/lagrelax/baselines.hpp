#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lagrelax/model.hpp"

namespace lagrelax {

/// Overlapping windows of width w advancing by w - overlap along a chain.
std::vector<VertexSet> chain_blocks(std::size_t n, std::size_t width, std::size_t overlap);
/// Full-height vertical strips of `width` columns overlapping by `overlap`.
std::vector<VertexSet> strip_blocks(const GridShape& grid, std::size_t width, std::size_t overlap);

struct BlockGaussSeidelEntry {
  std::size_t sweep = 0;
  double change = 0.0;      // inf-norm of the update over the sweep
  double mean_error = 0.0;  // inf-norm error against the reference, NaN without one
  double relative_error = 0.0;
};

struct BlockGaussSeidelReport {
  std::vector<BlockGaussSeidelEntry> trace;
  Eigen::VectorXd means;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Overlapping block Gauss-Seidel on J x = h from x = 0. Stops when a sweep
/// changes x by less than tol, or when the relative error against the
/// reference drops below target_relative_error (> 0).
BlockGaussSeidelReport baseline_block_gauss_seidel(const GaussianInfoModel& model, const std::vector<VertexSet>& blocks,
                                                   double tol, std::size_t max_iters,
                                                   const std::optional<Eigen::VectorXd>& reference = std::nullopt,
                                                   double target_relative_error = 0.0);

struct LbpReport {
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
  bool converged = false;
  std::size_t iterations = 0;
  /// A cavity precision went non-positive; messages are undefined from then on.
  bool broke_down = false;
};

/// Synchronous Gaussian loopy BP in information form on the pairwise graph of
/// the aggregate J. Converged when no message changes by more than tol.
LbpReport baseline_gaussian_lbp(const GaussianInfoModel& model, std::size_t max_iters, double tol = 1e-10);

}  // namespace lagrelax
