#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lagrelax/decomposition.hpp"
#include "lagrelax/gaussian_lr.hpp"
#include "lagrelax/gaussian_marginal.hpp"
#include "lagrelax/model.hpp"

namespace lagrelax {

/// Constraint x_coarse = A x_fine between one fine window and a pair of
/// adjacent coarse variables held by a canonical coarse window.
struct CrossScalePair {
  std::size_t scale = 0;  // fine scale; the coarse side is scale + 1
  std::size_t fine_component = 0;
  std::size_t coarse_component = 0;
  std::vector<Eigen::Index> coarse_local;
  Eigen::MatrixXd summary;  // A, block averages over the whole fine window
};

/// Every scale is covered by windows of 2 * block variables overlapping by
/// block; coarse variable j at scale s + 1 is the average of fine block j.
struct MultiscaleModel {
  GaussianInfoModel base;
  std::size_t block = 2;
  std::vector<std::size_t> scale_sizes;
  GaussianAugmented aug;
  std::vector<std::size_t> component_scale;
  std::vector<CrossScalePair> pairs;

  std::size_t levels() const { return scale_sizes.size(); }
};

/// Throws InvalidInput when the chain length is not divisible by block at
/// every level or a clique does not fit inside a window.
MultiscaleModel build_multiscale(const GaussianInfoModel& chain, std::size_t levels, std::size_t block = 2);

struct CrossScaleStep {
  Eigen::MatrixXd coarse_information;  // Lambda
  Eigen::VectorXd coarse_potential;    // lambda
};

/// Closed-form matching step: with S = A J1^-1 A^T,
/// Lambda = (S^-1 - J2) / 2 and lambda = (S^-1 A J1^-1 h1 - h2) / 2.
CrossScaleStep cross_scale_step(const Eigen::MatrixXd& summary, const MarginalInfo& fine, const MarginalInfo& coarse);

/// Applies one cross-scale update in place: (lambda, Lambda) is added to the
/// coarse block and (A^T lambda, A^T Lambda A) removed from the fine window.
/// A step that breaks positive definiteness is halved once, then rejected
/// with NotPositiveDefinite. Returns max(|Lambda|, |lambda|) of the full step.
double cross_scale_update(GaussianAugmented& aug, const CrossScalePair& pair);

struct MultiscaleOptions {
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  std::optional<Eigen::VectorXd> reference;
  /// Stop once the relative inf-norm mean error drops below this (0: off).
  double target_relative_error = 0.0;
};

struct MultiscaleReport {
  std::vector<GaussianTraceEntry> trace;
  /// Relative inf-norm mean error per sweep (empty without a reference).
  std::vector<double> relative_error;
  Eigen::VectorXd means;
  double dual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double max_consistency_residual = 0.0;
};

/// Per outer iteration: an in-scale sweep at every scale, then the
/// cross-scale updates from the finest pair upwards.
MultiscaleReport solve_multiscale(const GaussianInfoModel& chain, std::size_t levels, std::size_t block,
                                  const MultiscaleOptions& options = {});

/// Iterations of a mean-error trace until the relative error first drops below
/// `target`; nullopt if it never does.
std::optional<std::size_t> iterations_to(const std::vector<double>& relative_error, double target);

}  // namespace lagrelax
