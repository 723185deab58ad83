#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lagrelax/decomposition.hpp"
#include "lagrelax/gaussian_marginal.hpp"
#include "lagrelax/model.hpp"

namespace lagrelax {

struct GaussianSolveOptions {
  double tol = 1e-8;
  std::size_t max_iters = 500;
  /// Exact means; when set the trace carries the inf-norm mean error per sweep.
  std::optional<Eigen::VectorXd> reference;
  DecompositionParams decomposition;
};

struct GaussianTraceEntry {
  std::size_t sweep = 0;
  double dual = 0.0;
  double mean_err_proxy = 0.0;  // max cross-replica mean disagreement
  double var_residual = 0.0;    // pre-update information-matrix disagreement
  double max_residual = 0.0;
  double wall_ms = 0.0;
  double mean_error = 0.0;      // NaN without a reference
  double consistency = 0.0;     // ||A^T J' A - J|| + ||A^T h' - h||
  bool factorizations_ok = true;
};

struct ClassBound {
  VertexSet vertices;
  Eigen::MatrixXd bound;                  // (J-bar_E)^-1
  std::optional<Eigen::MatrixXd> tighter;  // (r_E J-bar_E)^-1 for replicas in distinct components
};

struct GaussianSolveReport {
  std::string strategy;
  std::vector<GaussianTraceEntry> trace;
  Eigen::VectorXd means;
  Eigen::VectorXd variance_bound;
  /// NaN where the tighter bound does not apply.
  Eigen::VectorXd tighter_variance_bound;
  std::vector<ClassBound> class_bounds;
  double dual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double max_consistency_residual = 0.0;
  bool all_factorizations_ok = true;
};

/// Information-form moment matching on a replicated Gaussian model.
class GaussianSolver {
 public:
  GaussianSolver(GaussianInfoModel model, GaussianAugmented aug);

  const GaussianInfoModel& model() const { return model_; }
  const GaussianAugmented& augmented() const { return aug_; }
  GaussianAugmented& augmented() { return aug_; }

  /// Sum over components of 1/2 h_c^T J_c^-1 h_c.
  double dual_value() const;
  MarginalInfo replica_info(std::size_t cls, std::size_t replica) const;
  /// Averages the replicas' marginal information forms; returns the largest
  /// pre-update disagreement.
  double update_class(std::size_t cls);
  /// Every class in order, or only the classes of one scale.
  double sweep(std::optional<std::size_t> scale = std::nullopt);
  double last_information_residual() const { return last_info_residual_; }

  /// Per augmented node: J_c^-1 h_c.
  Eigen::VectorXd replica_means() const;
  /// Per original node: average over its plain replicas.
  Eigen::VectorXd means() const;
  double mean_disagreement() const;
  /// Throws NotPositiveDefinite if any component block fails to factor.
  void check_factorizations() const;

  /// Bounds for the classes of the original scale.
  std::vector<ClassBound> class_bounds() const;
  /// Per-node (bound, tighter bound or NaN).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> variance_bounds() const;

  GaussianSolveReport run(const GaussianSolveOptions& options);

 private:
  GaussianInfoModel model_;
  GaussianAugmented aug_;
  double last_info_residual_ = 0.0;
};

/// The augmented model solve_gaussian starts from.
GaussianAugmented prepare_gaussian(const GaussianInfoModel& model, Strategy strategy, const DecompositionParams& params);

GaussianSolveReport solve_gaussian(const GaussianInfoModel& model, Strategy strategy,
                                   const GaussianSolveOptions& options = {});

}  // namespace lagrelax
