#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagrelax/decomposition.hpp"
#include "lagrelax/junction_tree.hpp"
#include "lagrelax/model.hpp"

namespace lagrelax {

struct TemperatureSchedule {
  double initial = 1.0;
  double decay = 0.5;
  double minimum = 1e-3;
  double inner_tol = 1e-6;
  std::size_t max_sweeps_per_temperature = 200;

  /// Throws InvalidInput unless initial > minimum > 0 and 0 < decay < 1.
  void validate() const;
  /// initial, initial * decay, ... while >= minimum.
  std::vector<double> temperatures() const;
};

struct DiscreteSolveOptions {
  TemperatureSchedule schedule;
  double gap_tol = 1e-6;
  double tie_tol = 1e-6;
  std::size_t max_polish_sweeps = 200;  // zero-temperature sweeps after annealing
  double tau_floor = 1e-9;
  DecompositionParams decomposition;
};

struct DualTraceEntry {
  std::size_t sweep = 0;
  double tau = 0.0;          // 0 marks max-marginal sweeps
  double smooth_dual = 0.0;  // g(lambda; tau), equal to g for max-marginal sweeps
  double dual = 0.0;
  double best_primal = 0.0;
  double max_residual = 0.0;
  double wall_ms = 0.0;
};

struct Estimate {
  Assignment assignment;
  std::vector<std::size_t> ties;
  double value = 0.0;
  /// Per original node: re-summed max-marginal at (+1, -1).
  std::vector<std::array<double, 2>> resummed;
  /// Component-wise argmax projected back, when all replicas agree.
  std::optional<Assignment> consistent;
};

struct DiscreteSolveReport {
  std::string strategy;
  std::size_t components = 0;
  std::size_t augmented_vertices = 0;
  std::vector<DualTraceEntry> trace;
  /// Converged smooth dual at the end of each temperature stage.
  std::vector<std::pair<double, double>> stage_duals;
  double final_dual = 0.0;
  double best_primal = -std::numeric_limits<double>::infinity();
  Assignment best_assignment;
  bool gap = false;
  Assignment estimate;
  std::vector<std::size_t> tie_nodes;
  std::vector<std::array<double, 2>> resummed;
  bool consistent_decode = false;
  std::size_t sweeps = 0;
  std::size_t messages = 0;
};

/// Block coordinate descent on the Lagrangian dual of a replicated discrete
/// model. The multipliers live implicitly in the replica tables.
class DiscreteSolver {
 public:
  explicit DiscreteSolver(DiscreteAugmented aug, DiscreteSolveOptions options = {});

  const DiscreteAugmented& augmented() const { return aug_; }
  const DiscreteSolveOptions& options() const { return options_; }
  /// Overwrites one replica table; callers are responsible for consistency.
  void set_table(std::size_t factor, std::span<const double> table);

  /// g(lambda): sum of component maxima.
  double dual_value();
  /// g(lambda; tau): sum of component tau * log-partitions.
  double smooth_dual_value(double tau);
  /// For a class with replicas A_0..A_{r-1}: p[A_0](x) - p[A_i](x) for i >= 1,
  /// concatenated over i, each block over all table entries x.
  std::vector<double> dual_gradient(double tau, std::size_t cls);
  /// tau * ln |X'|, the width of the smooth-dual sandwich.
  double sandwich_width(double tau) const;

  /// One class update at temperature tau (tau == 0: max-marginals). Returns
  /// the largest pre-update disagreement.
  double update_class(std::size_t cls, double tau);
  double sweep_log_marginal_averaging(double tau);
  double sweep_max_marginal_averaging();

  /// Max-marginal of the whole augmented objective for one replica factor.
  std::vector<double> global_max_marginal(std::size_t factor);
  Estimate extract_estimate();

  /// Annealed sweeps then zero-temperature polishing.
  DiscreteSolveReport run();

  std::size_t message_count() const;
  SubgraphEngine& engine(std::size_t component) { return engines_[component]; }

 private:
  std::vector<double> replica_marginal(std::size_t factor, double tau);
  void consider(const Assignment& x, double value);

  DiscreteAugmented aug_;
  DiscreteSolveOptions options_;
  std::vector<SubgraphEngine> engines_;
  std::vector<std::size_t> factor_local_;
  std::vector<std::size_t> node_local_;
  double best_primal_ = -std::numeric_limits<double>::infinity();
  Assignment best_assignment_;
};

/// Builds the decomposition (with intermediaries and optional overlap edges),
/// splits uniformly and runs the annealed solver.
DiscreteSolveReport solve_discrete(const DiscreteFactorModel& model, Strategy strategy,
                                   const DiscreteSolveOptions& options = {});

/// The augmented model solve_discrete would start from.
DiscreteAugmented prepare_discrete(const DiscreteFactorModel& model, Strategy strategy,
                                   const DecompositionParams& params);

}  // namespace lagrelax
