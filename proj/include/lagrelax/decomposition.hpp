#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lagrelax/model.hpp"

namespace lagrelax {

enum class Strategy { DisjointEdges, SpanningTrees, TreePlusLeaves, Loops, InducedBlocks, ThinStrips };

Strategy parse_strategy(std::string_view name);
std::string to_string(Strategy s);

struct DecompositionParams {
  /// Side of the square blocks used by induced-blocks; blocks overlap by one row/column.
  std::size_t block = 3;
  /// Strip width K and overlap L for thin-strips.
  std::size_t strip_width = 4;
  std::size_t strip_overlap = 2;
  /// Cap on the number of spanning forests for non-grid graphs (0: as many as needed).
  std::size_t max_trees = 0;
  /// Largest admissible treewidth of any component.
  std::size_t treewidth_bound = 8;
  /// Add zero-coefficient edges across shared block/strip boundaries before decomposing.
  bool overlap_edges = false;
};

struct ReplicaEdge {
  std::size_t origin = 0;            // index into the original graph's hyperedges
  std::vector<std::size_t> nodes;    // replica nodes, aligned with the original edge's vertex order
  std::size_t component = 0;
};

struct Component {
  std::vector<std::size_t> nodes;    // replica nodes (ids in V')
  std::vector<std::size_t> edges;    // replica edges (ids into ReplicationMap::edges)
  bool intermediary = false;
};

/// Strip geometry kept by thin-strips so Gaussian agreement blocks can be derived.
struct StripLayout {
  GridShape grid;
  std::vector<std::size_t> starts;   // first column of each strip
  std::size_t width = 0;
  std::size_t block_rows = 0;
};

/// Replication map Gamma from the augmented graph G' onto G. Singleton
/// hyperedges are carried by node replicas, so `edges` only holds replicas of
/// hyperedges with two or more vertices.
struct ReplicationMap {
  std::size_t original_vertex_count = 0;
  std::vector<VertexSet> original_edges;

  std::vector<Vertex> node_origin;             // Gamma on V'
  std::vector<std::size_t> node_component;
  std::vector<ReplicaEdge> edges;
  std::vector<Component> components;
  std::vector<std::vector<std::size_t>> node_replicas;  // R(v)
  std::vector<std::vector<std::size_t>> edge_replicas;  // R(E); empty for singleton hyperedges
  /// Hyperedges a strategy could only cover by a dedicated fallback component.
  std::vector<std::size_t> fallback_edges;
  std::optional<StripLayout> strips;

  std::size_t augmented_vertex_count() const { return node_origin.size(); }
  /// r_E for an original hyperedge (r_v for singleton hyperedges).
  std::size_t replica_count(std::size_t edge) const;
  /// Largest junction-tree clique over all components.
  std::size_t max_clique_size() const;
};

/// Starts of windows of width w over n positions advancing by `step`; the last
/// window is clamped to end at n.
std::vector<std::size_t> window_starts(std::size_t n, std::size_t w, std::size_t step);

/// Hyperedges that overlap_edges would add for this strategy (empty when not applicable).
std::vector<VertexSet> overlap_edge_candidates(const Hypergraph& graph, Strategy strategy,
                                               const DecompositionParams& params);

/// Throws UncoveredEdge when a strategy cannot place a hyperedge and
/// InvalidInput for unsupported geometry or a violated treewidth bound.
ReplicationMap build_decomposition(const Hypergraph& graph, Strategy strategy,
                                   const DecompositionParams& params = {});

/// Adds an isolated intermediary component for every class whose replicas all
/// share one component, so that each class has replicas in at least two components.
ReplicationMap add_intermediaries(const ReplicationMap& map);

/// Partition of a class's replicas into update groups with at most one replica
/// per component. `components[i]` is the component of replica i.
std::vector<std::vector<std::size_t>> update_groups(const std::vector<std::size_t>& components);

Assignment lift_assignment(const Assignment& x, const ReplicationMap& map);
Eigen::VectorXd lift_assignment(const Eigen::VectorXd& x, const ReplicationMap& map);

struct Inconsistency {
  Vertex vertex = 0;
  std::vector<std::size_t> replicas;
  std::vector<int> values;
};

struct Projection {
  std::optional<Assignment> assignment;
  std::vector<Inconsistency> violations;
};

Projection project_assignment(const Assignment& x_aug, const ReplicationMap& map);

/// One discrete factor of the augmented model: a node table (one replica node)
/// or a replica-edge table.
struct AugmentedFactor {
  std::vector<std::size_t> nodes;
  std::size_t component = 0;
  std::size_t cls = 0;
  std::vector<double> table;
};

/// Equivalence class: all replicas of one original node or hyperedge.
struct ReplicaClass {
  VertexSet vertices;
  bool is_node = true;
  std::vector<std::size_t> factors;
  std::vector<std::vector<std::size_t>> groups;  // positions into `factors`
};

/// Replicated discrete model. Factor ids: node factors first (id == replica
/// node id), then one factor per replica edge. Classes: all nodes first, then
/// non-singleton hyperedges in graph order.
class DiscreteAugmented {
 public:
  DiscreteAugmented(const DiscreteFactorModel& model, ReplicationMap map);

  const ReplicationMap& map() const { return map_; }
  const DiscreteFactorModel& base() const { return base_; }
  std::size_t factor_count() const { return factors_.size(); }
  const AugmentedFactor& factor(std::size_t f) const { return factors_[f]; }
  std::vector<double>& table(std::size_t f) { return factors_[f].table; }
  const std::vector<ReplicaClass>& classes() const { return classes_; }
  /// theta_E phi_E as a table over the class scope.
  const std::vector<double>& target(std::size_t cls) const { return targets_[cls]; }
  const std::vector<std::vector<std::size_t>>& component_factors() const { return component_factors_; }

  /// f'(x') including the model constant.
  double evaluate(const Assignment& x_aug) const;
  /// max over classes and table entries of |sum of replica tables - theta_E phi_E|.
  double consistency_residual() const;

 private:
  DiscreteFactorModel base_;
  ReplicationMap map_;
  std::vector<AugmentedFactor> factors_;
  std::vector<ReplicaClass> classes_;
  std::vector<std::vector<double>> targets_;
  std::vector<std::vector<std::size_t>> component_factors_;
};

/// Uniform split theta'_{E'} = theta_E / r_E.
DiscreteAugmented split_potentials(const DiscreteFactorModel& model, const ReplicationMap& map);

struct GaussianBlock {
  std::vector<std::size_t> nodes;  // augmented node ids, defines the local order
  Eigen::MatrixXd information;
  Eigen::VectorXd potential;
};

struct ClassReplica {
  std::size_t component = 0;
  std::vector<Eigen::Index> local;  // positions within the component block
};

struct AgreementClass {
  VertexSet vertices;  // original vertices (or coarse ids for multiscale classes)
  std::vector<ClassReplica> replicas;
  std::vector<std::vector<std::size_t>> groups;
  std::size_t scale = 0;
};

/// Replicated Gaussian model: a dense (J, h) block per component, a lift
/// matrix A with x' = A x, and the agreement classes driving the updates.
struct GaussianAugmented {
  std::size_t original_vertex_count = 0;
  std::vector<GaussianBlock> components;
  std::vector<std::size_t> node_component;
  std::vector<Eigen::Index> node_local;
  Eigen::SparseMatrix<double> lift;
  /// Augmented nodes that are plain copies of each original vertex.
  std::vector<std::vector<std::size_t>> node_replicas;
  std::vector<AgreementClass> classes;

  std::size_t augmented_vertex_count() const { return node_component.size(); }
  Eigen::SparseMatrix<double> augmented_information() const;
  Eigen::VectorXd augmented_potential() const;
  /// ||A^T J' A - J||_inf + ||A^T h' - h||_inf against the original model.
  double consistency_residual(const GaussianInfoModel& model) const;
  /// f'(A x) for an original-space x.
  double evaluate_lifted(const Eigen::VectorXd& x) const;
};

/// Uniform split J_E / r_E, h_E / r_E. Agreement classes are the K x L
/// overlap blocks for thin-strips maps and the replicated nodes and
/// hyperedges otherwise. Throws InvalidInput when a class has two replicas
/// in one component.
GaussianAugmented split_potentials(const GaussianInfoModel& model, const ReplicationMap& map);

}  // namespace lagrelax
