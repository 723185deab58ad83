#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lagrelax {

using Vertex = std::size_t;
/// Sorted, duplicate-free list of vertices.
using VertexSet = std::vector<Vertex>;

/// Discrete labels are Ising spins, each entry -1 or +1.
using Assignment = std::vector<int>;

VertexSet make_vertex_set(std::vector<Vertex> vertices);

/// Row-major grid layout: vertex (r, c) has index r * cols + c.
struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }
  std::size_t row(Vertex v) const { return v / cols; }
  std::size_t col(Vertex v) const { return v % cols; }
  std::size_t size() const { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

class Hypergraph {
 public:
  Hypergraph() = default;

  /// Throws InvalidInput on out-of-range vertices, duplicate hyperedges,
  /// empty hyperedges, or vertices not covered by any hyperedge.
  Hypergraph(std::size_t vertex_count, std::vector<VertexSet> edges,
             std::optional<GridShape> grid = std::nullopt);

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const VertexSet& edge(std::size_t e) const { return edges_[e]; }
  std::span<const VertexSet> edges() const { return edges_; }
  const std::optional<GridShape>& grid() const { return grid_; }

  std::optional<std::size_t> find(const VertexSet& edge) const;
  /// Index of the hyperedge {v}, if present.
  std::optional<std::size_t> singleton(Vertex v) const { return singleton_[v]; }
  /// Hyperedges (any size) incident to v.
  const std::vector<std::size_t>& incident(Vertex v) const { return incident_[v]; }
  bool is_pairwise() const;

 private:
  std::size_t vertex_count_ = 0;
  std::vector<VertexSet> edges_;
  std::optional<GridShape> grid_;
  std::map<VertexSet, std::size_t> lookup_;
  std::vector<std::optional<std::size_t>> singleton_;
  std::vector<std::vector<std::size_t>> incident_;
};

/// Binary model f(x) = sum_E theta_E prod_{v in E} x_v + constant over x in {-1,+1}^n.
struct DiscreteFactorModel {
  Hypergraph graph;
  std::map<VertexSet, double> coefficients;
  double constant = 0.0;

  /// Coefficients aligned with graph.edges(); throws InvalidInput on key mismatch.
  std::vector<double> theta() const;
  std::size_t vertex_count() const { return graph.vertex_count(); }
};

/// Builds a model from coefficients on the Boltzmann features prod y_v,
/// y in {0,1}, using y = (1 + x) / 2. Every non-empty subset of a boolean
/// hyperedge becomes an Ising hyperedge; the empty subset lands in `constant`.
DiscreteFactorModel from_boolean_coefficients(std::size_t vertex_count,
                                              const std::map<VertexSet, double>& coefficients,
                                              std::optional<GridShape> grid = std::nullopt);

/// Adds zero-coefficient hyperedges that are not already present.
DiscreteFactorModel with_extra_edges(const DiscreteFactorModel& model,
                                     const std::vector<VertexSet>& extra);

struct CliqueTerm {
  VertexSet vertices;
  Eigen::MatrixXd information;  // J_E
  Eigen::VectorXd potential;    // h_E
};

/// Gaussian model in information form built from clique terms
/// f(x) = sum_E -1/2 x_E^T J_E x_E + h_E^T x_E.
class GaussianInfoModel {
 public:
  GaussianInfoModel() = default;
  GaussianInfoModel(std::size_t vertex_count, std::vector<CliqueTerm> terms,
                    std::optional<GridShape> grid = std::nullopt);

  std::size_t vertex_count() const { return graph_.vertex_count(); }
  const Hypergraph& graph() const { return graph_; }
  std::span<const CliqueTerm> terms() const { return terms_; }
  const CliqueTerm& term(std::size_t e) const { return terms_[e]; }

  /// Aggregate J = sum of zero-padded J_E.
  const Eigen::SparseMatrix<double>& information() const { return information_; }
  /// Aggregate h = sum of zero-padded h_E.
  const Eigen::VectorXd& potential() const { return potential_; }

 private:
  Hypergraph graph_;
  std::vector<CliqueTerm> terms_;
  Eigen::SparseMatrix<double> information_;
  Eigen::VectorXd potential_;
};

double evaluate_objective(const DiscreteFactorModel& model, const Assignment& x);
double evaluate_objective(const GaussianInfoModel& model, const Eigen::VectorXd& x);

struct Diagnostics {
  std::vector<std::string> issues;
  /// Coefficient keys with no hyperedge, and hyperedges with no coefficient.
  std::vector<VertexSet> key_mismatches;
  std::vector<double> clique_min_eigenvalues;
  std::vector<std::size_t> singular_cliques;
  bool aggregate_positive_definite = true;

  bool ok() const { return issues.empty(); }
};

Diagnostics validate_model(const DiscreteFactorModel& model);
Diagnostics validate_model(const GaussianInfoModel& model);

struct QuadraticSplit {
  GaussianInfoModel model;
  /// Diagonal D with aggregate(model) = J + D; entries are 0 or ridge * (blocks at the node).
  Eigen::VectorXd inflation;
  bool inflated() const { return inflation.cwiseAbs().maxCoeff() > 0.0; }
};

/// Constructive pairwise split of J into positive-definite 2x2 edge blocks
/// [[|J_ij|, J_ij], [J_ij, |J_ij|]] + ridge * I plus singleton residual cliques.
/// Throws NotPairwiseNormalizable when a residual diagonal is negative or when
/// ridge == 0 leaves singular edge blocks.
QuadraticSplit split_quadratic_cliques(const Eigen::MatrixXd& information, const Hypergraph& graph,
                                       double ridge,
                                       const Eigen::VectorXd& potential = Eigen::VectorXd());

bool is_positive_definite(const Eigen::MatrixXd& m);
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace lagrelax
