#include "lagrelax/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "lagrelax/error.hpp"

namespace lagrelax {

namespace {

std::string format_set(const VertexSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i];
  os << '}';
  return os.str();
}

}  // namespace

VertexSet make_vertex_set(std::vector<Vertex> vertices) {
  std::sort(vertices.begin(), vertices.end());
  if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
    throw InvalidInput("hyperedge repeats a vertex: " + format_set(vertices));
  return vertices;
}

Hypergraph::Hypergraph(std::size_t vertex_count, std::vector<VertexSet> edges,
                       std::optional<GridShape> grid)
    : vertex_count_(vertex_count),
      grid_(grid),
      singleton_(vertex_count),
      incident_(vertex_count) {
  if (grid_ && grid_->size() != vertex_count)
    throw InvalidInput("grid shape does not match vertex count");
  edges_.reserve(edges.size());
  for (auto& raw : edges) {
    if (raw.empty()) throw InvalidInput("empty hyperedge");
    VertexSet e = make_vertex_set(std::move(raw));
    if (e.back() >= vertex_count)
      throw InvalidInput("hyperedge " + format_set(e) + " references a vertex >= " +
                         std::to_string(vertex_count));
    const std::size_t index = edges_.size();
    if (!lookup_.emplace(e, index).second)
      throw InvalidInput("duplicate hyperedge " + format_set(e));
    if (e.size() == 1) singleton_[e[0]] = index;
    for (Vertex v : e) incident_[v].push_back(index);
    edges_.push_back(std::move(e));
  }
  for (Vertex v = 0; v < vertex_count_; ++v)
    if (incident_[v].empty())
      throw InvalidInput("vertex " + std::to_string(v) + " is not in any hyperedge");
}

std::optional<std::size_t> Hypergraph::find(const VertexSet& edge) const {
  auto it = lookup_.find(edge);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool Hypergraph::is_pairwise() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const VertexSet& e) { return e.size() <= 2; });
}

std::vector<double> DiscreteFactorModel::theta() const {
  std::vector<double> out(graph.edge_count());
  if (coefficients.size() != graph.edge_count())
    throw InvalidInput("coefficient keys do not match hyperedges");
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    auto it = coefficients.find(graph.edge(e));
    if (it == coefficients.end())
      throw InvalidInput("hyperedge " + format_set(graph.edge(e)) + " has no coefficient");
    out[e] = it->second;
  }
  return out;
}

DiscreteFactorModel from_boolean_coefficients(std::size_t vertex_count,
                                              const std::map<VertexSet, double>& coefficients,
                                              std::optional<GridShape> grid) {
  std::map<VertexSet, double> ising;
  double constant = 0.0;
  for (const auto& [raw, c] : coefficients) {
    VertexSet e = make_vertex_set(raw);
    const std::size_t k = e.size();
    const double scale = c / static_cast<double>(std::size_t{1} << k);
    constant += scale;
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
      VertexSet s;
      for (std::size_t i = 0; i < k; ++i)
        if (mask >> i & 1U) s.push_back(e[i]);
      ising[s] += scale;
    }
  }
  for (Vertex v = 0; v < vertex_count; ++v) ising.try_emplace(VertexSet{v}, 0.0);
  std::vector<VertexSet> edges;
  for (const auto& [e, c] : ising) edges.push_back(e);
  DiscreteFactorModel model{Hypergraph(vertex_count, std::move(edges), grid), std::move(ising),
                            constant};
  return model;
}

DiscreteFactorModel with_extra_edges(const DiscreteFactorModel& model,
                                     const std::vector<VertexSet>& extra) {
  std::vector<VertexSet> edges(model.graph.edges().begin(), model.graph.edges().end());
  auto coefficients = model.coefficients;
  for (const auto& raw : extra) {
    VertexSet e = make_vertex_set(raw);
    if (model.graph.find(e)) continue;
    if (coefficients.contains(e)) continue;
    edges.push_back(e);
    coefficients.emplace(e, 0.0);
  }
  return {Hypergraph(model.graph.vertex_count(), std::move(edges), model.graph.grid()),
          std::move(coefficients), model.constant};
}

GaussianInfoModel::GaussianInfoModel(std::size_t vertex_count, std::vector<CliqueTerm> terms,
                                     std::optional<GridShape> grid) {
  std::vector<VertexSet> edges;
  edges.reserve(terms.size());
  for (auto& t : terms) {
    const auto k = static_cast<Eigen::Index>(t.vertices.size());
    if (t.information.rows() != k || t.information.cols() != k)
      throw InvalidInput("clique information matrix has the wrong shape");
    if (t.potential.size() == 0) t.potential = Eigen::VectorXd::Zero(k);
    if (t.potential.size() != k) throw InvalidInput("clique potential has the wrong length");
    // Reorder to ascending vertex order.
    std::vector<Eigen::Index> perm(t.vertices.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](Eigen::Index a, Eigen::Index b) { return t.vertices[a] < t.vertices[b]; });
    VertexSet sorted(t.vertices.size());
    Eigen::MatrixXd j(k, k);
    Eigen::VectorXd h(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      sorted[a] = t.vertices[perm[a]];
      h(a) = t.potential(perm[a]);
      for (Eigen::Index b = 0; b < k; ++b) j(a, b) = t.information(perm[a], perm[b]);
    }
    t.vertices = make_vertex_set(sorted);
    t.information = 0.5 * (j + j.transpose());
    t.potential = h;
    edges.push_back(t.vertices);
  }
  graph_ = Hypergraph(vertex_count, std::move(edges), grid);
  terms_ = std::move(terms);

  std::vector<Eigen::Triplet<double>> triplets;
  potential_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vertex_count));
  for (const auto& t : terms_) {
    for (std::size_t a = 0; a < t.vertices.size(); ++a) {
      potential_(static_cast<Eigen::Index>(t.vertices[a])) += t.potential(static_cast<Eigen::Index>(a));
      for (std::size_t b = 0; b < t.vertices.size(); ++b)
        triplets.emplace_back(static_cast<int>(t.vertices[a]), static_cast<int>(t.vertices[b]),
                              t.information(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
  }
  const auto n = static_cast<Eigen::Index>(vertex_count);
  information_.resize(n, n);
  information_.setFromTriplets(triplets.begin(), triplets.end());
  information_.makeCompressed();
}

double evaluate_objective(const DiscreteFactorModel& model, const Assignment& x) {
  if (x.size() != model.vertex_count())
    throw InvalidInput("assignment length " + std::to_string(x.size()) + " != vertex count " +
                       std::to_string(model.vertex_count()));
  for (int label : x)
    if (label != 1 && label != -1) throw InvalidInput("labels must be -1 or +1");
  double total = model.constant;
  for (const auto& [edge, theta] : model.coefficients) {
    int product = 1;
    for (Vertex v : edge) {
      if (v >= x.size()) throw InvalidInput("coefficient on a vertex outside the assignment");
      product *= x[v];
    }
    total += theta * product;
  }
  return total;
}

double evaluate_objective(const GaussianInfoModel& model, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model.vertex_count())
    throw InvalidInput("assignment length does not match vertex count");
  return -0.5 * x.dot(model.information() * x) + model.potential().dot(x);
}

bool is_positive_definite(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return true;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Diagnostics validate_model(const DiscreteFactorModel& model) {
  Diagnostics d;
  for (const auto& [key, theta] : model.coefficients) {
    if (!model.graph.find(key)) {
      d.key_mismatches.push_back(key);
      d.issues.push_back("coefficient on non-hyperedge " + format_set(key));
    }
    if (!std::isfinite(theta)) d.issues.push_back("non-finite coefficient on " + format_set(key));
  }
  for (const auto& e : model.graph.edges()) {
    if (!model.coefficients.contains(e)) {
      d.key_mismatches.push_back(e);
      d.issues.push_back("hyperedge " + format_set(e) + " has no coefficient");
    }
  }
  return d;
}

Diagnostics validate_model(const GaussianInfoModel& model) {
  Diagnostics d;
  for (std::size_t e = 0; e < model.terms().size(); ++e) {
    const auto& t = model.term(e);
    const double lo = min_eigenvalue(t.information);
    d.clique_min_eigenvalues.push_back(lo);
    const double scale = std::max(1.0, t.information.cwiseAbs().maxCoeff());
    if (lo <= 1e-12 * scale || !is_positive_definite(t.information)) {
      d.singular_cliques.push_back(e);
      d.issues.push_back("clique singular " + format_set(t.vertices) +
                         " (min eigenvalue " + std::to_string(lo) + ")");
    }
    if (!t.potential.allFinite() || !t.information.allFinite())
      d.issues.push_back("non-finite entries in clique " + format_set(t.vertices));
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(model.information());
  d.aggregate_positive_definite = llt.info() == Eigen::Success;
  if (!d.aggregate_positive_definite) d.issues.push_back("aggregate information matrix is not positive definite");
  return d;
}

QuadraticSplit split_quadratic_cliques(const Eigen::MatrixXd& information, const Hypergraph& graph,
                                       double ridge, const Eigen::VectorXd& potential) {
  const Eigen::Index n = information.rows();
  if (information.cols() != n || static_cast<std::size_t>(n) != graph.vertex_count())
    throw InvalidInput("information matrix shape does not match the graph");
  if ((information - information.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + information.cwiseAbs().maxCoeff()))
    throw InvalidInput("information matrix is not symmetric");
  if (ridge < 0.0) throw InvalidInput("ridge must be non-negative");
  Eigen::VectorXd h = potential.size() ? potential : Eigen::VectorXd::Zero(n);
  if (h.size() != n) throw InvalidInput("potential length does not match");

  // Pairs (i, j), i < j, with nonzero coupling; they must lie inside some hyperedge.
  std::vector<std::pair<Vertex, Vertex>> pairs;
  std::vector<std::size_t> multiplicity(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd residual = information.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (information(i, j) == 0.0) continue;
      const auto vi = static_cast<Vertex>(i), vj = static_cast<Vertex>(j);
      const auto& inc = graph.incident(vi);
      const bool inside = std::any_of(inc.begin(), inc.end(), [&](std::size_t e) {
        const auto& edge = graph.edge(e);
        return std::binary_search(edge.begin(), edge.end(), vj);
      });
      if (!inside)
        throw InvalidInput("coupling (" + std::to_string(i) + "," + std::to_string(j) +
                           ") is outside the graph");
      pairs.emplace_back(vi, vj);
      ++multiplicity[vi];
      ++multiplicity[vj];
      residual(i) -= std::abs(information(i, j));
      residual(j) -= std::abs(information(i, j));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(information(i, i)));
    if (residual(i) < -tol)
      throw NotPairwiseNormalizable("negative residual diagonal " + std::to_string(residual(i)) +
                                    " at vertex " + std::to_string(i));
    if (std::abs(residual(i)) <= tol) residual(i) = 0.0;
  }
  if (!pairs.empty() && ridge == 0.0)
    throw NotPairwiseNormalizable("pairwise blocks are singular; a positive ridge is required");

  Eigen::VectorXd inflation = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double needed = ridge * static_cast<double>(multiplicity[static_cast<std::size_t>(i)]);
    if (needed == 0.0) continue;
    if (residual(i) >= needed)
      residual(i) -= needed;
    else
      inflation(i) = needed;
  }

  std::vector<CliqueTerm> terms;
  std::vector<bool> potential_placed(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto vi = static_cast<std::size_t>(i);
    if (residual(i) > 0.0) {
      terms.push_back({{vi}, Eigen::MatrixXd::Constant(1, 1, residual(i)), Eigen::VectorXd::Constant(1, h(i))});
      potential_placed[vi] = true;
    } else if (multiplicity[vi] == 0) {
      throw NotPairwiseNormalizable("vertex " + std::to_string(i) + " has non-positive diagonal");
    }
  }
  for (auto [i, j] : pairs) {
    const double c = information(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    Eigen::MatrixXd block(2, 2);
    block << std::abs(c) + ridge, c, c, std::abs(c) + ridge;
    Eigen::VectorXd hb = Eigen::VectorXd::Zero(2);
    if (!potential_placed[i]) { hb(0) = h(static_cast<Eigen::Index>(i)); potential_placed[i] = true; }
    if (!potential_placed[j]) { hb(1) = h(static_cast<Eigen::Index>(j)); potential_placed[j] = true; }
    terms.push_back({{i, j}, block, hb});
  }
  return {GaussianInfoModel(graph.vertex_count(), std::move(terms), graph.grid()), inflation};
}

}  // namespace lagrelax
