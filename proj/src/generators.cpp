#include "lagrelax/generators.hpp"

#include <string>

#include "lagrelax/error.hpp"
#include "lagrelax/rng.hpp"

namespace lagrelax {

namespace {

std::vector<std::pair<Vertex, Vertex>> grid_edges(const GridShape& g) {
  std::vector<std::pair<Vertex, Vertex>> edges;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) {
      if (c + 1 < g.cols) edges.emplace_back(g.index(r, c), g.index(r, c + 1));
      if (r + 1 < g.rows) edges.emplace_back(g.index(r, c), g.index(r + 1, c));
    }
  return edges;
}

// Adds 2 eps to the diagonal and a N(0, 1) potential per node, spread over the
// cliques that contain it.
GaussianInfoModel finish(std::size_t n, std::vector<CliqueTerm> terms, const GridShape& grid, double eps,
                         std::uint64_t seed) {
  if (!(eps > 0.0)) throw InvalidInput("regularization eps must be positive");
  std::vector<std::size_t> count(n, 0);
  for (const auto& t : terms)
    for (Vertex v : t.vertices) ++count[v];
  Rng rng(seed);
  Eigen::VectorXd h(static_cast<Eigen::Index>(n));
  for (Eigen::Index v = 0; v < h.size(); ++v) h(v) = rng.normal();
  for (auto& t : terms) {
    t.potential = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.vertices.size()));
    for (std::size_t i = 0; i < t.vertices.size(); ++i) {
      const Vertex v = t.vertices[i];
      const auto ii = static_cast<Eigen::Index>(i);
      const double share = 1.0 / static_cast<double>(count[v]);
      t.information(ii, ii) += 2.0 * eps * share;
      t.potential(ii) = h(static_cast<Eigen::Index>(v)) * share;
    }
  }
  return GaussianInfoModel(n, std::move(terms), grid);
}

GaussianInfoModel membrane(const GridShape& grid, double eps, std::uint64_t seed) {
  std::vector<CliqueTerm> terms;
  for (auto [u, v] : grid_edges(grid)) {
    Eigen::MatrixXd j(2, 2);
    j << 2.0, -2.0, -2.0, 2.0;
    terms.push_back({{u, v}, j, {}});
  }
  return finish(grid.size(), std::move(terms), grid, eps, seed);
}

}  // namespace

Coupling parse_coupling(std::string_view name) {
  if (name == "attractive") return Coupling::Attractive;
  if (name == "frustrated") return Coupling::Frustrated;
  throw InvalidInput("unknown coupling mode '" + std::string(name) + "'");
}

DiscreteFactorModel generate_ising_grid(std::size_t m, double sigma, Coupling mode, std::uint64_t seed) {
  if (m < 2) throw InvalidInput("grid side must be at least 2");
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be non-negative");
  const GridShape grid{m, m};
  Rng rng(seed);
  std::vector<VertexSet> edges;
  std::map<VertexSet, double> coef;
  for (Vertex v = 0; v < grid.size(); ++v) {
    edges.push_back({v});
    coef[{v}] = sigma * rng.normal();
  }
  for (auto [u, v] : grid_edges(grid)) {
    edges.push_back({u, v});
    coef[{u, v}] = mode == Coupling::Attractive ? 1.0 : static_cast<double>(rng.sign());
  }
  return DiscreteFactorModel{Hypergraph(grid.size(), std::move(edges), grid), std::move(coef), 0.0};
}

GaussianInfoModel generate_thin_membrane(std::size_t m, double eps, std::uint64_t seed) {
  if (m < 3) throw InvalidInput("grid side must be at least 3");
  return membrane(GridShape{m, m}, eps, seed);
}

GaussianInfoModel generate_thin_plate(std::size_t m, double eps, std::uint64_t seed) {
  if (m < 3) throw InvalidInput("grid side must be at least 3");
  const GridShape grid{m, m};
  std::vector<CliqueTerm> terms;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      std::vector<Vertex> nbrs;
      if (r > 0) nbrs.push_back(grid.index(r - 1, c));
      if (c > 0) nbrs.push_back(grid.index(r, c - 1));
      if (c + 1 < m) nbrs.push_back(grid.index(r, c + 1));
      if (r + 1 < m) nbrs.push_back(grid.index(r + 1, c));
      const Vertex self = grid.index(r, c);
      std::vector<Vertex> all = nbrs;
      all.push_back(self);
      const VertexSet scope = make_vertex_set(all);
      Eigen::VectorXd a(static_cast<Eigen::Index>(scope.size()));
      for (std::size_t i = 0; i < scope.size(); ++i)
        a(static_cast<Eigen::Index>(i)) = scope[i] == self ? 1.0 : -1.0 / static_cast<double>(nbrs.size());
      terms.push_back({scope, 2.0 * a * a.transpose(), {}});
    }
  return finish(grid.size(), std::move(terms), grid, eps, seed);
}

GaussianInfoModel generate_membrane_chain(std::size_t n, double eps, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("chain needs at least two nodes");
  return membrane(GridShape{1, n}, eps, seed);
}

}  // namespace lagrelax
