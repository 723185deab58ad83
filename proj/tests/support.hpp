#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "lagrelax/discrete_lr.hpp"
#include "lagrelax/model.hpp"
#include "lagrelax/rng.hpp"

namespace lagrelax::testing {

inline DiscreteFactorModel make_discrete(std::size_t n, const std::map<VertexSet, double>& coef,
                                         std::optional<GridShape> grid = std::nullopt) {
  std::vector<VertexSet> edges;
  for (const auto& [e, t] : coef) edges.push_back(e);
  return DiscreteFactorModel{Hypergraph(n, edges, grid), coef, 0.0};
}

/// The three-cycle with every node field zero and couplings `coupling`.
inline DiscreteFactorModel triangle(double coupling) {
  return make_discrete(3, {{{0, 1}, coupling}, {{1, 2}, coupling}, {{0, 2}, coupling}});
}

/// Random pairwise model on n nodes: every node has a field, a random
/// spanning path keeps it connected and extra edges appear with probability p.
/// With `triples`, a few third-order hyperedges are added.
inline DiscreteFactorModel random_model(std::uint64_t seed, std::size_t n, double p, bool triples = false) {
  Rng rng(seed);
  std::map<VertexSet, double> coef;
  for (Vertex v = 0; v < n; ++v) coef[{v}] = rng.normal();
  for (Vertex v = 1; v < n; ++v) coef[make_vertex_set({rng.index(v), v})] = rng.normal(0.0, 1.5);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (rng.uniform() < p) coef[{u, v}] = rng.normal(0.0, 1.5);
  if (triples && n >= 3)
    for (int k = 0; k < 2; ++k) {
      const Vertex a = rng.index(n);
      Vertex b = rng.index(n), c = rng.index(n);
      if (a == b || b == c || a == c) continue;
      coef[make_vertex_set({a, b, c})] = rng.normal();
    }
  return make_discrete(n, coef);
}

/// Random m x m grid with N(0, 1) fields and N(0, 1) couplings.
inline DiscreteFactorModel random_grid(std::uint64_t seed, std::size_t m, double coupling_sd = 1.0) {
  Rng rng(seed);
  const GridShape g{m, m};
  std::map<VertexSet, double> coef;
  for (Vertex v = 0; v < g.size(); ++v) coef[{v}] = rng.normal();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      if (c + 1 < m) coef[{g.index(r, c), g.index(r, c + 1)}] = rng.normal(0.0, coupling_sd);
      if (r + 1 < m) coef[{g.index(r, c), g.index(r + 1, c)}] = rng.normal(0.0, coupling_sd);
    }
  return make_discrete(g.size(), coef, g);
}

inline Assignment assignment_of(std::uint64_t mask, std::size_t n) {
  Assignment x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1U ? -1 : 1;
  return x;
}

/// tau * log sum exp(v / tau), or max for tau == 0, written out directly.
inline double reference_reduce(const std::vector<double>& v, double tau) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  if (tau == 0.0) return m;
  double s = 0.0;
  for (double x : v) s += std::exp((x - m) / tau);
  return m + tau * std::log(s);
}

/// Value of a sum of factor tables (bit i of an index <-> scope[i], set bit = -1).
inline double factor_sum(const std::vector<std::vector<std::size_t>>& scopes,
                         const std::vector<std::vector<double>>& tables, std::uint64_t mask) {
  double s = 0.0;
  for (std::size_t f = 0; f < scopes.size(); ++f) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scopes[f].size(); ++i)
      if ((mask >> scopes[f][i]) & 1U) idx |= std::size_t{1} << i;
    s += tables[f][idx];
  }
  return s;
}

/// Enumerated marginal over `scope` (same bit convention): reduce over all
/// other variables of the summed tables.
inline std::vector<double> enumerate_marginal(std::size_t n, const std::vector<std::vector<std::size_t>>& scopes,
                                              const std::vector<std::vector<double>>& tables,
                                              const std::vector<std::size_t>& scope, double tau) {
  std::vector<std::vector<double>> buckets(std::size_t{1} << scope.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope.size(); ++i)
      if ((mask >> scope[i]) & 1U) idx |= std::size_t{1} << i;
    buckets[idx].push_back(factor_sum(scopes, tables, mask));
  }
  std::vector<double> out;
  for (const auto& b : buckets) out.push_back(reference_reduce(b, tau));
  return out;
}

inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index k, double shift = 0.5) {
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + shift * Eigen::MatrixXd::Identity(k, k);
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index k) {
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = rng.normal();
  return v;
}

/// Gaussian chain 0 - 1 - ... - (n-1) with random PD 2x2 edge cliques.
inline GaussianInfoModel random_gaussian_chain(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<CliqueTerm> terms;
  for (Vertex v = 0; v + 1 < n; ++v) terms.push_back({{v, v + 1}, random_spd(rng, 2), random_vector(rng, 2)});
  return GaussianInfoModel(n, std::move(terms), GridShape{1, n});
}

/// Random Gaussian m x m grid: PD 2x2 clique per grid edge.
inline GaussianInfoModel random_gaussian_grid(std::uint64_t seed, std::size_t m) {
  Rng rng(seed);
  const GridShape g{m, m};
  std::vector<CliqueTerm> terms;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      if (c + 1 < m) terms.push_back({{g.index(r, c), g.index(r, c + 1)}, random_spd(rng, 2), random_vector(rng, 2)});
      if (r + 1 < m) terms.push_back({{g.index(r, c), g.index(r + 1, c)}, random_spd(rng, 2), random_vector(rng, 2)});
    }
  return GaussianInfoModel(g.size(), std::move(terms), g);
}

/// Adds zero-sum noise across the replicas of every class, which moves the
/// multipliers while keeping the representation consistent.
inline void perturb_replicas(DiscreteSolver& solver, Rng& rng, double scale) {
  const auto& aug = solver.augmented();
  for (const auto& c : aug.classes()) {
    const std::size_t r = c.factors.size();
    if (r < 2) continue;
    const std::size_t size = aug.factor(c.factors[0]).table.size();
    std::vector<std::vector<double>> noise(r, std::vector<double>(size));
    for (std::size_t x = 0; x < size; ++x) {
      double mean = 0.0;
      for (auto& n : noise) mean += n[x] = scale * rng.normal();
      mean /= static_cast<double>(r);
      for (auto& n : noise) n[x] -= mean;
    }
    for (std::size_t k = 0; k < r; ++k) {
      auto t = aug.factor(c.factors[k]).table;
      for (std::size_t x = 0; x < size; ++x) t[x] += noise[k][x];
      solver.set_table(c.factors[k], t);
    }
  }
}

}  // namespace lagrelax::testing
