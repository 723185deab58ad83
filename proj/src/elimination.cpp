#include "lagrelax/elimination.hpp"

#include <algorithm>
#include <set>

namespace lagrelax {

std::size_t EliminationTree::max_clique_size() const {
  std::size_t m = 0;
  for (const auto& c : cliques) m = std::max(m, c.size());
  return m;
}

EliminationTree eliminate_min_fill(std::size_t variable_count,
                                   const std::vector<std::vector<std::size_t>>& scopes) {
  std::vector<std::set<std::size_t>> adj(variable_count);
  for (const auto& s : scopes)
    for (std::size_t a : s)
      for (std::size_t b : s)
        if (a != b) adj[a].insert(b);

  EliminationTree tree;
  tree.position.assign(variable_count, EliminationTree::npos);
  std::vector<bool> done(variable_count, false);

  auto fill_in = [&](std::size_t v) {
    std::size_t fill = 0;
    for (auto i = adj[v].begin(); i != adj[v].end(); ++i)
      for (auto j = std::next(i); j != adj[v].end(); ++j)
        if (!adj[*i].count(*j)) ++fill;
    return fill;
  };

  for (std::size_t step = 0; step < variable_count; ++step) {
    std::size_t best = EliminationTree::npos, best_fill = 0, best_degree = 0;
    for (std::size_t v = 0; v < variable_count; ++v) {
      if (done[v]) continue;
      const std::size_t f = fill_in(v), d = adj[v].size();
      if (best == EliminationTree::npos || f < best_fill || (f == best_fill && d < best_degree)) {
        best = v;
        best_fill = f;
        best_degree = d;
      }
    }
    const std::size_t v = best;
    std::vector<std::size_t> clique(adj[v].begin(), adj[v].end());
    clique.push_back(v);
    std::sort(clique.begin(), clique.end());
    for (auto i = adj[v].begin(); i != adj[v].end(); ++i) {
      for (auto j = std::next(i); j != adj[v].end(); ++j) {
        adj[*i].insert(*j);
        adj[*j].insert(*i);
      }
    }
    for (std::size_t u : adj[v]) adj[u].erase(v);
    adj[v].clear();
    done[v] = true;
    tree.position[v] = step;
    tree.order.push_back(v);
    tree.cliques.push_back(std::move(clique));
  }

  tree.parent.assign(variable_count, EliminationTree::npos);
  for (std::size_t k = 0; k < variable_count; ++k) {
    std::size_t first = EliminationTree::npos;
    for (std::size_t u : tree.cliques[k]) {
      if (u == tree.order[k]) continue;
      first = std::min(first, tree.position[u]);
    }
    tree.parent[k] = first;
  }
  return tree;
}

}  // namespace lagrelax
