#pragma once

#include <cstddef>
#include <vector>

namespace lagrelax {

/// Greedy min-fill variable elimination over the interaction graph induced by
/// a set of scopes. Eliminating `order[k]` produces clique `cliques[k]`
/// (sorted, contains the eliminated variable); `parent[k]` is the index of the
/// clique of the first later-eliminated neighbour, or npos for tree roots.
struct EliminationTree {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> cliques;
  std::vector<std::size_t> parent;
  /// position[v] = k such that order[k] == v.
  std::vector<std::size_t> position;

  std::size_t max_clique_size() const;
};

EliminationTree eliminate_min_fill(std::size_t variable_count,
                                   const std::vector<std::vector<std::size_t>>& scopes);

}  // namespace lagrelax
