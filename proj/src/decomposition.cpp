#include "lagrelax/decomposition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "lagrelax/elimination.hpp"
#include "lagrelax/error.hpp"
#include "lagrelax/log_table.hpp"

namespace lagrelax {

Strategy parse_strategy(std::string_view name) {
  if (name == "disjoint-edges") return Strategy::DisjointEdges;
  if (name == "spanning-trees") return Strategy::SpanningTrees;
  if (name == "tree-plus-leaves") return Strategy::TreePlusLeaves;
  if (name == "loops") return Strategy::Loops;
  if (name == "induced-blocks") return Strategy::InducedBlocks;
  if (name == "thin-strips") return Strategy::ThinStrips;
  throw InvalidInput("unknown strategy '" + std::string(name) + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::DisjointEdges: return "disjoint-edges";
    case Strategy::SpanningTrees: return "spanning-trees";
    case Strategy::TreePlusLeaves: return "tree-plus-leaves";
    case Strategy::Loops: return "loops";
    case Strategy::InducedBlocks: return "induced-blocks";
    case Strategy::ThinStrips: return "thin-strips";
  }
  return "?";
}

std::size_t ReplicationMap::replica_count(std::size_t edge) const {
  const auto& e = original_edges[edge];
  return e.size() == 1 ? node_replicas[e[0]].size() : edge_replicas[edge].size();
}

namespace {

EliminationTree component_elimination(const ReplicationMap& map, const Component& c) {
  std::map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) local[c.nodes[i]] = i;
  std::vector<std::vector<std::size_t>> scopes;
  for (std::size_t e : c.edges) {
    std::vector<std::size_t> s;
    for (std::size_t v : map.edges[e].nodes) s.push_back(local.at(v));
    scopes.push_back(std::move(s));
  }
  return eliminate_min_fill(c.nodes.size(), scopes);
}

class MapBuilder {
 public:
  explicit MapBuilder(const Hypergraph& g) : graph_(g) {
    map_.original_vertex_count = g.vertex_count();
    map_.original_edges.assign(g.edges().begin(), g.edges().end());
    map_.node_replicas.resize(g.vertex_count());
    map_.edge_replicas.resize(g.edge_count());
  }

  std::size_t begin_component(bool intermediary = false) {
    map_.components.push_back(Component{{}, {}, intermediary});
    return map_.components.size() - 1;
  }

  std::size_t add_node(Vertex v) {
    const std::size_t id = map_.node_origin.size();
    const std::size_t c = map_.components.size() - 1;
    map_.node_origin.push_back(v);
    map_.node_component.push_back(c);
    map_.node_replicas[v].push_back(id);
    map_.components[c].nodes.push_back(id);
    return id;
  }

  void add_edge(std::size_t e, std::vector<std::size_t> nodes) {
    const std::size_t id = map_.edges.size();
    const std::size_t c = map_.components.size() - 1;
    map_.edges.push_back(ReplicaEdge{e, std::move(nodes), c});
    map_.edge_replicas[e].push_back(id);
    map_.components[c].edges.push_back(id);
  }

  /// New component holding one replica of each vertex and every non-singleton
  /// hyperedge contained in the set.
  void add_induced(const std::vector<Vertex>& vertices) {
    begin_component();
    std::map<Vertex, std::size_t> replica;
    for (Vertex v : vertices) replica[v] = add_node(v);
    std::set<std::size_t> inside;
    for (Vertex v : vertices)
      for (std::size_t e : graph_.incident(v)) {
        const auto& edge = graph_.edge(e);
        if (edge.size() < 2) continue;
        if (std::all_of(edge.begin(), edge.end(), [&](Vertex u) { return replica.count(u) > 0; }))
          inside.insert(e);
      }
    for (std::size_t e : inside) {
      std::vector<std::size_t> nodes;
      for (Vertex u : graph_.edge(e)) nodes.push_back(replica.at(u));
      add_edge(e, std::move(nodes));
    }
  }

  bool covered(std::size_t e) const {
    const auto& edge = graph_.edge(e);
    return edge.size() == 1 ? !map_.node_replicas[edge[0]].empty() : !map_.edge_replicas[e].empty();
  }

  /// Components for vertices that no strategy step replicated.
  void cover_isolated_vertices() {
    for (Vertex v = 0; v < graph_.vertex_count(); ++v)
      if (map_.node_replicas[v].empty()) {
        begin_component();
        add_node(v);
      }
  }

  ReplicationMap& map() { return map_; }

 private:
  const Hypergraph& graph_;
  ReplicationMap map_;
};

const GridShape& require_grid(const Hypergraph& g, Strategy s) {
  if (!g.grid() || g.grid()->size() != g.vertex_count())
    throw InvalidInput(to_string(s) + " needs a grid-shaped graph");
  return *g.grid();
}

void require_pairwise(const Hypergraph& g, Strategy s) {
  if (!g.is_pairwise()) throw InvalidInput(to_string(s) + " supports pairwise graphs only");
}

std::size_t strip_step(const DecompositionParams& p) {
  return p.strip_width > p.strip_overlap ? p.strip_width - p.strip_overlap : 1;
}

void check_strip_params(const DecompositionParams& p) {
  if (p.strip_width == 0) throw InvalidInput("strip width K must be positive");
}

void check_block_params(const DecompositionParams& p) {
  if (p.block < 2) throw InvalidInput("block size must be at least 2");
}

std::vector<std::pair<Vertex, Vertex>> snake(const GridShape& g, bool row_major) {
  std::vector<std::pair<Vertex, Vertex>> path;
  if (row_major) {
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c + 1 < g.cols; ++c) path.emplace_back(g.index(r, c), g.index(r, c + 1));
      if (r + 1 < g.rows) {
        const std::size_t c = (r % 2 == 0) ? g.cols - 1 : 0;
        path.emplace_back(g.index(r, c), g.index(r + 1, c));
      }
    }
  } else {
    for (std::size_t c = 0; c < g.cols; ++c) {
      for (std::size_t r = 0; r + 1 < g.rows; ++r) path.emplace_back(g.index(r, c), g.index(r + 1, c));
      if (c + 1 < g.cols) {
        const std::size_t r = (c % 2 == 0) ? g.rows - 1 : 0;
        path.emplace_back(g.index(r, c), g.index(r, c + 1));
      }
    }
  }
  return path;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

/// Emits one component per connected piece of a forest given by its edges.
void add_forest(MapBuilder& b, const Hypergraph& g, const std::vector<std::size_t>& forest_edges) {
  const std::size_t n = g.vertex_count();
  UnionFind uf(n);
  for (std::size_t e : forest_edges) uf.unite(g.edge(e)[0], g.edge(e)[1]);
  std::map<std::size_t, std::vector<Vertex>> pieces;
  for (Vertex v = 0; v < n; ++v) pieces[uf.find(v)].push_back(v);
  std::map<std::size_t, std::vector<std::size_t>> piece_edges;
  for (std::size_t e : forest_edges) piece_edges[uf.find(g.edge(e)[0])].push_back(e);
  for (const auto& [root, vertices] : pieces) {
    b.begin_component();
    std::map<Vertex, std::size_t> replica;
    for (Vertex v : vertices) replica[v] = b.add_node(v);
    for (std::size_t e : piece_edges[root]) b.add_edge(e, {replica.at(g.edge(e)[0]), replica.at(g.edge(e)[1])});
  }
}

void build_spanning_trees(MapBuilder& b, const Hypergraph& g, const DecompositionParams& p) {
  require_pairwise(g, Strategy::SpanningTrees);
  std::vector<bool> covered(g.edge_count(), false);
  auto uncovered_left = [&] {
    for (std::size_t e = 0; e < g.edge_count(); ++e)
      if (g.edge(e).size() == 2 && !covered[e]) return true;
    return false;
  };

  if (g.grid() && g.grid()->size() == g.vertex_count()) {
    for (bool row_major : {true, false}) {
      std::vector<std::size_t> tree;
      for (auto [u, v] : snake(*g.grid(), row_major)) {
        if (auto e = g.find(make_vertex_set({u, v}))) {
          tree.push_back(*e);
          covered[*e] = true;
        }
      }
      add_forest(b, g, tree);
    }
    if (uncovered_left()) throw UncoveredEdge("spanning-trees: grid snakes miss a non-grid edge");
    return;
  }

  std::size_t trees = 0;
  while (uncovered_left()) {
    if (p.max_trees != 0 && trees == p.max_trees)
      throw UncoveredEdge("spanning-trees: edges remain uncovered after max_trees forests");
    UnionFind uf(g.vertex_count());
    std::vector<std::size_t> forest;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t e = 0; e < g.edge_count(); ++e) {
        if (g.edge(e).size() != 2 || covered[e] != (pass == 1)) continue;
        if (uf.unite(g.edge(e)[0], g.edge(e)[1])) forest.push_back(e);
      }
    for (std::size_t e : forest) covered[e] = true;
    add_forest(b, g, forest);
    ++trees;
  }
}

void build_tree_plus_leaves(MapBuilder& b, const Hypergraph& g) {
  require_pairwise(g, Strategy::TreePlusLeaves);
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<Vertex>> adj(n);
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    if (g.edge(e).size() == 2) {
      adj[g.edge(e)[0]].push_back(g.edge(e)[1]);
      adj[g.edge(e)[1]].push_back(g.edge(e)[0]);
    }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::set<std::pair<Vertex, Vertex>> tree;
  if (g.grid() && g.grid()->size() == n) {
    for (auto [u, v] : snake(*g.grid(), true))
      if (g.find(make_vertex_set({u, v}))) tree.emplace(std::min(u, v), std::max(u, v));
  } else {
    std::vector<bool> seen(n, false);
    for (Vertex s = 0; s < n; ++s) {
      if (seen[s]) continue;
      std::vector<Vertex> stack{s};
      std::vector<Vertex> from(n, n);
      while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = true;
        if (from[v] != n) tree.emplace(std::min(v, from[v]), std::max(v, from[v]));
        for (auto it = adj[v].rbegin(); it != adj[v].rend(); ++it)
          if (!seen[*it]) {
            from[*it] = v;
            stack.push_back(*it);
          }
      }
    }
  }

  // One component per connected piece of the tree; leaves hang off the larger endpoint.
  UnionFind uf(n);
  for (auto [u, v] : tree) uf.unite(u, v);
  std::map<std::size_t, std::vector<Vertex>> pieces;
  for (Vertex v = 0; v < n; ++v) pieces[uf.find(v)].push_back(v);
  for (const auto& [root, vertices] : pieces) {
    b.begin_component();
    std::map<Vertex, std::size_t> replica;
    for (Vertex v : vertices) replica[v] = b.add_node(v);
    std::vector<std::pair<std::size_t, std::size_t>> leaves;  // (edge, leaf replica)
    for (Vertex v : vertices)
      for (std::size_t e : g.incident(v)) {
        const auto& edge = g.edge(e);
        if (edge.size() != 2 || edge[0] != v) continue;
        if (tree.count({edge[0], edge[1]})) {
          b.add_edge(e, {replica.at(edge[0]), replica.at(edge[1])});
        } else {
          leaves.emplace_back(e, 0);
        }
      }
    for (auto& [e, leaf] : leaves) leaf = b.add_node(g.edge(e)[0]);
    for (auto [e, leaf] : leaves) b.add_edge(e, {leaf, replica.at(g.edge(e)[1])});
  }
}

void build_loops(MapBuilder& b, const Hypergraph& g) {
  auto& map = b.map();
  if (g.grid() && g.grid()->size() == g.vertex_count()) {
    const auto& grid = *g.grid();
    for (std::size_t r = 0; r + 1 < grid.rows; ++r)
      for (std::size_t c = 0; c + 1 < grid.cols; ++c)
        b.add_induced({grid.index(r, c), grid.index(r, c + 1), grid.index(r + 1, c), grid.index(r + 1, c + 1)});
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (g.edge(e).size() < 2 || b.covered(e)) continue;
    b.add_induced(g.edge(e));
    map.fallback_edges.push_back(e);
  }
}

void build_induced_blocks(MapBuilder& b, const Hypergraph& g, const DecompositionParams& p) {
  check_block_params(p);
  const auto& grid = require_grid(g, Strategy::InducedBlocks);
  for (std::size_t r0 : window_starts(grid.rows, p.block, p.block - 1))
    for (std::size_t c0 : window_starts(grid.cols, p.block, p.block - 1)) {
      std::vector<Vertex> vs;
      for (std::size_t r = r0; r < std::min(grid.rows, r0 + p.block); ++r)
        for (std::size_t c = c0; c < std::min(grid.cols, c0 + p.block); ++c) vs.push_back(grid.index(r, c));
      b.add_induced(vs);
    }
}

void build_thin_strips(MapBuilder& b, const Hypergraph& g, const DecompositionParams& p) {
  check_strip_params(p);
  const auto& grid = require_grid(g, Strategy::ThinStrips);
  StripLayout layout{grid, window_starts(grid.cols, p.strip_width, strip_step(p)),
                     std::min(p.strip_width, grid.cols), p.strip_width};
  for (std::size_t c0 : layout.starts) {
    std::vector<Vertex> vs;
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t c = c0; c < c0 + layout.width; ++c) vs.push_back(grid.index(r, c));
    b.add_induced(vs);
  }
  b.map().strips = layout;
}

}  // namespace

std::vector<std::size_t> window_starts(std::size_t n, std::size_t w, std::size_t step) {
  if (w >= n) return {0};
  std::vector<std::size_t> starts;
  for (std::size_t s = 0;; s += step) {
    if (s + w >= n) {
      if (starts.empty() || starts.back() != n - w) starts.push_back(n - w);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

std::size_t ReplicationMap::max_clique_size() const {
  std::size_t m = 0;
  for (const auto& c : components) m = std::max(m, component_elimination(*this, c).max_clique_size());
  return m;
}

std::vector<VertexSet> overlap_edge_candidates(const Hypergraph& graph, Strategy strategy,
                                               const DecompositionParams& params) {
  std::set<VertexSet> out;
  auto add = [&](Vertex a, Vertex b) {
    VertexSet e = make_vertex_set({a, b});
    if (!graph.find(e)) out.insert(e);
  };
  if (strategy == Strategy::InducedBlocks) {
    check_block_params(params);
    const auto& grid = require_grid(graph, strategy);
    const auto rows = window_starts(grid.rows, params.block, params.block - 1);
    const auto cols = window_starts(grid.cols, params.block, params.block - 1);
    const std::size_t bh = std::min(params.block, grid.rows), bw = std::min(params.block, grid.cols);
    // Shared boundary segments: the overlapping column of horizontally adjacent
    // blocks and the overlapping row of vertically adjacent ones.
    for (std::size_t r0 : rows)
      for (std::size_t i = 0; i + 1 < cols.size(); ++i)
        for (std::size_t c = cols[i + 1]; c < cols[i] + bw; ++c)
          for (std::size_t a = r0; a < r0 + bh; ++a)
            for (std::size_t z = a + 2; z < r0 + bh; ++z) add(grid.index(a, c), grid.index(z, c));
    for (std::size_t c0 : cols)
      for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        for (std::size_t r = rows[i + 1]; r < rows[i] + bh; ++r)
          for (std::size_t a = c0; a < c0 + bw; ++a)
            for (std::size_t z = a + 2; z < c0 + bw; ++z) add(grid.index(r, a), grid.index(r, z));
  } else if (strategy == Strategy::ThinStrips) {
    check_strip_params(params);
    const auto& grid = require_grid(graph, strategy);
    const auto starts = window_starts(grid.cols, params.strip_width, strip_step(params));
    const std::size_t w = std::min(params.strip_width, grid.cols);
    // Diagonals inside the columns shared by consecutive strips.
    for (std::size_t i = 0; i + 1 < starts.size(); ++i)
      for (std::size_t c = starts[i + 1]; c + 1 < starts[i] + w; ++c)
        for (std::size_t r = 0; r + 1 < grid.rows; ++r) {
          add(grid.index(r, c), grid.index(r + 1, c + 1));
          add(grid.index(r, c + 1), grid.index(r + 1, c));
        }
  }
  return {out.begin(), out.end()};
}

ReplicationMap build_decomposition(const Hypergraph& graph, Strategy strategy, const DecompositionParams& params) {
  MapBuilder b(graph);
  switch (strategy) {
    case Strategy::DisjointEdges:
      for (std::size_t e = 0; e < graph.edge_count(); ++e)
        if (graph.edge(e).size() >= 2) b.add_induced(graph.edge(e));
      break;
    case Strategy::SpanningTrees: build_spanning_trees(b, graph, params); break;
    case Strategy::TreePlusLeaves: build_tree_plus_leaves(b, graph); break;
    case Strategy::Loops: build_loops(b, graph); break;
    case Strategy::InducedBlocks: build_induced_blocks(b, graph, params); break;
    case Strategy::ThinStrips: build_thin_strips(b, graph, params); break;
  }
  b.cover_isolated_vertices();
  for (std::size_t e = 0; e < graph.edge_count(); ++e)
    if (!b.covered(e)) throw UncoveredEdge(to_string(strategy) + " leaves hyperedge " + std::to_string(e) + " uncovered");

  ReplicationMap map = std::move(b.map());
  const std::size_t cap = params.treewidth_bound + 1;
  for (std::size_t c = 0; c < map.components.size(); ++c) {
    const std::size_t size = component_elimination(map, map.components[c]).max_clique_size();
    if (size > cap)
      throw InvalidInput("component " + std::to_string(c) + " has treewidth " + std::to_string(size - 1) +
                         " above the bound " + std::to_string(params.treewidth_bound));
  }
  return map;
}

ReplicationMap add_intermediaries(const ReplicationMap& map) {
  ReplicationMap out = map;
  auto shares_one_component = [&](const std::vector<std::size_t>& comps) {
    return comps.size() >= 2 && std::all_of(comps.begin(), comps.end(), [&](std::size_t c) { return c == comps[0]; });
  };
  auto new_component = [&] {
    out.components.push_back(Component{{}, {}, true});
    return out.components.size() - 1;
  };
  auto new_node = [&](Vertex v, std::size_t c) {
    const std::size_t id = out.node_origin.size();
    out.node_origin.push_back(v);
    out.node_component.push_back(c);
    out.node_replicas[v].push_back(id);
    out.components[c].nodes.push_back(id);
    return id;
  };

  for (Vertex v = 0; v < map.original_vertex_count; ++v) {
    std::vector<std::size_t> comps;
    for (std::size_t r : map.node_replicas[v]) comps.push_back(map.node_component[r]);
    if (shares_one_component(comps)) new_node(v, new_component());
  }
  for (std::size_t e = 0; e < map.original_edges.size(); ++e) {
    std::vector<std::size_t> comps;
    for (std::size_t r : map.edge_replicas[e]) comps.push_back(map.edges[r].component);
    if (!shares_one_component(comps)) continue;
    const std::size_t c = new_component();
    std::vector<std::size_t> nodes;
    for (Vertex v : map.original_edges[e]) nodes.push_back(new_node(v, c));
    const std::size_t id = out.edges.size();
    out.edges.push_back(ReplicaEdge{e, std::move(nodes), c});
    out.edge_replicas[e].push_back(id);
    out.components[c].edges.push_back(id);
  }
  return out;
}

std::vector<std::vector<std::size_t>> update_groups(const std::vector<std::size_t>& components) {
  std::vector<std::size_t> order;
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (!buckets.count(components[i])) order.push_back(components[i]);
    buckets[components[i]].push_back(i);
  }
  std::size_t depth = 0;
  for (const auto& [c, b] : buckets) depth = std::max(depth, b.size());
  if (depth > 1 && buckets.size() < 2)
    throw InvalidInput("class has all replicas in one component; add intermediaries first");
  std::vector<std::vector<std::size_t>> groups(depth);
  for (std::size_t k = 0; k < depth; ++k)
    for (std::size_t c : order) {
      const auto& b = buckets[c];
      groups[k].push_back(b[std::min(k, b.size() - 1)]);
    }
  return groups;
}

Assignment lift_assignment(const Assignment& x, const ReplicationMap& map) {
  if (x.size() != map.original_vertex_count) throw InvalidInput("lift_assignment: length mismatch");
  Assignment out(map.augmented_vertex_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[map.node_origin[i]];
  return out;
}

Eigen::VectorXd lift_assignment(const Eigen::VectorXd& x, const ReplicationMap& map) {
  if (static_cast<std::size_t>(x.size()) != map.original_vertex_count)
    throw InvalidInput("lift_assignment: length mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(map.augmented_vertex_count()));
  for (std::size_t i = 0; i < map.augmented_vertex_count(); ++i)
    out(static_cast<Eigen::Index>(i)) = x(static_cast<Eigen::Index>(map.node_origin[i]));
  return out;
}

Projection project_assignment(const Assignment& x_aug, const ReplicationMap& map) {
  if (x_aug.size() != map.augmented_vertex_count()) throw InvalidInput("project_assignment: length mismatch");
  Projection p;
  Assignment x(map.original_vertex_count, 1);
  for (Vertex v = 0; v < map.original_vertex_count; ++v) {
    const auto& reps = map.node_replicas[v];
    x[v] = x_aug[reps.front()];
    bool agree = std::all_of(reps.begin(), reps.end(), [&](std::size_t r) { return x_aug[r] == x[v]; });
    if (!agree) {
      Inconsistency bad{v, reps, {}};
      for (std::size_t r : reps) bad.values.push_back(x_aug[r]);
      p.violations.push_back(std::move(bad));
    }
  }
  if (p.violations.empty()) p.assignment = std::move(x);
  return p;
}

DiscreteAugmented::DiscreteAugmented(const DiscreteFactorModel& model, ReplicationMap map)
    : base_(model), map_(std::move(map)) {
  const auto& g = model.graph;
  if (map_.original_vertex_count != g.vertex_count() || map_.original_edges.size() != g.edge_count())
    throw InvalidInput("replication map does not match the model graph");
  const auto theta = model.theta();
  const std::size_t n = g.vertex_count();
  const std::size_t nodes = map_.augmented_vertex_count();

  classes_.resize(n);
  targets_.resize(n);
  for (Vertex v = 0; v < n; ++v) {
    classes_[v].vertices = {v};
    const auto s = g.singleton(v);
    targets_[v] = feature_table(1, s ? theta[*s] : 0.0);
  }
  std::vector<std::size_t> edge_class(g.edge_count(), 0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (g.edge(e).size() < 2) continue;
    edge_class[e] = classes_.size();
    classes_.push_back(ReplicaClass{g.edge(e), false, {}, {}});
    targets_.push_back(feature_table(g.edge(e).size(), theta[e]));
  }

  factors_.reserve(nodes + map_.edges.size());
  for (std::size_t i = 0; i < nodes; ++i) {
    const Vertex v = map_.node_origin[i];
    const double r = static_cast<double>(map_.node_replicas[v].size());
    std::vector<double> t = targets_[v];
    for (double& x : t) x /= r;
    factors_.push_back(AugmentedFactor{{i}, map_.node_component[i], v, std::move(t)});
    classes_[v].factors.push_back(i);
  }
  for (std::size_t k = 0; k < map_.edges.size(); ++k) {
    const auto& re = map_.edges[k];
    const std::size_t cls = edge_class[re.origin];
    const double r = static_cast<double>(map_.edge_replicas[re.origin].size());
    std::vector<double> t = targets_[cls];
    for (double& x : t) x /= r;
    factors_.push_back(AugmentedFactor{re.nodes, re.component, cls, std::move(t)});
    classes_[cls].factors.push_back(nodes + k);
  }

  component_factors_.resize(map_.components.size());
  for (std::size_t f = 0; f < factors_.size(); ++f) component_factors_[factors_[f].component].push_back(f);
  for (auto& c : classes_) {
    std::vector<std::size_t> comps;
    for (std::size_t f : c.factors) comps.push_back(factors_[f].component);
    c.groups = update_groups(comps);
  }
}

double DiscreteAugmented::evaluate(const Assignment& x_aug) const {
  if (x_aug.size() != map_.augmented_vertex_count()) throw InvalidInput("augmented assignment length mismatch");
  double total = base_.constant;
  for (const auto& f : factors_) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) idx |= std::size_t{state_of_label(x_aug[f.nodes[i]])} << i;
    total += f.table[idx];
  }
  return total;
}

double DiscreteAugmented::consistency_residual() const {
  double worst = 0.0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    std::vector<double> sum(targets_[c].size(), 0.0);
    for (std::size_t f : classes_[c].factors)
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += factors_[f].table[i];
    for (std::size_t i = 0; i < sum.size(); ++i) worst = std::max(worst, std::abs(sum[i] - targets_[c][i]));
  }
  return worst;
}

DiscreteAugmented split_potentials(const DiscreteFactorModel& model, const ReplicationMap& map) {
  return DiscreteAugmented(model, map);
}

Eigen::SparseMatrix<double> GaussianAugmented::augmented_information() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& c : components)
    for (std::size_t a = 0; a < c.nodes.size(); ++a)
      for (std::size_t b = 0; b < c.nodes.size(); ++b) {
        const double v = c.information(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (v != 0.0)
          trip.emplace_back(static_cast<Eigen::Index>(c.nodes[a]), static_cast<Eigen::Index>(c.nodes[b]), v);
      }
  const auto n = static_cast<Eigen::Index>(augmented_vertex_count());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::VectorXd GaussianAugmented::augmented_potential() const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(augmented_vertex_count()));
  for (const auto& c : components)
    for (std::size_t a = 0; a < c.nodes.size(); ++a)
      h(static_cast<Eigen::Index>(c.nodes[a])) += c.potential(static_cast<Eigen::Index>(a));
  return h;
}

double GaussianAugmented::consistency_residual(const GaussianInfoModel& model) const {
  const Eigen::SparseMatrix<double> folded = Eigen::SparseMatrix<double>(lift.transpose() * augmented_information() * lift);
  const Eigen::SparseMatrix<double> dj = folded - model.information();
  double j_res = 0.0;
  for (Eigen::Index k = 0; k < dj.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(dj, k); it; ++it) j_res = std::max(j_res, std::abs(it.value()));
  const Eigen::VectorXd dh = lift.transpose() * augmented_potential() - model.potential();
  return j_res + (dh.size() ? dh.cwiseAbs().maxCoeff() : 0.0);
}

double GaussianAugmented::evaluate_lifted(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd xa = lift * x;
  double total = 0.0;
  for (const auto& c : components) {
    Eigen::VectorXd xc(static_cast<Eigen::Index>(c.nodes.size()));
    for (std::size_t a = 0; a < c.nodes.size(); ++a) xc(static_cast<Eigen::Index>(a)) = xa(static_cast<Eigen::Index>(c.nodes[a]));
    total += -0.5 * xc.dot(c.information * xc) + c.potential.dot(xc);
  }
  return total;
}

namespace {

std::vector<AgreementClass> strip_classes(const ReplicationMap& map, const StripLayout& s) {
  const auto& grid = s.grid;
  // Replica of vertex v inside component c (each strip holds at most one).
  auto replica_in = [&](Vertex v, std::size_t c) {
    for (std::size_t r : map.node_replicas[v])
      if (map.node_component[r] == c) return r;
    throw InvalidInput("strip layout does not match the replication map");
  };
  std::vector<std::vector<std::size_t>> membership(grid.cols);
  for (std::size_t k = 0; k < s.starts.size(); ++k)
    for (std::size_t c = s.starts[k]; c < s.starts[k] + s.width; ++c) membership[c].push_back(k);

  std::vector<AgreementClass> classes;
  for (std::size_t c0 = 0; c0 < grid.cols;) {
    std::size_t c1 = c0 + 1;
    while (c1 < grid.cols && membership[c1] == membership[c0]) ++c1;
    if (membership[c0].size() >= 2) {
      for (std::size_t r0 = 0; r0 < grid.rows; r0 += s.block_rows) {
        AgreementClass cls;
        for (std::size_t r = r0; r < std::min(grid.rows, r0 + s.block_rows); ++r)
          for (std::size_t c = c0; c < c1; ++c) cls.vertices.push_back(grid.index(r, c));
        std::sort(cls.vertices.begin(), cls.vertices.end());
        for (std::size_t strip : membership[c0]) {
          ClassReplica rep{strip, {}};
          for (Vertex v : cls.vertices) rep.local.push_back(static_cast<Eigen::Index>(replica_in(v, strip)));
          cls.replicas.push_back(std::move(rep));
        }
        classes.push_back(std::move(cls));
      }
    }
    c0 = c1;
  }
  return classes;
}

}  // namespace

GaussianAugmented split_potentials(const GaussianInfoModel& model, const ReplicationMap& map) {
  const auto& g = model.graph();
  if (map.original_vertex_count != g.vertex_count() || map.original_edges.size() != g.edge_count())
    throw InvalidInput("replication map does not match the model graph");
  GaussianAugmented aug;
  aug.original_vertex_count = g.vertex_count();
  const std::size_t nodes = map.augmented_vertex_count();
  aug.node_component = map.node_component;
  aug.node_local.assign(nodes, 0);
  for (const auto& c : map.components) {
    const auto k = static_cast<Eigen::Index>(c.nodes.size());
    for (std::size_t a = 0; a < c.nodes.size(); ++a) aug.node_local[c.nodes[a]] = static_cast<Eigen::Index>(a);
    aug.components.push_back(GaussianBlock{c.nodes, Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)});
  }

  auto scatter = [&](std::size_t comp, const std::vector<std::size_t>& replica_nodes, const CliqueTerm& t, double r) {
    auto& blk = aug.components[comp];
    for (std::size_t a = 0; a < replica_nodes.size(); ++a) {
      const Eigen::Index la = aug.node_local[replica_nodes[a]];
      blk.potential(la) += t.potential(static_cast<Eigen::Index>(a)) / r;
      for (std::size_t b = 0; b < replica_nodes.size(); ++b)
        blk.information(la, aug.node_local[replica_nodes[b]]) +=
            t.information(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) / r;
    }
  };
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& t = model.term(e);
    if (t.vertices.size() == 1) {
      const auto& reps = map.node_replicas[t.vertices[0]];
      for (std::size_t v : reps) scatter(map.node_component[v], {v}, t, static_cast<double>(reps.size()));
    } else {
      const auto& reps = map.edge_replicas[e];
      for (std::size_t r : reps)
        scatter(map.edges[r].component, map.edges[r].nodes, t, static_cast<double>(reps.size()));
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < nodes; ++i) trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(map.node_origin[i]), 1.0);
  aug.lift.resize(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(g.vertex_count()));
  aug.lift.setFromTriplets(trip.begin(), trip.end());
  aug.node_replicas = map.node_replicas;

  auto check_distinct = [](const AgreementClass& cls) {
    std::set<std::size_t> seen;
    for (const auto& r : cls.replicas)
      if (!seen.insert(r.component).second)
        throw InvalidInput("Gaussian relaxation needs every replica of a class in its own component");
  };
  auto to_local = [&](AgreementClass& cls) {
    for (auto& rep : cls.replicas)
      for (auto& l : rep.local) l = aug.node_local[static_cast<std::size_t>(l)];
    cls.groups = {std::vector<std::size_t>(cls.replicas.size())};
    std::iota(cls.groups[0].begin(), cls.groups[0].end(), 0);
  };

  if (map.strips) {
    aug.classes = strip_classes(map, *map.strips);
  } else {
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (map.node_replicas[v].size() < 2) continue;
      AgreementClass cls{{v}, {}, {}, 0};
      for (std::size_t r : map.node_replicas[v])
        cls.replicas.push_back(ClassReplica{map.node_component[r], {static_cast<Eigen::Index>(r)}});
      aug.classes.push_back(std::move(cls));
    }
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (map.edge_replicas[e].size() < 2) continue;
      AgreementClass cls{g.edge(e), {}, {}, 0};
      for (std::size_t r : map.edge_replicas[e]) {
        ClassReplica rep{map.edges[r].component, {}};
        for (std::size_t v : map.edges[r].nodes) rep.local.push_back(static_cast<Eigen::Index>(v));
        cls.replicas.push_back(std::move(rep));
      }
      aug.classes.push_back(std::move(cls));
    }
  }
  for (auto& cls : aug.classes) {
    check_distinct(cls);
    to_local(cls);
  }
  return aug;
}

}  // namespace lagrelax
