#include <set>

#include "doctest.h"
#include "support.hpp"

#include "lagrelax/decomposition.hpp"
#include "lagrelax/error.hpp"
#include "lagrelax/log_table.hpp"

using namespace lagrelax;
using namespace lagrelax::testing;

namespace {

const Strategy kAll[] = {Strategy::DisjointEdges, Strategy::SpanningTrees, Strategy::TreePlusLeaves,
                         Strategy::Loops,         Strategy::InducedBlocks, Strategy::ThinStrips};

Hypergraph grid_graph(std::size_t rows, std::size_t cols) {
  const GridShape g{rows, cols};
  std::vector<VertexSet> edges;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({g.index(r, c), g.index(r, c + 1)});
      if (r + 1 < rows) edges.push_back({g.index(r, c), g.index(r + 1, c)});
    }
  return Hypergraph(g.size(), edges, g);
}

// Structural checks every map must pass.
void check_map(const Hypergraph& g, const ReplicationMap& map, const DecompositionParams& params) {
  CHECK(map.original_vertex_count == g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    CHECK(!map.node_replicas[v].empty());
    for (std::size_t r : map.node_replicas[v]) CHECK(map.node_origin[r] == v);
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (g.edge(e).size() < 2) continue;
    CHECK(!map.edge_replicas[e].empty());
    for (std::size_t r : map.edge_replicas[e]) {
      const auto& rep = map.edges[r];
      CHECK(rep.origin == e);
      std::vector<Vertex> image;
      for (std::size_t node : rep.nodes) {
        image.push_back(map.node_origin[node]);
        CHECK(map.node_component[node] == rep.component);
      }
      CHECK(image == g.edge(e));
    }
  }
  CHECK(map.max_clique_size() <= params.treewidth_bound + 1);
  std::size_t nodes = 0;
  for (const auto& c : map.components) nodes += c.nodes.size();
  CHECK(nodes == map.augmented_vertex_count());
}

}  // namespace

TEST_CASE("window starts clamp the last window") {
  CHECK(window_starts(10, 4, 2) == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(window_starts(9, 4, 2) == std::vector<std::size_t>{0, 2, 4, 5});
  CHECK(window_starts(3, 5, 1) == std::vector<std::size_t>{0});
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : kAll) CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_strategy("random-walks"), InvalidInput);
}

TEST_CASE("disjoint edges on a 5x5 grid") {
  const auto g = grid_graph(5, 5);
  const auto map = build_decomposition(g, Strategy::DisjointEdges);
  CHECK(map.components.size() == 40);
  for (const auto& c : map.components) {
    CHECK(c.nodes.size() == 2);
    CHECK(c.edges.size() == 1);
  }
  const GridShape s{5, 5};
  for (std::size_t r = 1; r < 4; ++r)
    for (std::size_t c = 1; c < 4; ++c) CHECK(map.node_replicas[s.index(r, c)].size() == 4);
  CHECK(map.node_replicas[0].size() == 2);
  CHECK(map.node_replicas[s.index(0, 2)].size() == 3);
}

TEST_CASE("tree plus leaves turns the three-cycle into a four-chain") {
  const auto m = triangle(-1.0);
  const auto map = build_decomposition(m.graph, Strategy::TreePlusLeaves);
  REQUIRE(map.components.size() == 1);
  CHECK(map.augmented_vertex_count() == 4);
  CHECK(map.node_replicas[0].size() == 2);
  CHECK(map.node_replicas[1].size() == 1);
  CHECK(map.node_replicas[2].size() == 1);
  for (std::size_t e = 0; e < 3; ++e) CHECK(map.replica_count(e) == 1);
  CHECK(map.max_clique_size() == 2);

  CHECK(lift_assignment(Assignment{1, -1, 1}, map) == Assignment{1, -1, 1, 1});
  const auto ok = project_assignment({1, -1, 1, 1}, map);
  REQUIRE(ok.assignment);
  CHECK(*ok.assignment == Assignment{1, -1, 1});
  const auto bad = project_assignment({1, -1, 1, -1}, map);
  CHECK(!bad.assignment);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].vertex == 0);
  CHECK(bad.violations[0].values == std::vector<int>{1, -1});
}

TEST_CASE("thin strips with K = 2, L = 2 on a 4x4 grid") {
  const auto g = grid_graph(4, 4);
  DecompositionParams p;
  p.strip_width = 2;
  p.strip_overlap = 2;
  const auto map = build_decomposition(g, Strategy::ThinStrips, p);
  REQUIRE(map.components.size() == 3);
  for (const auto& c : map.components) CHECK(c.nodes.size() == 8);
  REQUIRE(map.strips);
  CHECK(map.strips->starts == std::vector<std::size_t>{0, 1, 2});
  const GridShape s{4, 4};
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(map.node_replicas[s.index(r, 0)].size() == 1);
    CHECK(map.node_replicas[s.index(r, 1)].size() == 2);
    CHECK(map.node_replicas[s.index(r, 2)].size() == 2);
    CHECK(map.node_replicas[s.index(r, 3)].size() == 1);
  }
  check_map(g, map, p);
}

TEST_CASE("identity decomposition lifts to the same assignment") {
  // A chain is one induced block that covers everything.
  const auto m = make_discrete(3, {{{0, 1}, 1.0}, {{1, 2}, -1.0}}, GridShape{1, 3});
  DecompositionParams p;
  p.block = 3;
  const auto map = build_decomposition(m.graph, Strategy::InducedBlocks, p);
  REQUIRE(map.components.size() == 1);
  CHECK(lift_assignment(Assignment{1, -1, -1}, map) == Assignment{1, -1, -1});
}

TEST_CASE("every strategy yields a valid map with an equivalent augmented objective") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto m = random_grid(seed, 4);
    for (Strategy s : kAll) {
      CAPTURE(to_string(s));
      DecompositionParams p;
      const auto map = add_intermediaries(build_decomposition(m.graph, s, p));
      check_map(m.graph, map, p);
      const DiscreteAugmented aug(m, map);
      CHECK(aug.consistency_residual() < 1e-12);
      Rng rng(seed * 31);
      for (int k = 0; k < 100; ++k) {
        Assignment x(16);
        for (int& xi : x) xi = rng.sign();
        const auto lifted = lift_assignment(x, map);
        CHECK(std::abs(aug.evaluate(lifted) - evaluate_objective(m, x)) < 1e-10);
        const auto back = project_assignment(lifted, map);
        REQUIRE(back.assignment);
        CHECK(*back.assignment == x);
      }
    }
  }
}

TEST_CASE("generic graphs work with the graph-agnostic strategies") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto m = random_model(seed, 9, 0.3);
    for (Strategy s : {Strategy::DisjointEdges, Strategy::SpanningTrees, Strategy::TreePlusLeaves, Strategy::Loops}) {
      CAPTURE(to_string(s));
      const auto map = add_intermediaries(build_decomposition(m.graph, s));
      check_map(m.graph, map, {});
      const DiscreteAugmented aug(m, map);
      for (std::uint64_t mask = 0; mask < 512; mask += 7) {
        const auto x = assignment_of(mask, 9);
        CHECK(std::abs(aug.evaluate(lift_assignment(x, map)) - evaluate_objective(m, x)) < 1e-10);
      }
    }
  }
}

TEST_CASE("loops on a non-grid graph fall back for edges off every cell") {
  const auto m = make_discrete(4, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 1.0}, {{2, 3}, 1.0}});
  const auto map = build_decomposition(m.graph, Strategy::Loops);
  CHECK(map.fallback_edges.size() == 4);
  const auto grid = build_decomposition(grid_graph(3, 3), Strategy::Loops);
  CHECK(grid.components.size() == 4);
  CHECK(grid.fallback_edges.empty());
}

TEST_CASE("strategies report what they cannot do") {
  const auto m = make_discrete(3, {{{0, 1, 2}, 1.0}});
  CHECK_THROWS_AS(build_decomposition(m.graph, Strategy::SpanningTrees), InvalidInput);
  CHECK_THROWS_AS(build_decomposition(m.graph, Strategy::ThinStrips), InvalidInput);
  DecompositionParams p;
  p.strip_width = 4;
  p.treewidth_bound = 2;
  CHECK_THROWS_AS(build_decomposition(grid_graph(6, 6), Strategy::ThinStrips, p), InvalidInput);
  p.treewidth_bound = 4;
  CHECK_NOTHROW(build_decomposition(grid_graph(6, 6), Strategy::ThinStrips, p));
}

TEST_CASE("uniform discrete split") {
  DecompositionParams p;
  p.strip_width = 2;
  p.strip_overlap = 1;
  const auto d = make_discrete(3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}}, GridShape{1, 3});
  const auto strips = build_decomposition(d.graph, Strategy::ThinStrips, p);
  const DiscreteAugmented aug = split_potentials(d, strips);
  const std::size_t e = *d.graph.find({0, 1});
  for (std::size_t f = 0; f < aug.factor_count(); ++f) {
    const auto& factor = aug.factor(f);
    if (factor.nodes.size() == 2 && strips.edges[f - strips.augmented_vertex_count()].origin == e) {
      CHECK(strips.replica_count(e) == 1);
      CHECK(factor.table == feature_table(2, 1.0));
    }
  }
  // Two-replica case: the middle node of the chain above.
  CHECK(strips.node_replicas[1].size() == 2);

  const auto both = make_discrete(2, {{{0, 1}, 1.0}}, GridShape{1, 2});
  DecompositionParams q;
  q.strip_width = 1;
  q.strip_overlap = 0;
  CHECK_THROWS_AS(build_decomposition(both.graph, Strategy::ThinStrips, q), UncoveredEdge);
}

TEST_CASE("splitting a replicated edge halves its table") {
  const auto m = random_grid(3, 3);
  CHECK(build_decomposition(m.graph, Strategy::InducedBlocks, {}).components.size() == 1);
  DecompositionParams p;
  p.block = 2;
  const auto blocks = build_decomposition(m.graph, Strategy::InducedBlocks, p);
  const DiscreteAugmented aug(m, blocks);
  const auto theta = m.theta();
  for (std::size_t id = 0; id < blocks.edges.size(); ++id) {
    const auto& rep = blocks.edges[id];
    const double r = static_cast<double>(blocks.replica_count(rep.origin));
    const auto& table = aug.factor(blocks.augmented_vertex_count() + id).table;
    const auto expect = feature_table(2, theta[rep.origin] / r);
    for (std::size_t i = 0; i < 4; ++i) CHECK(table[i] == doctest::Approx(expect[i]));
  }
  // Tables of every class sum back to the original.
  for (std::size_t c = 0; c < aug.classes().size(); ++c) {
    std::vector<double> sum(aug.target(c).size(), 0.0);
    for (std::size_t f : aug.classes()[c].factors)
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += aug.factor(f).table[i];
    for (std::size_t i = 0; i < sum.size(); ++i) CHECK(sum[i] == doctest::Approx(aug.target(c)[i]));
  }
}

TEST_CASE("three-cycle split between the node and its leaf") {
  auto m = make_discrete(3, {{{0}, 0.8}, {{0, 1}, -1.0}, {{1, 2}, -1.0}, {{0, 2}, -1.0}});
  const auto map = add_intermediaries(build_decomposition(m.graph, Strategy::TreePlusLeaves));
  const DiscreteAugmented aug(m, map);
  const auto& reps = map.node_replicas[0];
  REQUIRE(reps.size() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (std::size_t r : reps) sum += aug.factor(r).table[i];
    CHECK(sum == doctest::Approx(feature_table(1, 0.8)[i]));
  }
}

TEST_CASE("intermediaries give every class two components") {
  const auto m = triangle(-1.0);
  const auto map = add_intermediaries(build_decomposition(m.graph, Strategy::TreePlusLeaves));
  CHECK(map.components.size() == 2);
  CHECK(map.components[1].intermediary);
  CHECK(map.node_replicas[0].size() == 3);
  std::set<std::size_t> comps;
  for (std::size_t r : map.node_replicas[0]) comps.insert(map.node_component[r]);
  CHECK(comps.size() == 2);
}

TEST_CASE("update groups hold at most one replica per component") {
  const auto groups = update_groups({0, 0, 1});
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<std::size_t>{0, 2});
  CHECK(groups[1] == std::vector<std::size_t>{1, 2});
  CHECK(update_groups({3, 4, 5}).size() == 1);
  CHECK_THROWS_AS(update_groups({2, 2}), InvalidInput);
}

TEST_CASE("overlap edge candidates sit on shared boundaries") {
  const auto g = grid_graph(4, 6);
  DecompositionParams p;
  p.strip_width = 3;
  p.strip_overlap = 2;
  const auto extra = overlap_edge_candidates(g, Strategy::ThinStrips, p);
  CHECK(!extra.empty());
  const GridShape s{4, 6};
  for (const auto& e : extra) {
    CHECK(!g.find(e));
    CHECK(std::abs(static_cast<long>(s.row(e[0])) - static_cast<long>(s.row(e[1]))) == 1);
  }
  const auto blocks = overlap_edge_candidates(grid_graph(5, 5), Strategy::InducedBlocks, p);
  for (const auto& e : blocks) CHECK(!grid_graph(5, 5).find(e));
  CHECK(overlap_edge_candidates(g, Strategy::DisjointEdges, p).empty());
}

TEST_CASE("gaussian split halves a clique shared by two strips") {
  // 2x3 grid, strips {0,1} and {1,2}: the vertical edge in column 1 has r = 2.
  const GridShape s{2, 3};
  Eigen::MatrixXd j(2, 2);
  j << 2, 1, 1, 2;
  std::vector<CliqueTerm> terms;
  const auto shape = grid_graph(2, 3);
  for (const auto& e : shape.edges()) terms.push_back({e, j, Eigen::Vector2d(1, -1)});
  const GaussianInfoModel g(6, terms, s);
  DecompositionParams p;
  p.strip_width = 2;
  p.strip_overlap = 1;
  const auto map = build_decomposition(g.graph(), Strategy::ThinStrips, p);
  const auto aug = split_potentials(g, map);
  CHECK(aug.consistency_residual(g) < 1e-12);
  const Vertex top = s.index(0, 1), bottom = s.index(1, 1);
  for (const auto& c : aug.components) {
    CHECK(is_positive_definite(c.information));
    Eigen::Index a = -1, b = -1;
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
      const std::size_t col = static_cast<std::size_t>(aug.lift.coeff(static_cast<Eigen::Index>(c.nodes[i]), static_cast<Eigen::Index>(top)));
      const std::size_t col2 = static_cast<std::size_t>(aug.lift.coeff(static_cast<Eigen::Index>(c.nodes[i]), static_cast<Eigen::Index>(bottom)));
      if (col == 1) a = static_cast<Eigen::Index>(i);
      if (col2 == 1) b = static_cast<Eigen::Index>(i);
    }
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    CHECK(c.information(a, b) == doctest::Approx(0.5));
  }
  // Lifted objective equals the original one.
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd x = random_vector(rng, 6);
    CHECK(aug.evaluate_lifted(x) == doctest::Approx(evaluate_objective(g, x)).epsilon(1e-12));
  }
  CHECK(aug.classes.size() == 1);
  CHECK(aug.classes[0].replicas.size() == 2);
}

TEST_CASE("gaussian split on every applicable strategy is consistent and positive definite") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto g = random_gaussian_grid(seed, 4);
    for (Strategy s : {Strategy::DisjointEdges, Strategy::SpanningTrees, Strategy::Loops, Strategy::InducedBlocks,
                       Strategy::ThinStrips}) {
      CAPTURE(to_string(s));
      const auto aug = split_potentials(g, build_decomposition(g.graph(), s));
      CHECK(aug.consistency_residual(g) < 1e-12);
      for (const auto& c : aug.components) CHECK(is_positive_definite(c.information));
    }
  }
}
