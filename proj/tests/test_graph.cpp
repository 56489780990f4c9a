#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "xte/lattice.hpp"
#include "xte/rng.hpp"

using namespace xte;

namespace {

Graph triangle() { return build_graph(3, {{0, 1}, {1, 2}, {0, 2}}); }

Graph random_graph(Rng& rng, int n, double p) {
  std::vector<std::pair<int, int>> e;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (rng.coin(p)) e.push_back({a, b});
  return build_graph(n, e);
}

template <class F>
ErrorCode code_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Graph, EdgesAreNormalizedAndSorted) {
  Graph g = build_graph(4, {{3, 1}, {0, 2}, {1, 0}});
  ASSERT_EQ(g.num_edges(), 3);
  EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
  EXPECT_EQ(g.edges()[1], (Edge{0, 2}));
  EXPECT_EQ(g.edges()[2], (Edge{1, 3}));
  EXPECT_EQ(g.edge_index(3, 1), 2);
  EXPECT_EQ(g.edge_index(2, 3), -1);
}

TEST(Graph, ConstructionErrors) {
  EXPECT_EQ(code_of([] { build_graph(3, {{0, 1}, {1, 0}}); }), ErrorCode::DuplicateEdge);
  EXPECT_EQ(code_of([] { build_graph(3, {{1, 1}}); }), ErrorCode::SelfLoop);
  EXPECT_EQ(code_of([] { build_graph(2, {}, {{1.0}, {1.0, 0.0}}, {"a"}); }), ErrorCode::FeatureDimMismatch);
}

TEST(Graph, ColorOfOneHot) {
  Graph g = build_graph(3, {}, {{1, 0}, {0, 1}, {0, 0}}, {"red", "blue"});
  EXPECT_EQ(g.color_of(0), 0);
  EXPECT_EQ(g.color_of(1), 1);
  EXPECT_EQ(g.color_of(2), -1);
  EXPECT_EQ(g.feature_index("blue"), 1);
  EXPECT_EQ(g.feature_index("green"), -1);
}

TEST(Graph, CycleAndComponentsMatchUnionFind) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    Graph g = random_graph(rng, 1 + t % 8, 0.3);
    EXPECT_EQ(has_cycle(g), oracle::cyclic(g));
    // |E| - |V| + components > 0 exactly when a cycle exists
    EXPECT_EQ(has_cycle(g), g.num_edges() - g.num_nodes() + count_components(g) > 0);
  }
}

TEST(Graph, ApplyMaskRelabelsInOrder) {
  Graph g = build_graph(4, {{0, 1}, {1, 2}, {2, 3}}, {{1}, {2}, {3}, {4}}, {"w"});
  SubgraphMask m = SubgraphMask::from_edges(g, {2});
  MaskedGraph r = apply_mask(g, m);
  EXPECT_EQ(r.retained, (std::vector<int>{2, 3}));
  EXPECT_EQ(r.graph.num_edges(), 1);
  EXPECT_EQ(r.graph.feature(0, 0), 3.0);
  EXPECT_EQ(r.graph.feature(1, 0), 4.0);
}

TEST(Graph, CheckMaskRejectsDanglingEdge) {
  Graph g = triangle();
  SubgraphMask m = SubgraphMask::empty(g);
  m.edges[0] = true;
  EXPECT_FALSE(is_valid_mask(g, m));
  EXPECT_EQ(code_of([&] { check_mask(g, m); }), ErrorCode::InvalidMask);
}

TEST(Graph, MaskSizeMetrics) {
  Graph g = triangle();
  SubgraphMask m = SubgraphMask::from_edges(g, {0});
  EXPECT_EQ(mask_size(g, m, SizeMetric::EdgesPlusNodes), 3);
  EXPECT_EQ(mask_size(g, m, SizeMetric::EdgesOnly), 1);
  EXPECT_EQ(mask_size(g, m, SizeMetric::NodesOnly), 2);
  EXPECT_EQ(parse_size_metric(size_metric_name(SizeMetric::EdgesOnly)), SizeMetric::EdgesOnly);
}

TEST(Graph, DigestDependsOnContent) {
  Graph a = triangle();
  Graph b = build_graph(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(graph_digest(a), graph_digest(triangle()));
  EXPECT_NE(graph_digest(a), graph_digest(b));
}

TEST(Lattice, TriangleHas18Masks) {
  // 1 empty + 3 single nodes + 3 node pairs x 2 + 8 edge subsets on all nodes
  EXPECT_EQ(enumerate_masks_by_size(triangle()).size(), 18u);
}

TEST(Lattice, EnumerationMatchesBruteForce) {
  Rng rng(11);
  for (int t = 0; t < 60; ++t) {
    Graph g = random_graph(rng, 1 + t % 6, 0.4);
    auto lib = enumerate_masks_by_size(g);
    auto ref = oracle::all_masks(g);
    std::set<SubgraphMask> a(lib.begin(), lib.end()), b(ref.begin(), ref.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(lib.size(), a.size()) << "duplicates in enumeration";
    for (size_t i = 1; i < lib.size(); ++i)
      EXPECT_LE(mask_size(g, lib[i - 1], SizeMetric::EdgesPlusNodes), mask_size(g, lib[i], SizeMetric::EdgesPlusNodes));
  }
}

TEST(Lattice, ChildrenAndParentsAreCoverRelations) {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    Graph g = random_graph(rng, 2 + t % 4, 0.5);
    Lattice lat(g);
    for (auto k : lat.all_keys(SizeMetric::EdgesPlusNodes)) {
      for (auto c : lat.children(k)) {
        EXPECT_TRUE(lat.is_valid(c));
        EXPECT_EQ(c & ~k, 0u);
        EXPECT_EQ(lat.rank(c) + 1, lat.rank(k));
      }
      for (auto p : lat.parents(k)) {
        EXPECT_TRUE(lat.is_valid(p));
        EXPECT_EQ(k & ~p, 0u);
        EXPECT_EQ(lat.rank(k) + 1, lat.rank(p));
      }
      EXPECT_EQ(lat.to_key(lat.to_mask(k)), k);
    }
  }
}

TEST(Lattice, CapIsEnforced) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 20; ++i) e.push_back({i, i + 1});
  Graph g = build_graph(21, e);  // 41 elements
  EXPECT_EQ(code_of([&] { Lattice lat(g); }), ErrorCode::TooLarge);
  EXPECT_NO_THROW(Lattice(g, LatticeOptions{false, 41}));
}

TEST(Lattice, FeatureMaskingAddsNonzeroEntries) {
  Graph g = build_graph(2, {{0, 1}}, {{1, 0}, {0, 0}}, {"red", "blue"});
  Lattice lat(g, LatticeOptions{true, 24});
  EXPECT_EQ(lat.element_count(), 2 + 1 + 1);
}
