#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "xte/faithfulness.hpp"
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

oracle::Fn fn(const Classifier& c) {
  return [c](const Graph& g) { return c(g); };
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

TEST(Perturb, TriangleComplementCounts) {
  Graph g = triangle();
  SubgraphMask m = SubgraphMask::from_edges(g, {0});
  EXPECT_EQ(perturbations_of(g, m, Region::Complement, PerturbConfig::exhaustive(false)).size(), 3u);
  EXPECT_EQ(perturbations_of(g, m, Region::Complement, PerturbConfig::exhaustive(true)).size(), 4u);
}

TEST(Perturb, EmptyRegionThrows) {
  Graph g = triangle();
  SubgraphMask full = SubgraphMask::full(g);
  EXPECT_EQ(code_of([&] { perturbations_of(g, full, Region::Complement, PerturbConfig::exhaustive()); }),
            ErrorCode::EmptyRegion);
  EXPECT_EQ(code_of([&] { perturbations_of(g, full, Region::Complement, PerturbConfig::monte_carlo(10, 0, 0.5)); }),
            ErrorCode::EmptyRegion);
}

TEST(Perturb, ExhaustiveMatchesOracleCount) {
  Rng rng(41);
  for (int t = 0; t < 40; ++t) {
    Graph g = random_graph(rng, 2 + t % 4, 0.6);
    auto masks = oracle::all_masks(g);
    const auto& m = masks[rng.below(masks.size())];
    for (bool nodes : {false, true})
      for (Region r : {Region::Explanation, Region::Complement}) {
        auto ref = oracle::perturbations(g, m, r == Region::Explanation, nodes);
        if (ref.empty()) continue;
        EXPECT_EQ(perturbations_of(g, m, r, PerturbConfig::exhaustive(nodes)).size(), ref.size());
      }
  }
}

TEST(Faith, ExhaustiveMatchesOracle) {
  Rng rng(43);
  for (const std::string name : {"edge-exists", "no-isolated-nodes", "triangle-motif", "node-count-le(3)"}) {
    Classifier c = Classifier::from_text(name);
    for (int t = 0; t < 30; ++t) {
      Graph g = random_graph(rng, 2 + t % 4, 0.6);
      auto masks = oracle::all_masks(g);
      const auto& m = masks[rng.below(masks.size())];
      for (bool nodes : {false, true}) {
        FaithReport r = faith(g, m, c, PerturbConfig::exhaustive(nodes));
        oracle::Faith ref = oracle::faith(g, m, fn(c), nodes);
        EXPECT_NEAR(r.suf, ref.suf, 1e-12) << name;
        EXPECT_NEAR(r.nec, ref.nec, 1e-12) << name;
        EXPECT_NEAR(r.faith, ref.faith, 1e-12) << name;
      }
    }
  }
}

TEST(Faith, SingleEdgeOfTriangleHasZeroNecessity) {
  Graph g = triangle();
  Classifier c = Classifier::from_text("exists x y . E(x,y)");
  FaithReport r = faith(g, SubgraphMask::from_edges(g, {1}), c, PerturbConfig::exhaustive());
  EXPECT_EQ(r.suf, 1.0);
  EXPECT_EQ(r.nec, 0.0);
  EXPECT_EQ(r.faith, 0.0);
}

TEST(Faith, HarmonicMean) {
  EXPECT_EQ(harmonic_mean(0, 0), 0.0);
  EXPECT_EQ(harmonic_mean(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_mean(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.5, 1), 2.0 / 3.0);
}

TEST(Faith, SufNecRanges) {
  Rng rng(47);
  Classifier c = Classifier::from_text("no-isolated-nodes");
  for (int t = 0; t < 30; ++t) {
    Graph g = random_graph(rng, 3 + t % 3, 0.5);
    auto masks = oracle::all_masks(g);
    FaithReport r = faith(g, masks[rng.below(masks.size())], c, PerturbConfig::exhaustive());
    EXPECT_GE(r.suf, std::exp(-1.0) - 1e-12);
    EXPECT_LE(r.suf, 1.0);
    EXPECT_GE(r.nec, 0.0);
    EXPECT_LE(r.nec, 1.0 - std::exp(-1.0) + 1e-12);
  }
}

TEST(MonteCarlo, RemovesBudgetEdgesAndIsSeeded) {
  Rng rng(53);
  Graph g = random_graph(rng, 12, 0.4);
  SubgraphMask m = SubgraphMask::from_edges(g, {0, 1});
  auto cfg = PerturbConfig::monte_carlo(50, 9, 0.1);
  auto a = perturbations_of(g, m, Region::Complement, cfg);
  auto b = perturbations_of(g, m, Region::Complement, cfg);
  ASSERT_EQ(a.size(), 50u);
  EXPECT_EQ(a, b);
  const int k = static_cast<int>(std::ceil(0.1 * g.num_edges()));
  for (auto& p : a) EXPECT_EQ(p.num_edges(), g.num_edges() - k);
  cfg.seed = 10;
  EXPECT_NE(perturbations_of(g, m, Region::Complement, cfg), a);
}

TEST(MonteCarlo, BadParams) {
  Graph g = triangle();
  SubgraphMask m = SubgraphMask::from_edges(g, {0});
  Classifier c = Classifier::from_text("edge-exists");
  EXPECT_EQ(code_of([&] { faith(g, m, c, PerturbConfig::monte_carlo(0, 0, 0.1)); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([&] { faith(g, m, c, PerturbConfig::monte_carlo(10, 0, 1.5)); }), ErrorCode::BadParams);
}

TEST(TopK, KeepsHighestScores) {
  Graph g = build_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  SubgraphMask m = topk_explanation({0.1, 0.9, 0.5, 0.2}, g, 0.5);
  // edge order is (0,1) (0,3) (1,2) (2,3)
  EXPECT_EQ(m.edge_list(), (std::vector<int>{1, 2}));
  EXPECT_EQ(m.node_list(), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(code_of([&] { topk_explanation({0.1}, g, 0.5); }), ErrorCode::BadParams);
}

TEST(FaithRatio, DegenerateWhenOriginalIsZero) {
  Graph g = build_graph(3, {{0, 1}, {1, 2}});
  Classifier c = Classifier::from_text("constant-true");
  FaithRatio r = faith_ratio(g, {1.0, 0.0}, c, {0.5}, {0.5}, 3, 20);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.faith_original, 0.0);
}

TEST(Verify, SufNecMatchesOracle) {
  ClassifierAst ast = resolve_classifier("red-exists");
  Classifier c = Classifier::from_ast(ast);
  CorpusOptions corpus = corpus_for({&ast}, 3);
  SufNecReport rep = verify_suf_nec(c, corpus);
  EXPECT_TRUE(rep.pass());
  // Oracle: check the same equivalences for every preserving mask.
  size_t checked = 0;
  for (auto& g : exhaustive_corpus(corpus)) {
    auto pis = oracle::pi(g, fn(c));
    for (auto& m : oracle::all_masks(g)) {
      if (c(oracle::extract(g, m)) != c(g)) continue;
      ++checked;
      auto f = oracle::faith(g, m, fn(c));
      SubgraphMask reach = oracle::reachable(g, m);
      bool contains = false, hits_all = true;
      for (auto& p : pis) {
        contains = contains || oracle::subset(p, m);
        hits_all = hits_all && oracle::intersects(p, reach);
      }
      EXPECT_EQ(f.suf == 1.0, contains);
      EXPECT_EQ(f.nec > 0.0, hits_all);
    }
  }
  EXPECT_EQ(rep.masks_checked, checked);
}

TEST(Verify, NodePinnedByComplementEdgeIsNotAnIntersection) {
  // Path 1-0-2 under "some edge exists": the single-edge TE on (0,1) shares
  // node 0 with the PI on (0,2), yet deleting inside the TE never removes (0,2).
  Graph g = build_graph(3, {{0, 1}, {0, 2}});
  Classifier c = Classifier::from_text("edge-exists");
  SubgraphMask te = SubgraphMask::from_edges(g, {0});
  EXPECT_EQ(faith(g, te, c, PerturbConfig::exhaustive()).nec, 0.0);
  SubgraphMask other = SubgraphMask::from_edges(g, {1});
  EXPECT_TRUE(oracle::intersects(te, other));
  EXPECT_FALSE(oracle::intersects(oracle::reachable(g, te), other));
}

TEST(Verify, ZeroFaithOnSmallGraphs) {
  CorpusOptions corpus;
  corpus.max_nodes = 4;
  ZeroFaithReport rep = verify_zero_faith(Classifier::from_text("edge-exists"), corpus);
  EXPECT_TRUE(rep.pass());
  EXPECT_GT(rep.instances, 0u);
  // Faith of a single edge in a 2-edge path, computed by the oracle.
  Graph p = build_graph(3, {{0, 1}, {1, 2}});
  auto f = oracle::faith(p, SubgraphMask::from_edges(p, {0}), fn(Classifier::from_text("edge-exists")));
  EXPECT_EQ(f.nec, 0.0);
  EXPECT_EQ(f.faith, 0.0);
}
