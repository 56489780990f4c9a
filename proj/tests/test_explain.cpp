#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "xte/explain.hpp"
#include "xte/rng.hpp"

using namespace xte;

namespace {

Graph triangle() { return build_graph(3, {{0, 1}, {1, 2}, {0, 2}}); }

Graph random_colored(Rng& rng, int n, double p) {
  std::vector<std::pair<int, int>> e;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (rng.coin(p)) e.push_back({a, b});
  std::vector<std::vector<double>> x;
  for (int v = 0; v < n; ++v) {
    int c = static_cast<int>(rng.below(3));
    x.push_back({c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0});
  }
  return build_graph(n, e, x, {"red", "blue"});
}

oracle::Fn fn(const Classifier& c) {
  return [c](const Graph& g) { return c(g); };
}

const std::vector<std::string> kClassifiers = {
    "edge-exists", "no-isolated-nodes", "triangle-motif", "red-exists", "red-majority", "topofeature",
    "exists x y . E(x,y) and red(x)", "node-count-le(2)", "constant-true"};

}  // namespace

TEST(Explain, TriangleExistsEdge) {
  Graph g = triangle();
  Classifier c = Classifier::from_text("exists x y . E(x,y)");
  auto te = trivial_explanations(g, c);
  auto pi = pi_explanations(g, c);
  ASSERT_EQ(te.masks.size(), 3u);
  EXPECT_EQ(*te.size, 3);
  EXPECT_EQ(te.masks, pi.masks);
  for (auto& m : te.masks) EXPECT_EQ(m.edge_count(), 1);
}

TEST(Explain, TriangleForallExistsEdge) {
  Graph g = triangle();
  Classifier c = Classifier::from_text("forall x . exists y . E(x,y)");
  auto te = trivial_explanations(g, c);
  auto pi = pi_explanations(g, c);
  ASSERT_EQ(te.masks.size(), 3u);
  for (auto& m : te.masks) EXPECT_EQ(m.edge_count(), 1);
  ASSERT_EQ(pi.masks.size(), 3u);
  for (auto& m : pi.masks) {
    EXPECT_EQ(m.edge_count(), 2);
    EXPECT_EQ(m.node_count(), 3);
  }
}

TEST(Explain, MatchesBruteForceOracle) {
  Rng rng(23);
  for (const auto& name : kClassifiers) {
    Classifier c = Classifier::from_text(name);
    for (int t = 0; t < 25; ++t) {
      Graph g = random_colored(rng, 1 + t % 4, 0.5);
      auto te = trivial_explanations(g, c);
      auto pi = pi_explanations(g, c);
      EXPECT_EQ(te.masks, oracle::te(g, fn(c))) << name << " TE";
      EXPECT_EQ(pi.masks, oracle::pi(g, fn(c))) << name << " PI";
      EXPECT_EQ(te.label, c(g));
    }
  }
}

TEST(Explain, RobustSetIsUpwardClosed) {
  Rng rng(29);
  Classifier c = Classifier::from_text("no-isolated-nodes");
  for (int t = 0; t < 20; ++t) {
    Graph g = random_colored(rng, 2 + t % 3, 0.6);
    auto robust = robust_set(g, c);
    std::set<SubgraphMask> r(robust.begin(), robust.end());
    for (auto& m : oracle::all_masks(g))
      for (auto& k : robust)
        if (oracle::subset(k, m)) EXPECT_TRUE(r.count(m));
  }
}

TEST(Explain, ExistentialTeIsPiProperty) {
  Rng rng(31);
  for (const std::string name : {"edge-exists", "triangle-motif", "red-exists", "exists x y . E(x,y) and red(x)"}) {
    Classifier c = Classifier::from_text(name);
    ASSERT_TRUE(c.purely_existential());
    for (int t = 0; t < 40; ++t) {
      Graph g = random_colored(rng, 1 + t % 5, 0.5);
      if (c(g) != 1) continue;
      auto te = trivial_explanations(g, c);
      auto pi = pi_explanations(g, c);
      std::set<SubgraphMask> p(pi.masks.begin(), pi.masks.end());
      for (auto& m : te.masks) EXPECT_TRUE(p.count(m)) << name;
    }
  }
}

TEST(Explain, AlternativeMetricsChangeMinimum) {
  Graph g = build_graph(2, {{0, 1}});
  Classifier c = Classifier::from_text("count(nodes) >= 1");
  auto te = trivial_explanations(g, c, SizeMetric::NodesOnly);
  EXPECT_EQ(*te.size, 1);
  for (auto& m : te.masks) EXPECT_EQ(m.node_count(), 1);
}

TEST(Explain, EmptyHostHasEmptyExplanation) {
  Graph g = build_graph(0, {});
  Classifier c = Classifier::from_text("edge-exists");
  auto te = trivial_explanations(g, c);
  ASSERT_EQ(te.masks.size(), 1u);
  EXPECT_EQ(te.masks[0].node_count(), 0);
}

TEST(Explain, MutantDropsRobustness) {
  Classifier c = Classifier::from_text("no-isolated-nodes");
  auto good = pi_explanations(triangle(), c);
  auto bad = pi_explanations(triangle(), c, {}, PiOptions{true});
  EXPECT_NE(good.masks, bad.masks);
}

TEST(Explain, CorpusSizes) {
  CorpusOptions o;
  o.max_nodes = 3;
  // featureless: 1 + 1 + 2 + 8 graphs on 0..3 nodes
  EXPECT_EQ(exhaustive_corpus(o).size(), 12u);
  o.palette = {"red"};
  // two colors per node: 1 + 2 + 2*4 + 8*8
  EXPECT_EQ(exhaustive_corpus(o).size(), 75u);
}

TEST(Explain, VerifiersAgreeWithOracleOnSmallCorpus) {
  for (const std::string name : {"edge-exists", "triangle-motif", "red-exists"}) {
    ClassifierAst ast = resolve_classifier(name);
    Classifier c = Classifier::from_ast(ast);
    CorpusOptions corpus = corpus_for({&ast}, 3);
    TePiReport rep = verify_te_subset_pi(c, corpus);
    // Oracle count of TE masks over positive instances and any TE not in PI.
    size_t te_checked = 0, thm41_bad = 0;
    for (auto& g : exhaustive_corpus(corpus)) {
      if (c(g) != 1) continue;
      auto te = oracle::te(g, fn(c));
      auto pi = oracle::pi(g, fn(c));
      for (auto& m : te) {
        ++te_checked;
        thm41_bad += std::find(pi.begin(), pi.end(), m) == pi.end();
      }
    }
    EXPECT_TRUE(rep.thm41_checked);
    EXPECT_EQ(rep.te_checked, te_checked) << name;
    EXPECT_EQ(thm41_bad, 0u);
    EXPECT_TRUE(rep.thm41_pass);
  }
}

TEST(Explain, MutantIsCaughtByVerifier) {
  ClassifierAst ast = resolve_classifier("no-isolated-nodes");
  CorpusOptions corpus;
  corpus.max_nodes = 3;
  VerifyOptions vo;
  vo.pi.skip_robustness = true;
  AmbiguityReport good = verify_te_ambiguity(Classifier::from_text("edge-exists"), Classifier::from_ast(ast), corpus);
  EXPECT_TRUE(good.te_equal_everywhere);
  EXPECT_TRUE(good.pi_difference_found());
  AmbiguityReport bad =
      verify_te_ambiguity(Classifier::from_text("edge-exists"), Classifier::from_ast(ast), corpus, vo);
  EXPECT_LT(bad.pi_differences, good.pi_differences);
}

TEST(Explain, ParallelVerifierMatchesSerial) {
  ClassifierAst ast = resolve_classifier("red-exists");
  Classifier c = Classifier::from_ast(ast);
  CorpusOptions corpus = corpus_for({&ast}, 3);
  VerifyOptions one, four;
  four.threads = 4;
  TePiReport a = verify_te_subset_pi(c, corpus, one), b = verify_te_subset_pi(c, corpus, four);
  EXPECT_EQ(a.te_checked, b.te_checked);
  EXPECT_EQ(a.union_violations, b.union_violations);
  EXPECT_EQ(a.union_counterexample.has_value(), b.union_counterexample.has_value());
}
