#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xte/classifier.hpp"
#include "xte/rng.hpp"

using namespace xte;

namespace {

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

TEST(Parser, BuildsExpectedAst) {
  ClassifierAst c = parse("exists x y . E(x,y)");
  EXPECT_EQ(*c.formula(), *ast::exists({"x", "y"}, ast::edge("x", "y")));
  EXPECT_FALSE(c.is_rulelist);
  EXPECT_EQ(c.num_classes(), 2);
}

TEST(Parser, AndBindsTighterThanOr) {
  ExprPtr e = parse_expr("hasCycle or count(red) >= 1 and count(blue) <= 2");
  ASSERT_EQ(e->kind, ExprKind::Or);
  EXPECT_EQ(e->children[1]->kind, ExprKind::And);
}

TEST(Parser, PrettyPrintRoundTrips) {
  for (auto& b : builtin_classifiers()) {
    if (b.name == "node-count-le(k)") continue;
    ClassifierAst c = parse(b.text);
    EXPECT_EQ(parse(pretty_print(c)), c) << b.name;
  }
  ClassifierAst r = parse("class 0: exists x . red(x); class 1: not hasCycle; default 2");
  EXPECT_TRUE(r.is_rulelist);
  EXPECT_EQ(r.num_classes(), 3);
  EXPECT_EQ(parse(pretty_print(r)), r);
}

TEST(Parser, Errors) {
  EXPECT_EQ(code_of([] { parse("exists x . E(x,"); }), ErrorCode::SyntaxError);
  EXPECT_EQ(code_of([] { parse("exists x . E(x,y)"); }), ErrorCode::UnboundVariable);
  EXPECT_EQ(code_of([] { parse("count(red) >> 2"); }), ErrorCode::SyntaxError);
  EXPECT_EQ(code_of([] { parse("exists a b c d e f g . E(a,b)"); }), ErrorCode::DepthExceeded);
  EXPECT_EQ(code_of([] { builtin_classifier("no-such"); }), ErrorCode::BadParams);
}

TEST(Parser, SyntaxErrorReportsPosition) {
  try {
    parse("exists x . E(x,");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("position"), std::string::npos);
  }
}

TEST(Evaluator, MatchesDirectLoopsOnRandomGraphs) {
  Rng rng(17);
  ExprPtr edge = parse("exists x y . E(x,y)").formula();
  ExprPtr cover = parse("forall x . exists y . E(x,y)").formula();
  ExprPtr tri = builtin_classifier("triangle-motif").formula();
  ExprPtr maj = builtin_classifier("red-majority").formula();
  ExprPtr topo = builtin_classifier("topofeature").formula();
  ExprPtr c5 = builtin_classifier("cycle5-motif").formula();
  ExprPtr house = builtin_classifier("house-motif").formula();
  for (int t = 0; t < 300; ++t) {
    Graph g = random_colored(rng, 1 + t % 7, 0.35);
    EXPECT_EQ(evaluate(edge, g), oracle::has_edge(g));
    EXPECT_EQ(evaluate(cover, g), oracle::no_isolated(g));
    EXPECT_EQ(evaluate(tri, g), oracle::has_triangle(g));
    EXPECT_EQ(evaluate(maj, g), oracle::count_color(g, "red") >= oracle::count_color(g, "blue"));
    EXPECT_EQ(evaluate(topo, g), oracle::cyclic(g) && oracle::count_color(g, "red") >= 2);
    EXPECT_EQ(evaluate(c5, g), oracle::has_cycle5(g));
    EXPECT_EQ(evaluate(house, g), oracle::has_house(g));
  }
}

TEST(Evaluator, EmptyGraphSemantics) {
  Graph g = build_graph(0, {});
  EXPECT_FALSE(evaluate(parse_expr("exists x . x != x or not (x != x)"), g));
  EXPECT_TRUE(evaluate(parse_expr("forall x . E(x,x)"), g));
  EXPECT_TRUE(evaluate(parse_expr("count(nodes) == 0"), g));
}

TEST(Evaluator, MissingColorIsFalse) {
  Graph g = build_graph(2, {{0, 1}});
  EXPECT_FALSE(evaluate(parse_expr("exists x . red(x)"), g));
  EXPECT_TRUE(evaluate(parse_expr("count(red) == 0"), g));
}

TEST(Evaluator, RuleListFirstMatchWins) {
  ClassifierAst r = parse("class 1: hasCycle; class 0: count(edges) >= 1; default 2");
  EXPECT_EQ(evaluate_multiclass(r, build_graph(3, {{0, 1}, {1, 2}, {0, 2}})), 1);
  EXPECT_EQ(evaluate_multiclass(r, build_graph(3, {{0, 1}})), 0);
  EXPECT_EQ(evaluate_multiclass(r, build_graph(3, {})), 2);
}

TEST(Evaluator, BudgetExceeded) {
  Graph g = build_graph(30, {});
  EXPECT_EQ(code_of([&] { evaluate(parse_expr("exists a b c d e . E(a,b)"), g, 1000); }), ErrorCode::BudgetExceeded);
}

TEST(Classifier, PurelyExistential) {
  EXPECT_TRUE(is_purely_existential(parse("exists x y . E(x,y)")));
  EXPECT_TRUE(is_purely_existential(builtin_classifier("house-motif")));
  EXPECT_TRUE(is_purely_existential(parse("exists x . red(x)")));
  EXPECT_FALSE(is_purely_existential(parse("forall x . exists y . E(x,y)")));
  EXPECT_FALSE(is_purely_existential(parse("exists x y . not E(x,y)")));
  EXPECT_FALSE(is_purely_existential(parse("count(red) >= 2")));
}

TEST(Classifier, FromTextResolvesBuiltins) {
  Classifier c = Classifier::from_text("node-count-le(2)");
  EXPECT_EQ(c(build_graph(2, {})), 1);
  EXPECT_EQ(c(build_graph(3, {})), 0);
  Classifier m = Classifier::from_text("motif-task");
  EXPECT_EQ(m.num_classes(), 3);
  EXPECT_EQ(referenced_colors(parse("exists x . red(x) and not blue(x)")), (std::vector<std::string>{"blue", "red"}));
}
