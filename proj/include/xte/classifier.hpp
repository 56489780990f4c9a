#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xte/graph.hpp"

namespace xte {

enum class ExprKind { Exists, Forall, And, Or, Not, EdgeAtom, ColorAtom, Distinct, CountCmp, HasCycle };
enum class Cmp { Ge, Le, Gt, Lt, Eq };

// What a count(...) term counts: nodes, edges, or nodes of one color.
struct Countable {
  enum class Kind { Nodes, Edges, Color } kind = Kind::Nodes;
  std::string color;
  friend bool operator==(const Countable&, const Countable&) = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  std::vector<std::string> vars;  // bound vars (quantifiers) or atom arguments
  std::vector<ExprPtr> children;
  std::string color;              // ColorAtom
  Countable lhs;                  // CountCmp
  Cmp cmp = Cmp::Ge;
  std::optional<Countable> rhs_count;
  long rhs_int = 0;
};

bool operator==(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) { return *a == *b; }

namespace ast {
ExprPtr exists(std::vector<std::string> vars, ExprPtr body);
ExprPtr forall(std::vector<std::string> vars, ExprPtr body);
ExprPtr conj(std::vector<ExprPtr> parts);
ExprPtr disj(std::vector<ExprPtr> parts);
ExprPtr neg(ExprPtr e);
ExprPtr edge(std::string x, std::string y);
ExprPtr color(std::string c, std::string x);
ExprPtr distinct(std::string x, std::string y);
ExprPtr count_cmp(Countable lhs, Cmp cmp, long rhs);
ExprPtr count_cmp(Countable lhs, Cmp cmp, Countable rhs);
ExprPtr has_cycle();
}  // namespace ast

struct Rule {
  ExprPtr expr;
  int class_id;
};

// A parsed classifier: either a single boolean sentence (labels 1/0) or an
// ordered rule list with a default class.
struct ClassifierAst {
  std::vector<Rule> rules;  // a sentence is stored as one rule with class 1
  int default_class = 0;
  bool is_rulelist = false;

  const ExprPtr& formula() const { return rules.front().expr; }
  int num_classes() const;
  friend bool operator==(const ClassifierAst& a, const ClassifierAst& b);
};

constexpr int kMaxQuantifierDepth = 6;
constexpr double kDefaultEvalBudget = 1e7;

ClassifierAst parse(const std::string& text);
ExprPtr parse_expr(const std::string& text);
std::string pretty_print(const ExprPtr& e);
std::string pretty_print(const ClassifierAst& c);

int quantifier_depth(const ExprPtr& e);
bool is_purely_existential(const ExprPtr& e);
bool is_purely_existential(const ClassifierAst& c);
std::vector<std::string> referenced_colors(const ClassifierAst& c);

bool evaluate(const ExprPtr& e, const Graph& g, double budget = kDefaultEvalBudget);
int evaluate_multiclass(const ClassifierAst& c, const Graph& g, double budget = kDefaultEvalBudget);

// Type-erased graph classifier used by the explanation and faithfulness code.
class Classifier {
 public:
  using Fn = std::function<int(const Graph&)>;

  Classifier() = default;
  static Classifier from_ast(ClassifierAst ast, double budget = kDefaultEvalBudget);
  static Classifier from_text(const std::string& text);
  static Classifier from_function(std::string name, Fn fn, int num_classes);

  int operator()(const Graph& g) const { return fn_(g); }
  const std::string& name() const { return name_; }
  int num_classes() const { return num_classes_; }
  bool purely_existential() const { return existential_; }
  const std::optional<ClassifierAst>& ast() const { return ast_; }

 private:
  Fn fn_;
  std::string name_;
  int num_classes_ = 2;
  bool existential_ = false;
  std::optional<ClassifierAst> ast_;
};

struct BuiltinEntry {
  std::string name;
  std::string text;
};

// Named catalog; node-count-le(k) is parameterised and resolved by builtin_classifier.
std::vector<BuiltinEntry> builtin_classifiers();
ClassifierAst builtin_classifier(const std::string& name);

// Resolves a builtin name or falls back to parsing the text as DSL.
ClassifierAst resolve_classifier(const std::string& name_or_text);

}  // namespace xte
