#include "xte/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace xte {

// ---------------------------------------------------------------------------
// AST helpers

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.vars != b.vars || a.color != b.color) return false;
  if (a.kind == ExprKind::CountCmp &&
      (!(a.lhs == b.lhs) || a.cmp != b.cmp || a.rhs_count != b.rhs_count || a.rhs_int != b.rhs_int))
    return false;
  if (a.children.size() != b.children.size()) return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!(*a.children[i] == *b.children[i])) return false;
  return true;
}

bool operator==(const ClassifierAst& a, const ClassifierAst& b) {
  if (a.is_rulelist != b.is_rulelist || a.default_class != b.default_class || a.rules.size() != b.rules.size())
    return false;
  for (size_t i = 0; i < a.rules.size(); ++i)
    if (a.rules[i].class_id != b.rules[i].class_id || !(*a.rules[i].expr == *b.rules[i].expr)) return false;
  return true;
}

int ClassifierAst::num_classes() const {
  if (!is_rulelist) return 2;
  int k = default_class;
  for (auto& r : rules) k = std::max(k, r.class_id);
  return k + 1;
}

namespace ast {
namespace {
ExprPtr make(ExprKind k, std::vector<std::string> vars = {}, std::vector<ExprPtr> ch = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->vars = std::move(vars);
  e->children = std::move(ch);
  return e;
}
}  // namespace
ExprPtr exists(std::vector<std::string> vars, ExprPtr body) { return make(ExprKind::Exists, std::move(vars), {std::move(body)}); }
ExprPtr forall(std::vector<std::string> vars, ExprPtr body) { return make(ExprKind::Forall, std::move(vars), {std::move(body)}); }
ExprPtr conj(std::vector<ExprPtr> parts) { return make(ExprKind::And, {}, std::move(parts)); }
ExprPtr disj(std::vector<ExprPtr> parts) { return make(ExprKind::Or, {}, std::move(parts)); }
ExprPtr neg(ExprPtr e) { return make(ExprKind::Not, {}, {std::move(e)}); }
ExprPtr edge(std::string x, std::string y) { return make(ExprKind::EdgeAtom, {std::move(x), std::move(y)}); }
ExprPtr color(std::string c, std::string x) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::ColorAtom;
  e->vars = {std::move(x)};
  e->color = std::move(c);
  return e;
}
ExprPtr distinct(std::string x, std::string y) { return make(ExprKind::Distinct, {std::move(x), std::move(y)}); }
ExprPtr count_cmp(Countable lhs, Cmp cmp, long rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::CountCmp;
  e->lhs = std::move(lhs);
  e->cmp = cmp;
  e->rhs_int = rhs;
  return e;
}
ExprPtr count_cmp(Countable lhs, Cmp cmp, Countable rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::CountCmp;
  e->lhs = std::move(lhs);
  e->cmp = cmp;
  e->rhs_count = std::move(rhs);
  return e;
}
ExprPtr has_cycle() { return make(ExprKind::HasCycle); }
}  // namespace ast

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok { Ident, Int, LParen, RParen, Comma, Dot, Colon, Semi, Neq, Ge, Le, Gt, Lt, EqEq, End };

struct Token {
  Tok kind;
  std::string text;
  size_t pos;
};

const char* tok_desc(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Colon: return "':'";
    case Tok::Semi: return "';'";
    case Tok::Neq: return "'!='";
    case Tok::Ge: return "'>='";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Lt: return "'<'";
    case Tok::EqEq: return "'=='";
    case Tok::End: return "end of input";
  }
  return "?";
}

[[noreturn]] void syntax_error(size_t pos, const std::string& expected, const std::string& found) {
  throw Error(ErrorCode::SyntaxError,
              "at position " + std::to_string(pos) + ": expected " + expected + ", found " + found);
}

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, s.substr(start, i - start), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({Tok::Int, s.substr(start, i - start), start});
      continue;
    }
    auto two = s.substr(i, 2);
    if (two == "!=") { out.push_back({Tok::Neq, two, start}); i += 2; continue; }
    if (two == ">=") { out.push_back({Tok::Ge, two, start}); i += 2; continue; }
    if (two == "<=") { out.push_back({Tok::Le, two, start}); i += 2; continue; }
    if (two == "==") { out.push_back({Tok::EqEq, two, start}); i += 2; continue; }
    Tok t;
    switch (c) {
      case '(': t = Tok::LParen; break;
      case ')': t = Tok::RParen; break;
      case ',': t = Tok::Comma; break;
      case '.': t = Tok::Dot; break;
      case ':': t = Tok::Colon; break;
      case ';': t = Tok::Semi; break;
      case '>': t = Tok::Gt; break;
      case '<': t = Tok::Lt; break;
      default: syntax_error(i, "a token", std::string("'") + c + "'");
    }
    out.push_back({t, std::string(1, c), start});
    ++i;
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

const std::set<std::string> kKeywords = {"exists", "forall", "and", "or", "not", "class", "default", "count", "hasCycle"};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {}

  ClassifierAst classifier() {
    ClassifierAst c;
    if (is_word("class")) {
      c.is_rulelist = true;
      while (true) {
        expect_word("class");
        int id = integer();
        expect(Tok::Colon);
        c.rules.push_back({expr(), id});
        expect(Tok::Semi);
        if (is_word("default")) break;
      }
      expect_word("default");
      c.default_class = integer();
    } else {
      c.rules.push_back({expr(), 1});
      c.default_class = 0;
    }
    if (peek().kind != Tok::End) fail("end of input");
    return c;
  }

  ExprPtr expr_only() {
    auto e = expr();
    if (peek().kind != Tok::End) fail("end of input");
    return e;
  }

 private:
  std::vector<Token> toks_;
  size_t p_ = 0;

  const Token& peek(size_t ahead = 0) const { return toks_[std::min(p_ + ahead, toks_.size() - 1)]; }
  bool is_word(const char* w) const { return peek().kind == Tok::Ident && peek().text == w; }
  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    syntax_error(t.pos, expected, t.kind == Tok::End ? "end of input" : "'" + t.text + "'");
  }
  Token expect(Tok k) {
    if (peek().kind != k) fail(tok_desc(k));
    return toks_[p_++];
  }
  void expect_word(const char* w) {
    if (!is_word(w)) fail(std::string("'") + w + "'");
    ++p_;
  }
  int integer() {
    auto t = expect(Tok::Int);
    return std::stoi(t.text);
  }
  std::string var_name() {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) fail("variable name");
    return toks_[p_++].text;
  }

  ExprPtr expr() {
    std::vector<ExprPtr> parts{and_expr()};
    while (is_word("or")) {
      ++p_;
      parts.push_back(and_expr());
    }
    return parts.size() == 1 ? parts[0] : ast::disj(std::move(parts));
  }

  ExprPtr and_expr() {
    std::vector<ExprPtr> parts{unary()};
    while (is_word("and")) {
      ++p_;
      parts.push_back(unary());
    }
    return parts.size() == 1 ? parts[0] : ast::conj(std::move(parts));
  }

  ExprPtr unary() {
    if (is_word("not")) {
      ++p_;
      return ast::neg(unary());
    }
    if (is_word("exists") || is_word("forall")) {
      bool ex = peek().text == "exists";
      ++p_;
      std::vector<std::string> vars{var_name()};
      while (peek().kind == Tok::Ident) vars.push_back(var_name());
      expect(Tok::Dot);
      auto body = expr();  // body extends maximally right
      return ex ? ast::exists(std::move(vars), body) : ast::forall(std::move(vars), body);
    }
    if (peek().kind == Tok::LParen) {
      ++p_;
      auto e = expr();
      expect(Tok::RParen);
      return e;
    }
    return atom();
  }

  Countable countable_body() {
    expect_word("count");
    expect(Tok::LParen);
    if (peek().kind != Tok::Ident) fail("'nodes', 'edges' or a color name");
    Countable c;
    std::string w = toks_[p_++].text;
    if (w == "nodes") c.kind = Countable::Kind::Nodes;
    else if (w == "edges") c.kind = Countable::Kind::Edges;
    else {
      c.kind = Countable::Kind::Color;
      c.color = w;
    }
    expect(Tok::RParen);
    return c;
  }

  ExprPtr atom() {
    if (is_word("hasCycle")) {
      ++p_;
      return ast::has_cycle();
    }
    if (is_word("count")) {
      Countable lhs = countable_body();
      Cmp cmp;
      switch (peek().kind) {
        case Tok::Ge: cmp = Cmp::Ge; break;
        case Tok::Le: cmp = Cmp::Le; break;
        case Tok::Gt: cmp = Cmp::Gt; break;
        case Tok::Lt: cmp = Cmp::Lt; break;
        case Tok::EqEq: cmp = Cmp::Eq; break;
        default: fail("comparison operator");
      }
      ++p_;
      if (is_word("count")) return ast::count_cmp(lhs, cmp, countable_body());
      return ast::count_cmp(lhs, cmp, static_cast<long>(integer()));
    }
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) fail("atom");
    std::string name = toks_[p_++].text;
    if (peek().kind == Tok::Neq) {
      ++p_;
      return ast::distinct(name, var_name());
    }
    expect(Tok::LParen);
    std::string x = var_name();
    if (peek().kind == Tok::Comma) {
      if (name != "E") fail("')'");
      ++p_;
      std::string y = var_name();
      expect(Tok::RParen);
      return ast::edge(x, y);
    }
    expect(Tok::RParen);
    return ast::color(name, x);
  }
};

// Scoping checks shared by parse(): every variable bound once and in scope.
void check_scopes(const ExprPtr& e, std::vector<std::string>& scope, int& max_depth) {
  auto use = [&](const std::string& v) {
    if (std::find(scope.begin(), scope.end(), v) == scope.end())
      throw Error(ErrorCode::UnboundVariable, "variable '" + v + "' is not bound");
  };
  switch (e->kind) {
    case ExprKind::Exists:
    case ExprKind::Forall: {
      size_t before = scope.size();
      for (auto& v : e->vars) {
        if (std::find(scope.begin(), scope.end(), v) != scope.end())
          throw Error(ErrorCode::SyntaxError, "variable '" + v + "' is bound twice");
        scope.push_back(v);
      }
      max_depth = std::max(max_depth, static_cast<int>(scope.size()));
      check_scopes(e->children[0], scope, max_depth);
      scope.resize(before);
      break;
    }
    case ExprKind::EdgeAtom:
    case ExprKind::Distinct:
    case ExprKind::ColorAtom:
      for (auto& v : e->vars) use(v);
      break;
    default:
      for (auto& c : e->children) check_scopes(c, scope, max_depth);
  }
}

void validate(const ExprPtr& e) {
  std::vector<std::string> scope;
  int depth = 0;
  check_scopes(e, scope, depth);
  if (depth > kMaxQuantifierDepth)
    throw Error(ErrorCode::DepthExceeded, "quantifier depth " + std::to_string(depth) + " exceeds " +
                                              std::to_string(kMaxQuantifierDepth));
}

void validate(const ClassifierAst& c) {
  if (c.rules.empty()) throw Error(ErrorCode::SyntaxError, "classifier has no rules");
  for (auto& r : c.rules) validate(r.expr);
  if (c.is_rulelist) {
    std::set<int> ids{c.default_class};
    for (auto& r : c.rules) ids.insert(r.class_id);
    if (*ids.begin() != 0 || *ids.rbegin() != static_cast<int>(ids.size()) - 1)
      throw Error(ErrorCode::SyntaxError, "class ids must be contiguous from 0");
  }
}

}  // namespace

ClassifierAst parse(const std::string& text) {
  Parser p(text);
  auto c = p.classifier();
  validate(c);
  return c;
}

ExprPtr parse_expr(const std::string& text) {
  Parser p(text);
  auto e = p.expr_only();
  validate(e);
  return e;
}

// ---------------------------------------------------------------------------
// Pretty printing. Parenthesises exactly where re-parsing would otherwise
// regroup, so parse(pretty_print(e)) == e.

namespace {

std::string countable_str(const Countable& c) {
  switch (c.kind) {
    case Countable::Kind::Nodes: return "count(nodes)";
    case Countable::Kind::Edges: return "count(edges)";
    case Countable::Kind::Color: return "count(" + c.color + ")";
  }
  return "";
}

const char* cmp_str(Cmp c) {
  switch (c) {
    case Cmp::Ge: return ">=";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Lt: return "<";
    case Cmp::Eq: return "==";
  }
  return "";
}

bool is_quant(const ExprPtr& e) { return e->kind == ExprKind::Exists || e->kind == ExprKind::Forall; }

void print(const ExprPtr& e, std::ostream& os);

void print_wrapped(const ExprPtr& e, bool wrap, std::ostream& os) {
  if (wrap) os << '(';
  print(e, os);
  if (wrap) os << ')';
}

void print(const ExprPtr& e, std::ostream& os) {
  switch (e->kind) {
    case ExprKind::Exists:
    case ExprKind::Forall:
      os << (e->kind == ExprKind::Exists ? "exists" : "forall");
      for (auto& v : e->vars) os << ' ' << v;
      os << " . ";
      print(e->children[0], os);
      break;
    case ExprKind::And:
      for (size_t i = 0; i < e->children.size(); ++i) {
        if (i) os << " and ";
        auto& c = e->children[i];
        print_wrapped(c, c->kind == ExprKind::And || c->kind == ExprKind::Or || is_quant(c), os);
      }
      break;
    case ExprKind::Or:
      for (size_t i = 0; i < e->children.size(); ++i) {
        if (i) os << " or ";
        auto& c = e->children[i];
        print_wrapped(c, c->kind == ExprKind::Or || is_quant(c), os);
      }
      break;
    case ExprKind::Not: {
      auto& c = e->children[0];
      os << "not ";
      print_wrapped(c, c->kind == ExprKind::And || c->kind == ExprKind::Or || is_quant(c), os);
      break;
    }
    case ExprKind::EdgeAtom: os << "E(" << e->vars[0] << ',' << e->vars[1] << ')'; break;
    case ExprKind::ColorAtom: os << e->color << '(' << e->vars[0] << ')'; break;
    case ExprKind::Distinct: os << e->vars[0] << " != " << e->vars[1]; break;
    case ExprKind::CountCmp:
      os << countable_str(e->lhs) << ' ' << cmp_str(e->cmp) << ' ';
      if (e->rhs_count) os << countable_str(*e->rhs_count);
      else os << e->rhs_int;
      break;
    case ExprKind::HasCycle: os << "hasCycle"; break;
  }
}

}  // namespace

std::string pretty_print(const ExprPtr& e) {
  std::ostringstream os;
  print(e, os);
  return os.str();
}

std::string pretty_print(const ClassifierAst& c) {
  if (!c.is_rulelist) return pretty_print(c.formula());
  std::ostringstream os;
  for (auto& r : c.rules) os << "class " << r.class_id << ": " << pretty_print(r.expr) << "; ";
  os << "default " << c.default_class;
  return os.str();
}

// ---------------------------------------------------------------------------
// Static analysis

int quantifier_depth(const ExprPtr& e) {
  int inner = 0;
  for (auto& c : e->children) inner = std::max(inner, quantifier_depth(c));
  if (is_quant(e)) return inner + static_cast<int>(e->vars.size());
  return inner;
}

namespace {
// negated: under an odd number of Not nodes.
bool existential(const ExprPtr& e, bool under_not, bool negated) {
  switch (e->kind) {
    case ExprKind::Forall:
    case ExprKind::HasCycle:
    case ExprKind::CountCmp:
      return false;
    case ExprKind::Exists:
      if (under_not) return false;
      return existential(e->children[0], under_not, negated);
    case ExprKind::Not:
      return existential(e->children[0], true, !negated);
    case ExprKind::EdgeAtom:
      // A negated edge literal can be falsified by adding an edge, which breaks
      // upward monotonicity on the (non-induced) subgraph lattice.
      return !negated;
    default:
      for (auto& c : e->children)
        if (!existential(c, under_not, negated)) return false;
      return true;
  }
}

void collect_colors(const ExprPtr& e, std::set<std::string>& out) {
  if (e->kind == ExprKind::ColorAtom) out.insert(e->color);
  if (e->kind == ExprKind::CountCmp) {
    if (e->lhs.kind == Countable::Kind::Color) out.insert(e->lhs.color);
    if (e->rhs_count && e->rhs_count->kind == Countable::Kind::Color) out.insert(e->rhs_count->color);
  }
  for (auto& c : e->children) collect_colors(c, out);
}
}  // namespace

bool is_purely_existential(const ExprPtr& e) { return existential(e, false, false); }

bool is_purely_existential(const ClassifierAst& c) {
  if (c.is_rulelist) return false;
  return is_purely_existential(c.formula());
}

std::vector<std::string> referenced_colors(const ClassifierAst& c) {
  std::set<std::string> s;
  for (auto& r : c.rules) collect_colors(r.expr, s);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Evaluation: the AST is compiled into a slot-addressed program. Quantified
// variables live in stack slots; each node records which slots occur free in
// it, so conjuncts (for exists) and disjuncts (for forall) are checked as soon
// as their variables are bound.

namespace {

struct CNode {
  ExprKind kind;
  int a = -1, b = -1;        // slots for atoms
  int color = -1;            // color id (ColorAtom)
  Countable lhs;
  std::optional<Countable> rhs_count;
  int lhs_color = -1, rhs_color = -1;
  Cmp cmp = Cmp::Ge;
  long rhs_int = 0;
  int base = 0, nvars = 0;   // quantifier slots [base, base + nvars)
  std::vector<int> children;
  unsigned free_slots = 0;
  // For quantifiers whose body is an And (exists) / Or (forall): body parts by
  // the binding level at which they become checkable (-1 = before binding).
  std::vector<std::vector<int>> staged;
  std::vector<int> pre_staged;
  bool use_staging = false;
};

int highest_bit(unsigned m) { return m == 0 ? -1 : 31 - __builtin_clz(m); }

}  // namespace

class Program {
 public:
  explicit Program(const ExprPtr& root) {
    std::vector<std::string> scope;
    root_ = compile(root, scope);
    depth_ = quantifier_depth(root);
  }

  bool run(const Graph& g, double budget) const {
    if (g.num_nodes() > 0 && depth_ > 0) {
      double work = std::pow(static_cast<double>(g.num_nodes()), depth_);
      if (work > budget)
        throw Error(ErrorCode::BudgetExceeded, "evaluation needs n^depth = " + std::to_string(work) +
                                                   " steps, budget is " + std::to_string(budget));
    }
    Ctx ctx{g, {}, {}, {}, -1, std::vector<int>(kMaxQuantifierDepth + 1, 0)};
    const int n = g.num_nodes();
    if (needs_adj_) {
      ctx.adj.assign(static_cast<size_t>(n) * n, 0);
      for (auto& e : g.edges()) {
        ctx.adj[static_cast<size_t>(e.u) * n + e.v] = 1;
        ctx.adj[static_cast<size_t>(e.v) * n + e.u] = 1;
      }
    }
    ctx.node_color.assign(color_names_.size(), std::vector<char>(n, 0));
    ctx.color_count.assign(color_names_.size(), 0);
    if (!color_names_.empty()) {
      std::vector<int> idx(color_names_.size());
      for (size_t c = 0; c < color_names_.size(); ++c) idx[c] = g.feature_index(color_names_[c]);
      for (int v = 0; v < n; ++v) {
        int col = g.color_of(v);
        if (col < 0) continue;
        for (size_t c = 0; c < color_names_.size(); ++c)
          if (idx[c] == col) {
            ctx.node_color[c][v] = 1;
            ++ctx.color_count[c];
          }
      }
    }
    return eval(root_, ctx);
  }

 private:
  struct Ctx {
    const Graph& g;
    std::vector<char> adj;
    std::vector<std::vector<char>> node_color;
    std::vector<long> color_count;
    int cycle;  // -1 unknown
    std::vector<int> env;
  };

  std::vector<CNode> nodes_;
  std::vector<std::string> color_names_;
  int root_ = 0;
  int depth_ = 0;
  bool needs_adj_ = false;

  int color_id(const std::string& name) {
    for (size_t i = 0; i < color_names_.size(); ++i)
      if (color_names_[i] == name) return static_cast<int>(i);
    color_names_.push_back(name);
    return static_cast<int>(color_names_.size()) - 1;
  }

  static int slot_of(const std::vector<std::string>& scope, const std::string& v) {
    for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i)
      if (scope[i] == v) return i;
    throw Error(ErrorCode::UnboundVariable, "variable '" + v + "' is not bound");
  }

  int compile(const ExprPtr& e, std::vector<std::string>& scope) {
    CNode n;
    n.kind = e->kind;
    switch (e->kind) {
      case ExprKind::Exists:
      case ExprKind::Forall: {
        n.base = static_cast<int>(scope.size());
        n.nvars = static_cast<int>(e->vars.size());
        for (auto& v : e->vars) scope.push_back(v);
        int body = compile(e->children[0], scope);
        scope.resize(n.base);
        n.children = {body};
        const unsigned own = ((1u << n.nvars) - 1) << n.base;
        n.free_slots = nodes_[body].free_slots & ~own;
        ExprKind split = e->kind == ExprKind::Exists ? ExprKind::And : ExprKind::Or;
        if (nodes_[body].kind == split) {
          n.use_staging = true;
          n.staged.assign(n.nvars, {});
          for (int part : nodes_[body].children) {
            int hb = highest_bit(nodes_[part].free_slots & ((1u << (n.base + n.nvars)) - 1));
            if (hb < n.base) n.pre_staged.push_back(part);
            else n.staged[hb - n.base].push_back(part);
          }
        }
        break;
      }
      case ExprKind::EdgeAtom:
      case ExprKind::Distinct:
        n.a = slot_of(scope, e->vars[0]);
        n.b = slot_of(scope, e->vars[1]);
        n.free_slots = (1u << n.a) | (1u << n.b);
        if (e->kind == ExprKind::EdgeAtom) needs_adj_ = true;
        break;
      case ExprKind::ColorAtom:
        n.a = slot_of(scope, e->vars[0]);
        n.free_slots = 1u << n.a;
        n.color = color_id(e->color);
        break;
      case ExprKind::CountCmp:
        n.lhs = e->lhs;
        n.rhs_count = e->rhs_count;
        n.cmp = e->cmp;
        n.rhs_int = e->rhs_int;
        if (n.lhs.kind == Countable::Kind::Color) n.lhs_color = color_id(n.lhs.color);
        if (n.rhs_count && n.rhs_count->kind == Countable::Kind::Color) n.rhs_color = color_id(n.rhs_count->color);
        break;
      case ExprKind::HasCycle:
        break;
      default:
        for (auto& c : e->children) {
          int id = compile(c, scope);
          n.children.push_back(id);
          n.free_slots |= nodes_[id].free_slots;
        }
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  static long count_of(const Countable& c, int color, const Ctx& ctx) {
    switch (c.kind) {
      case Countable::Kind::Nodes: return ctx.g.num_nodes();
      case Countable::Kind::Edges: return ctx.g.num_edges();
      case Countable::Kind::Color: return ctx.color_count[color];
    }
    return 0;
  }

  bool all_true(const std::vector<int>& parts, Ctx& ctx) const {
    for (int p : parts)
      if (!eval(p, ctx)) return false;
    return true;
  }
  bool any_true(const std::vector<int>& parts, Ctx& ctx) const {
    for (int p : parts)
      if (eval(p, ctx)) return true;
    return false;
  }

  // Exists: true iff some assignment of slots [base+level, ...) satisfies the body.
  bool exists_from(const CNode& q, int level, Ctx& ctx) const {
    if (level == q.nvars) return q.use_staging ? true : eval(q.children[0], ctx);
    const int n = ctx.g.num_nodes();
    for (int v = 0; v < n; ++v) {
      ctx.env[q.base + level] = v;
      if (q.use_staging && !all_true(q.staged[level], ctx)) continue;
      if (exists_from(q, level + 1, ctx)) return true;
    }
    return false;
  }

  // Forall: true iff every assignment satisfies the body.
  bool forall_from(const CNode& q, int level, Ctx& ctx) const {
    if (level == q.nvars) return q.use_staging ? false : eval(q.children[0], ctx);
    const int n = ctx.g.num_nodes();
    for (int v = 0; v < n; ++v) {
      ctx.env[q.base + level] = v;
      if (q.use_staging && any_true(q.staged[level], ctx)) continue;
      if (!forall_from(q, level + 1, ctx)) return false;
    }
    return true;
  }

  bool eval(int id, Ctx& ctx) const {
    const CNode& n = nodes_[id];
    switch (n.kind) {
      case ExprKind::Exists:
        if (n.use_staging && !all_true(n.pre_staged, ctx)) return false;
        return exists_from(n, 0, ctx);
      case ExprKind::Forall:
        if (n.use_staging && any_true(n.pre_staged, ctx)) return true;
        return forall_from(n, 0, ctx);
      case ExprKind::And: return all_true(n.children, ctx);
      case ExprKind::Or: return any_true(n.children, ctx);
      case ExprKind::Not: return !eval(n.children[0], ctx);
      case ExprKind::EdgeAtom: {
        const size_t nn = static_cast<size_t>(ctx.g.num_nodes());
        return ctx.adj[static_cast<size_t>(ctx.env[n.a]) * nn + ctx.env[n.b]] != 0;
      }
      case ExprKind::Distinct: return ctx.env[n.a] != ctx.env[n.b];
      case ExprKind::ColorAtom: return ctx.node_color[n.color][ctx.env[n.a]] != 0;
      case ExprKind::CountCmp: {
        long l = count_of(n.lhs, n.lhs_color, ctx);
        long r = n.rhs_count ? count_of(*n.rhs_count, n.rhs_color, ctx) : n.rhs_int;
        switch (n.cmp) {
          case Cmp::Ge: return l >= r;
          case Cmp::Le: return l <= r;
          case Cmp::Gt: return l > r;
          case Cmp::Lt: return l < r;
          case Cmp::Eq: return l == r;
        }
        return false;
      }
      case ExprKind::HasCycle:
        if (ctx.cycle < 0) ctx.cycle = has_cycle(ctx.g) ? 1 : 0;
        return ctx.cycle == 1;
    }
    return false;
  }
};

bool evaluate(const ExprPtr& e, const Graph& g, double budget) {
  validate(e);
  return Program(e).run(g, budget);
}

int evaluate_multiclass(const ClassifierAst& c, const Graph& g, double budget) {
  if (!c.is_rulelist) return evaluate(c.formula(), g, budget) ? 1 : 0;
  for (auto& r : c.rules)
    if (evaluate(r.expr, g, budget)) return r.class_id;
  return c.default_class;
}

Classifier Classifier::from_ast(ClassifierAst a, double budget) {
  validate(a);
  std::vector<std::pair<std::shared_ptr<Program>, int>> progs;
  for (auto& r : a.rules) progs.emplace_back(std::make_shared<Program>(r.expr), r.class_id);
  Classifier c;
  c.name_ = pretty_print(a);
  c.num_classes_ = a.num_classes();
  c.existential_ = is_purely_existential(a);
  if (a.is_rulelist) {
    int def = a.default_class;
    c.fn_ = [progs, def, budget](const Graph& g) {
      for (auto& [p, id] : progs)
        if (p->run(g, budget)) return id;
      return def;
    };
  } else {
    auto p = progs.front().first;
    c.fn_ = [p, budget](const Graph& g) { return p->run(g, budget) ? 1 : 0; };
  }
  c.ast_ = std::move(a);
  return c;
}

Classifier Classifier::from_text(const std::string& text) { return from_ast(resolve_classifier(text)); }

Classifier Classifier::from_function(std::string name, Fn fn, int num_classes) {
  Classifier c;
  c.fn_ = std::move(fn);
  c.name_ = std::move(name);
  c.num_classes_ = num_classes;
  return c;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {
const char* kHouse =
    "exists a b c d e . E(a,b) and E(b,c) and E(c,d) and E(d,a) and E(a,e) and E(b,e) "
    "and a != c and b != d and c != e and d != e";
const char* kCycle5 =
    "exists a b c d e . E(a,b) and E(b,c) and E(c,d) and E(d,e) and E(e,a) "
    "and a != c and a != d and b != d and b != e and c != e";
const char* kCrane =
    "exists a b c d e . E(a,b) and E(b,c) and E(a,c) and E(c,d) and E(d,e) "
    "and a != d and b != d and a != e and b != e and c != e";
}  // namespace

std::vector<BuiltinEntry> builtin_classifiers() {
  return {
      {"edge-exists", "exists x y . E(x,y)"},
      {"no-isolated-nodes", "forall x . exists y . E(x,y)"},
      {"red-majority", "count(red) >= count(blue)"},
      {"topofeature", "hasCycle and count(red) >= 2"},
      {"house-motif", kHouse},
      {"cycle5-motif", kCycle5},
      {"crane-motif", kCrane},
      {"triangle-motif", "exists a b c . E(a,b) and E(b,c) and E(a,c)"},
      {"red-exists", "exists x . red(x)"},
      {"constant-true", "count(nodes) >= 0"},
      {"motif-task", std::string("class 0: ") + kHouse + "; class 1: " + kCycle5 + "; default 2"},
      {"node-count-le(k)", "count(nodes) <= k"},
  };
}

ClassifierAst builtin_classifier(const std::string& name) {
  const std::string prefix = "node-count-le(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    std::string k = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    if (k.empty() || !std::all_of(k.begin(), k.end(), ::isdigit))
      throw Error(ErrorCode::BadParams, "node-count-le expects a non-negative integer");
    return parse("count(nodes) <= " + k);
  }
  for (auto& b : builtin_classifiers())
    if (b.name == name && b.name != "node-count-le(k)") return parse(b.text);
  throw Error(ErrorCode::BadParams, "unknown builtin classifier '" + name + "'");
}

ClassifierAst resolve_classifier(const std::string& name_or_text) {
  for (auto& b : builtin_classifiers())
    if (b.name == name_or_text) return builtin_classifier(name_or_text);
  if (name_or_text.rfind("node-count-le(", 0) == 0) return builtin_classifier(name_or_text);
  return parse(name_or_text);
}

}  // namespace xte
