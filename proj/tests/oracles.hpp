#pragma once

// Brute-force reference implementations used as test oracles. They share no
// code with the library beyond Graph/SubgraphMask and the classifier functor.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "xte/classifier.hpp"
#include "xte/graph.hpp"

namespace oracle {

using xte::Graph;
using xte::SubgraphMask;

// Every (node subset, edge subset) whose edges have both endpoints kept.
inline std::vector<SubgraphMask> all_masks(const Graph& g) {
  const int n = g.num_nodes(), m = g.num_edges();
  std::vector<SubgraphMask> out;
  for (unsigned ns = 0; ns < (1u << n); ++ns)
    for (unsigned es = 0; es < (1u << m); ++es) {
      bool ok = true;
      for (int e = 0; e < m && ok; ++e)
        if ((es >> e) & 1u) ok = ((ns >> g.edges()[e].u) & 1u) && ((ns >> g.edges()[e].v) & 1u);
      if (!ok) continue;
      SubgraphMask k;
      k.nodes.resize(n);
      k.edges.resize(m);
      for (int v = 0; v < n; ++v) k.nodes[v] = (ns >> v) & 1u;
      for (int e = 0; e < m; ++e) k.edges[e] = (es >> e) & 1u;
      out.push_back(k);
    }
  return out;
}

inline bool subset(const SubgraphMask& a, const SubgraphMask& b) {
  for (size_t i = 0; i < a.nodes.size(); ++i)
    if (a.nodes[i] && !b.nodes[i]) return false;
  for (size_t i = 0; i < a.edges.size(); ++i)
    if (a.edges[i] && !b.edges[i]) return false;
  return true;
}

inline bool intersects(const SubgraphMask& a, const SubgraphMask& b) {
  for (size_t i = 0; i < a.nodes.size(); ++i)
    if (a.nodes[i] && b.nodes[i]) return true;
  for (size_t i = 0; i < a.edges.size(); ++i)
    if (a.edges[i] && b.edges[i]) return true;
  return false;
}

// Elements of m deletable without touching anything outside m: its edges and
// the nodes of m whose edges all lie in m.
inline SubgraphMask reachable(const Graph& g, const SubgraphMask& m) {
  SubgraphMask r = m;
  for (int e = 0; e < g.num_edges(); ++e)
    if (!m.edges[e]) r.nodes[g.edges()[e].u] = r.nodes[g.edges()[e].v] = false;
  return r;
}

inline int size_en(const SubgraphMask& m) {
  return static_cast<int>(std::count(m.nodes.begin(), m.nodes.end(), true) +
                          std::count(m.edges.begin(), m.edges.end(), true));
}

inline bool is_empty(const SubgraphMask& m) { return size_en(m) == 0; }

// Induced standalone graph of a mask: kept nodes relabelled in increasing order.
inline Graph extract(const Graph& g, const SubgraphMask& m) {
  std::vector<int> id(g.num_nodes(), -1);
  int k = 0;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (m.nodes[v]) id[v] = k++;
  std::vector<std::pair<int, int>> edges;
  for (int e = 0; e < g.num_edges(); ++e)
    if (m.edges[e]) edges.push_back({id[g.edges()[e].u], id[g.edges()[e].v]});
  std::vector<std::vector<double>> x;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (m.nodes[v]) {
      std::vector<double> row;
      for (int d = 0; d < g.feature_dim(); ++d) row.push_back(g.feature(v, d));
      x.push_back(row);
    }
  return xte::build_graph(k, edges, x, g.feature_names());
}

using Fn = std::function<int(const Graph&)>;

// Smallest non-empty label-preserving masks under |V|+|E| (the empty mask
// only for the empty host).
inline std::vector<SubgraphMask> te(const Graph& g, const Fn& c) {
  const int y = c(g);
  int best = 1 << 30;
  std::vector<SubgraphMask> out;
  for (auto& m : all_masks(g)) {
    if (is_empty(m) && g.num_nodes() > 0) continue;
    if (c(extract(g, m)) != y) continue;
    int s = size_en(m);
    if (s < best) {
      best = s;
      out.clear();
    }
    if (s == best) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Subset-minimal masks all of whose supermasks within g keep the label.
inline std::vector<SubgraphMask> pi(const Graph& g, const Fn& c) {
  const int y = c(g);
  auto masks = all_masks(g);
  std::vector<char> keeps(masks.size());
  for (size_t i = 0; i < masks.size(); ++i) keeps[i] = c(extract(g, masks[i])) == y;
  std::vector<char> robust(masks.size(), 1);
  for (size_t i = 0; i < masks.size(); ++i)
    for (size_t j = 0; j < masks.size() && robust[i]; ++j)
      if (!keeps[j] && subset(masks[i], masks[j])) robust[i] = 0;
  std::vector<SubgraphMask> out;
  for (size_t i = 0; i < masks.size(); ++i) {
    if (!robust[i]) continue;
    bool minimal = true;
    for (size_t j = 0; j < masks.size() && minimal; ++j)
      if (j != i && robust[j] && subset(masks[j], masks[i])) minimal = false;
    if (minimal) out.push_back(masks[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Exhaustive perturbations of a region: valid masks that keep every element
// outside the region and differ from the full graph. Node removals off keeps
// every node.
inline std::vector<SubgraphMask> perturbations(const Graph& g, const SubgraphMask& m, bool region_is_explanation,
                                               bool node_removals) {
  auto in_region = [&](bool kept_by_m) { return region_is_explanation ? kept_by_m : !kept_by_m; };
  std::vector<SubgraphMask> out;
  for (auto& k : all_masks(g)) {
    bool ok = size_en(k) < g.num_nodes() + g.num_edges();
    for (int v = 0; v < g.num_nodes() && ok; ++v)
      if (!k.nodes[v] && (!in_region(m.nodes[v]) || !node_removals)) ok = false;
    for (int e = 0; e < g.num_edges() && ok; ++e)
      if (!k.edges[e] && !in_region(m.edges[e])) ok = false;
    if (ok) out.push_back(k);
  }
  return out;
}

inline double delta_rate(const Graph& g, const SubgraphMask& m, bool region_is_explanation, bool node_removals,
                         const Fn& c) {
  auto ps = perturbations(g, m, region_is_explanation, node_removals);
  if (ps.empty()) return 0.0;
  const int y = c(g);
  double flips = 0;
  for (auto& k : ps) flips += c(extract(g, k)) != y;
  return flips / static_cast<double>(ps.size());
}

struct Faith {
  double suf, nec, faith;
};

inline Faith faith(const Graph& g, const SubgraphMask& m, const Fn& c, bool node_removals = true) {
  double s = std::exp(-delta_rate(g, m, false, node_removals, c));
  double n = 1.0 - std::exp(-delta_rate(g, m, true, node_removals, c));
  double f = (s + n) > 0 ? 2 * s * n / (s + n) : 0.0;
  return {s, n, f};
}

// ---------------------------------------------------------------------------
// Direct evaluators for specific formulas, written as plain loops.

inline bool adj(const Graph& g, int a, int b) { return g.edge_index(a, b) >= 0; }

inline bool has_edge(const Graph& g) { return g.num_edges() > 0; }

inline bool no_isolated(const Graph& g) {
  auto d = g.degrees();
  return std::all_of(d.begin(), d.end(), [](int x) { return x > 0; });
}

inline bool has_triangle(const Graph& g) {
  const int n = g.num_nodes();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (adj(g, a, b) && adj(g, b, c) && adj(g, a, c)) return true;
  return false;
}

inline int count_color(const Graph& g, const std::string& name) {
  int k = g.feature_index(name), c = 0;
  if (k < 0) return 0;
  for (int v = 0; v < g.num_nodes(); ++v) c += g.feature(v, k) > 0.5;
  return c;
}

// Cycle detection by union-find.
inline bool cyclic(const Graph& g) {
  std::vector<int> p(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) p[i] = i;
  std::function<int(int)> find = [&](int x) { return p[x] == x ? x : p[x] = find(p[x]); };
  for (auto& e : g.edges()) {
    int a = find(e.u), b = find(e.v);
    if (a == b) return true;
    p[a] = b;
  }
  return false;
}

// 5-cycle subgraph (not necessarily induced) by brute force over ordered 5-tuples.
inline bool has_cycle5(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> t(5);
  std::function<bool(int)> rec = [&](int i) -> bool {
    if (i == 5) return adj(g, t[4], t[0]);
    for (int v = 0; v < n; ++v) {
      if (std::find(t.begin(), t.begin() + i, v) != t.begin() + i) continue;
      if (i > 0 && !adj(g, t[i - 1], v)) continue;
      t[i] = v;
      if (rec(i + 1)) return true;
    }
    return false;
  };
  return rec(0);
}

// House: 4-cycle a-b-c-d with roof e adjacent to a and b, all distinct.
inline bool has_house(const Graph& g) {
  const int n = g.num_nodes();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          for (int e = 0; e < n; ++e) {
            std::set<int> s{a, b, c, d, e};
            if (s.size() != 5) continue;
            if (adj(g, a, b) && adj(g, b, c) && adj(g, c, d) && adj(g, d, a) && adj(g, a, e) && adj(g, b, e))
              return true;
          }
  return false;
}

}  // namespace oracle
