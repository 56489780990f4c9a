#include "xte/graph.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <set>

namespace xte {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::FeatureDimMismatch: return "FeatureDimMismatch";
    case ErrorCode::InvalidMask: return "InvalidMask";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::AllWeightsDropped: return "AllWeightsDropped";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::Internal:
    case ErrorCode::NonFinite:
    case ErrorCode::DomainError:
      return false;
    default:
      return true;
  }
}

Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<std::vector<double>>& features, const std::vector<std::string>& names) {
  if (n < 0) throw Error(ErrorCode::BadParams, "negative node count");
  Graph g;
  g.n_ = n;
  g.names_ = names;
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw Error(ErrorCode::InvalidMask, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") references a missing node");
    if (a == b) throw Error(ErrorCode::SelfLoop, "self-loop on node " + std::to_string(a));
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second)
      throw Error(ErrorCode::DuplicateEdge, "duplicate edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  for (auto [a, b] : seen) g.edges_.push_back({a, b});

  const size_t d = names.size();
  g.x_.assign(static_cast<size_t>(n) * d, 0.0);
  if (!features.empty()) {
    if (static_cast<int>(features.size()) != n)
      throw Error(ErrorCode::FeatureDimMismatch, "feature rows != node count");
    for (int i = 0; i < n; ++i) {
      if (features[i].size() != d)
        throw Error(ErrorCode::FeatureDimMismatch, "node " + std::to_string(i) + " has feature dimension " +
                                                       std::to_string(features[i].size()) + ", expected " + std::to_string(d));
      std::copy(features[i].begin(), features[i].end(), g.x_.begin() + static_cast<long>(i * d));
    }
  }
  return g;
}

Graph with_features(const Graph& g, const std::vector<std::vector<double>>& features,
                    const std::vector<std::string>& names) {
  std::vector<std::pair<int, int>> e;
  for (auto& ed : g.edges()) e.emplace_back(ed.u, ed.v);
  return build_graph(g.num_nodes(), e, features, names);
}

int Graph::edge_index(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
  if (it != edges_.end() && it->u == u && it->v == v) return static_cast<int>(it - edges_.begin());
  return -1;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n_);
  for (auto& e : edges_) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n_, 0);
  for (auto& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

int Graph::color_of(int node) const {
  const int d = feature_dim();
  int hot = -1;
  for (int k = 0; k < d; ++k) {
    double v = feature(node, k);
    if (v == 1.0) {
      if (hot >= 0) return -1;
      hot = k;
    } else if (v != 0.0) {
      return -1;
    }
  }
  return hot;
}

int Graph::feature_index(const std::string& name) const {
  for (size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return static_cast<int>(k);
  return -1;
}

const char* size_metric_name(SizeMetric m) {
  switch (m) {
    case SizeMetric::EdgesPlusNodes: return "edges+nodes";
    case SizeMetric::EdgesOnly: return "edges";
    case SizeMetric::NodesOnly: return "nodes";
    case SizeMetric::EdgesNodesFeatures: return "edges+nodes+features";
  }
  return "?";
}

SizeMetric parse_size_metric(const std::string& s) {
  if (s == "edges+nodes" || s == "EdgesPlusNodes") return SizeMetric::EdgesPlusNodes;
  if (s == "edges" || s == "EdgesOnly") return SizeMetric::EdgesOnly;
  if (s == "nodes" || s == "NodesOnly") return SizeMetric::NodesOnly;
  if (s == "edges+nodes+features" || s == "EdgesNodesFeatures") return SizeMetric::EdgesNodesFeatures;
  throw Error(ErrorCode::BadParams, "unknown size metric '" + s + "'");
}

SubgraphMask SubgraphMask::empty(const Graph& g, bool feature_mode) {
  SubgraphMask m;
  m.nodes.assign(g.num_nodes(), false);
  m.edges.assign(g.num_edges(), false);
  m.feature_mode = feature_mode;
  if (feature_mode) m.features.assign(static_cast<size_t>(g.num_nodes()) * g.feature_dim(), false);
  return m;
}

SubgraphMask SubgraphMask::full(const Graph& g, bool feature_mode) {
  SubgraphMask m;
  m.nodes.assign(g.num_nodes(), true);
  m.edges.assign(g.num_edges(), true);
  m.feature_mode = feature_mode;
  if (feature_mode) m.features.assign(static_cast<size_t>(g.num_nodes()) * g.feature_dim(), true);
  return m;
}

SubgraphMask SubgraphMask::from_edges(const Graph& g, const std::vector<int>& edge_ids) {
  SubgraphMask m = empty(g);
  for (int e : edge_ids) {
    if (e < 0 || e >= g.num_edges()) throw Error(ErrorCode::InvalidMask, "edge index out of range");
    m.edges[e] = true;
    m.nodes[g.edges()[e].u] = true;
    m.nodes[g.edges()[e].v] = true;
  }
  return m;
}

int SubgraphMask::node_count() const { return static_cast<int>(std::count(nodes.begin(), nodes.end(), true)); }
int SubgraphMask::edge_count() const { return static_cast<int>(std::count(edges.begin(), edges.end(), true)); }

std::vector<int> SubgraphMask::node_list() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> SubgraphMask::edge_list() const {
  std::vector<int> out;
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges[i]) out.push_back(static_cast<int>(i));
  return out;
}

bool SubgraphMask::subset_of(const SubgraphMask& o) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] && !o.nodes[i]) return false;
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges[i] && !o.edges[i]) return false;
  if (feature_mode && o.feature_mode) {
    for (size_t i = 0; i < features.size(); ++i)
      if (features[i] && !o.features[i]) return false;
  }
  return true;
}

bool is_valid_mask(const Graph& g, const SubgraphMask& m) {
  if (static_cast<int>(m.nodes.size()) != g.num_nodes() || static_cast<int>(m.edges.size()) != g.num_edges())
    return false;
  for (int e = 0; e < g.num_edges(); ++e)
    if (m.edges[e] && !(m.nodes[g.edges()[e].u] && m.nodes[g.edges()[e].v])) return false;
  if (m.feature_mode) {
    const int d = g.feature_dim();
    if (m.features.size() != static_cast<size_t>(g.num_nodes()) * d) return false;
    for (int v = 0; v < g.num_nodes(); ++v)
      for (int k = 0; k < d; ++k)
        if (m.features[static_cast<size_t>(v) * d + k] && !m.nodes[v]) return false;
  }
  return true;
}

void check_mask(const Graph& g, const SubgraphMask& m) {
  if (!is_valid_mask(g, m)) throw Error(ErrorCode::InvalidMask, "mask does not fit the host graph or keeps an edge without its endpoints");
}

int mask_size(const Graph& g, const SubgraphMask& m, SizeMetric metric) {
  const int nodes = m.node_count(), edges = m.edge_count();
  switch (metric) {
    case SizeMetric::EdgesPlusNodes: return nodes + edges;
    case SizeMetric::EdgesOnly: return edges;
    case SizeMetric::NodesOnly: return nodes;
    case SizeMetric::EdgesNodesFeatures: {
      int feats = 0;
      const int d = g.feature_dim();
      for (int v = 0; v < g.num_nodes(); ++v) {
        if (!m.nodes[v]) continue;
        for (int k = 0; k < d; ++k) {
          bool kept = !m.feature_mode || m.features[static_cast<size_t>(v) * d + k];
          if (kept && g.feature(v, k) != 0.0) ++feats;
        }
      }
      return nodes + edges + feats;
    }
  }
  return 0;
}

MaskedGraph apply_mask(const Graph& g, const SubgraphMask& m) {
  check_mask(g, m);
  MaskedGraph out;
  std::vector<int> remap(g.num_nodes(), -1);
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (m.nodes[v]) {
      remap[v] = static_cast<int>(out.retained.size());
      out.retained.push_back(v);
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (int e = 0; e < g.num_edges(); ++e)
    if (m.edges[e]) edges.emplace_back(remap[g.edges()[e].u], remap[g.edges()[e].v]);
  const int d = g.feature_dim();
  std::vector<std::vector<double>> x;
  if (d > 0) {
    for (int v : out.retained) {
      std::vector<double> row(d);
      for (int k = 0; k < d; ++k) {
        bool kept = !m.feature_mode || m.features[static_cast<size_t>(v) * d + k];
        row[k] = kept ? g.feature(v, k) : 0.0;
      }
      x.push_back(std::move(row));
    }
  }
  out.graph = build_graph(static_cast<int>(out.retained.size()), edges, x, g.feature_names());
  return out;
}

std::vector<SubgraphMask> lattice_children(const Graph& g, const SubgraphMask& m) {
  check_mask(g, m);
  std::vector<SubgraphMask> out;
  for (int e = 0; e < g.num_edges(); ++e) {
    if (!m.edges[e]) continue;
    SubgraphMask c = m;
    c.edges[e] = false;
    out.push_back(std::move(c));
  }
  std::vector<int> deg(g.num_nodes(), 0);
  for (int e = 0; e < g.num_edges(); ++e)
    if (m.edges[e]) {
      ++deg[g.edges()[e].u];
      ++deg[g.edges()[e].v];
    }
  const int d = g.feature_dim();
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!m.nodes[v] || deg[v] > 0) continue;
    bool has_feats = false;
    if (m.feature_mode)
      for (int k = 0; k < d; ++k) has_feats = has_feats || m.features[static_cast<size_t>(v) * d + k];
    if (has_feats) continue;
    SubgraphMask c = m;
    c.nodes[v] = false;
    out.push_back(std::move(c));
  }
  if (m.feature_mode) {
    for (size_t i = 0; i < m.features.size(); ++i) {
      if (!m.features[i]) continue;
      SubgraphMask c = m;
      c.features[i] = false;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<SubgraphMask> lattice_parents(const Graph& g, const SubgraphMask& m) {
  check_mask(g, m);
  std::vector<SubgraphMask> out;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (m.nodes[v]) continue;
    SubgraphMask p = m;
    p.nodes[v] = true;
    out.push_back(std::move(p));
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edges()[e];
    if (m.edges[e] || !m.nodes[ed.u] || !m.nodes[ed.v]) continue;
    SubgraphMask p = m;
    p.edges[e] = true;
    out.push_back(std::move(p));
  }
  if (m.feature_mode) {
    const int d = g.feature_dim();
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (!m.nodes[v]) continue;
      for (int k = 0; k < d; ++k) {
        size_t i = static_cast<size_t>(v) * d + k;
        if (m.features[i]) continue;
        SubgraphMask p = m;
        p.features[i] = true;
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

std::vector<int> component_ids(const Graph& g) {
  std::vector<int> parent(g.num_nodes());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (auto& e : g.edges()) parent[find(e.u)] = find(e.v);
  std::vector<int> ids(g.num_nodes(), -1), root_id(g.num_nodes(), -1);
  int next = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    int r = find(v);
    if (root_id[r] < 0) root_id[r] = next++;
    ids[v] = root_id[r];
  }
  return ids;
}

int count_components(const Graph& g) {
  auto ids = component_ids(g);
  return ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
}

bool has_cycle(const Graph& g) {
  // Iterative DFS: a non-tree edge to a visited vertex other than the parent closes a cycle.
  auto adj = g.adjacency();
  std::vector<int> parent(g.num_nodes(), -2);
  for (int s = 0; s < g.num_nodes(); ++s) {
    if (parent[s] != -2) continue;
    parent[s] = -1;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (w == parent[v]) continue;
        if (parent[w] != -2) return true;
        parent[w] = v;
        stack.push_back(w);
      }
    }
  }
  return false;
}

std::uint64_t graph_digest(const Graph& g) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* p, size_t len) {
    auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  int n = g.num_nodes();
  mix(&n, sizeof n);
  for (auto& e : g.edges()) mix(&e, sizeof e);
  for (auto& s : g.feature_names()) mix(s.data(), s.size() + 1);
  for (double v : g.features()) mix(&v, sizeof v);
  return h;
}

}  // namespace xte
