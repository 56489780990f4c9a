#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xte/error.hpp"

namespace xte {

struct Edge {
  int u = 0;
  int v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected simple graph with dense per-node features. Edges are stored with
// u < v in sorted order, so an edge index is stable for a given graph.
class Graph {
 public:
  Graph() = default;

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int feature_dim() const { return static_cast<int>(names_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<double>& features() const { return x_; }  // row-major n x d
  double feature(int node, int k) const { return x_[static_cast<size_t>(node) * names_.size() + k]; }

  // Index of edge (u,v) in edges(), or -1.
  int edge_index(int u, int v) const;
  std::vector<std::vector<int>> adjacency() const;
  std::vector<int> degrees() const;

  // One-hot color index of a node, or -1 when the feature vector is not one-hot.
  int color_of(int node) const;
  int feature_index(const std::string& name) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend Graph build_graph(int, const std::vector<std::pair<int, int>>&, const std::vector<std::vector<double>>&,
                           const std::vector<std::string>&);
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> names_;
  std::vector<double> x_;
};

// features may be empty (then every node gets a vector of dimension names.size() filled with zeros,
// which must be 0 when names is empty too).
Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<std::vector<double>>& features = {},
                  const std::vector<std::string>& names = {});

// Same graph with a different feature matrix.
Graph with_features(const Graph& g, const std::vector<std::vector<double>>& features,
                    const std::vector<std::string>& names);

enum class SizeMetric { EdgesPlusNodes, EdgesOnly, NodesOnly, EdgesNodesFeatures };

const char* size_metric_name(SizeMetric m);
SizeMetric parse_size_metric(const std::string& s);

struct SubgraphMask {
  std::vector<bool> nodes;
  std::vector<bool> edges;
  // Present only in feature-masking mode: n*d entries, row-major, true = kept.
  std::vector<bool> features;
  bool feature_mode = false;

  static SubgraphMask empty(const Graph& g, bool feature_mode = false);
  static SubgraphMask full(const Graph& g, bool feature_mode = false);
  // Edges given by host index plus their endpoints.
  static SubgraphMask from_edges(const Graph& g, const std::vector<int>& edge_ids);

  int node_count() const;
  int edge_count() const;
  std::vector<int> node_list() const;
  std::vector<int> edge_list() const;
  bool subset_of(const SubgraphMask& other) const;

  friend bool operator==(const SubgraphMask&, const SubgraphMask&) = default;
  friend bool operator<(const SubgraphMask& a, const SubgraphMask& b) {
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    if (a.edges != b.edges) return a.edges < b.edges;
    return a.features < b.features;
  }
};

bool is_valid_mask(const Graph& g, const SubgraphMask& m);
void check_mask(const Graph& g, const SubgraphMask& m);  // throws InvalidMask
int mask_size(const Graph& g, const SubgraphMask& m, SizeMetric metric);

struct MaskedGraph {
  Graph graph;
  std::vector<int> retained;  // new id -> host id
};

MaskedGraph apply_mask(const Graph& g, const SubgraphMask& m);

std::vector<SubgraphMask> lattice_children(const Graph& g, const SubgraphMask& m);
std::vector<SubgraphMask> lattice_parents(const Graph& g, const SubgraphMask& m);

bool has_cycle(const Graph& g);
int count_components(const Graph& g);
std::vector<int> component_ids(const Graph& g);

// FNV-1a over the canonical JSONL form.
std::uint64_t graph_digest(const Graph& g);

}  // namespace xte
