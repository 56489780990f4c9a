#pragma once

#include <cstdint>
#include <vector>

#include "xte/graph.hpp"

namespace xte {

struct LatticeOptions {
  bool feature_masking = false;
  int cap = 24;  // max number of lattice elements (nodes + edges [+ nonzero features])
};

// Bit-encoded view of the subgraph lattice of one host graph. Bits are laid
// out nodes first, then edges (host order), then nonzero feature entries.
class Lattice {
 public:
  using Key = std::uint64_t;

  Lattice(const Graph& g, LatticeOptions opts = {});

  const Graph& graph() const { return *g_; }
  const LatticeOptions& options() const { return opts_; }
  int element_count() const { return n_ + m_ + f_; }
  Key full_key() const { return full_; }
  Key node_bits() const { return node_bits_; }
  Key edge_bits() const { return edge_bits_; }

  Key node_bit(int v) const { return Key{1} << v; }
  Key edge_bit(int e) const { return Key{1} << (n_ + e); }

  bool is_valid(Key k) const;
  int size(Key k, SizeMetric metric) const;
  int rank(Key k) const;  // number of elements; the lattice grading

  std::vector<Key> children(Key k) const;
  std::vector<Key> parents(Key k) const;
  // Elements of k that a deletion confined to k can remove: its edges, plus
  // nodes not incident to any edge outside k (and their feature entries).
  Key removable(Key k) const;

  SubgraphMask to_mask(Key k) const;
  Key to_key(const SubgraphMask& m) const;

  // Every valid key, sorted by (size under metric, key).
  std::vector<Key> all_keys(SizeMetric metric) const;

 private:
  const Graph* g_;
  LatticeOptions opts_;
  int n_, m_, f_;
  Key full_ = 0, node_bits_ = 0, edge_bits_ = 0;
  std::vector<Key> incident_;      // per node: edge bits touching it
  std::vector<Key> node_feats_;    // per node: feature bits
  std::vector<Key> endpoints_;     // per edge: node bits
  std::vector<int> feat_node_;     // per feature element: owning node
  std::vector<int> feat_entry_;    // per feature element: node*d + k
};

// Ordered enumeration of all valid masks; see Lattice::all_keys.
std::vector<SubgraphMask> enumerate_masks_by_size(const Graph& g, SizeMetric metric = SizeMetric::EdgesPlusNodes,
                                                  int max_size = -1, LatticeOptions opts = {});

}  // namespace xte
