#include "xte/lattice.hpp"

#include <algorithm>
#include <bit>

namespace xte {

Lattice::Lattice(const Graph& g, LatticeOptions opts) : g_(&g), opts_(opts) {
  n_ = g.num_nodes();
  m_ = g.num_edges();
  const int d = g.feature_dim();
  f_ = 0;
  if (opts.feature_masking) {
    for (int v = 0; v < n_; ++v)
      for (int k = 0; k < d; ++k)
        if (g.feature(v, k) != 0.0) {
          feat_node_.push_back(v);
          feat_entry_.push_back(v * d + k);
          ++f_;
        }
  }
  const int total = n_ + m_ + f_;
  if (total > opts.cap || total > 63)
    throw Error(ErrorCode::TooLarge, "lattice has " + std::to_string(total) + " elements, cap is " +
                                         std::to_string(std::min(opts.cap, 63)));
  full_ = total == 0 ? 0 : (Key{1} << total) - 1;
  node_bits_ = n_ == 0 ? 0 : (Key{1} << n_) - 1;
  edge_bits_ = m_ == 0 ? 0 : ((Key{1} << m_) - 1) << n_;
  incident_.assign(n_, 0);
  node_feats_.assign(n_, 0);
  endpoints_.assign(m_, 0);
  for (int e = 0; e < m_; ++e) {
    const Edge& ed = g.edges()[e];
    incident_[ed.u] |= edge_bit(e);
    incident_[ed.v] |= edge_bit(e);
    endpoints_[e] = node_bit(ed.u) | node_bit(ed.v);
  }
  for (int i = 0; i < f_; ++i) node_feats_[feat_node_[i]] |= Key{1} << (n_ + m_ + i);
}

bool Lattice::is_valid(Key k) const {
  if (k & ~full_) return false;
  for (int e = 0; e < m_; ++e)
    if ((k & edge_bit(e)) && (k & endpoints_[e]) != endpoints_[e]) return false;
  for (int i = 0; i < f_; ++i)
    if ((k >> (n_ + m_ + i) & 1) && !(k & node_bit(feat_node_[i]))) return false;
  return true;
}

int Lattice::rank(Key k) const { return std::popcount(k); }

int Lattice::size(Key k, SizeMetric metric) const {
  const int nodes = std::popcount(k & node_bits_);
  const int edges = std::popcount(k & edge_bits_);
  switch (metric) {
    case SizeMetric::EdgesPlusNodes: return nodes + edges;
    case SizeMetric::EdgesOnly: return edges;
    case SizeMetric::NodesOnly: return nodes;
    case SizeMetric::EdgesNodesFeatures: {
      if (opts_.feature_masking) return std::popcount(k);
      int feats = 0;
      const int d = g_->feature_dim();
      for (int v = 0; v < n_; ++v)
        if (k & node_bit(v))
          for (int j = 0; j < d; ++j) feats += g_->feature(v, j) != 0.0;
      return nodes + edges + feats;
    }
  }
  return 0;
}

std::vector<Lattice::Key> Lattice::children(Key k) const {
  std::vector<Key> out;
  for (int e = 0; e < m_; ++e)
    if (k & edge_bit(e)) out.push_back(k & ~edge_bit(e));
  for (int v = 0; v < n_; ++v)
    if ((k & node_bit(v)) && !(k & incident_[v]) && !(k & node_feats_[v])) out.push_back(k & ~node_bit(v));
  for (int i = 0; i < f_; ++i) {
    Key b = Key{1} << (n_ + m_ + i);
    if (k & b) out.push_back(k & ~b);
  }
  return out;
}

std::vector<Lattice::Key> Lattice::parents(Key k) const {
  std::vector<Key> out;
  for (int v = 0; v < n_; ++v)
    if (!(k & node_bit(v))) out.push_back(k | node_bit(v));
  for (int e = 0; e < m_; ++e)
    if (!(k & edge_bit(e)) && (k & endpoints_[e]) == endpoints_[e]) out.push_back(k | edge_bit(e));
  for (int i = 0; i < f_; ++i) {
    Key b = Key{1} << (n_ + m_ + i);
    if (!(k & b) && (k & node_bit(feat_node_[i]))) out.push_back(k | b);
  }
  return out;
}

Lattice::Key Lattice::removable(Key k) const {
  Key out = k & edge_bits_;
  const Key outside_edges = edge_bits_ & ~k;
  for (int v = 0; v < n_; ++v)
    if ((k & node_bit(v)) && !(incident_[v] & outside_edges)) out |= node_bit(v) | (k & node_feats_[v]);
  for (int i = 0; i < f_; ++i) out |= k & (Key{1} << (n_ + m_ + i));
  return out;
}

SubgraphMask Lattice::to_mask(Key k) const {
  SubgraphMask m = SubgraphMask::empty(*g_, opts_.feature_masking);
  for (int v = 0; v < n_; ++v) m.nodes[v] = k & node_bit(v);
  for (int e = 0; e < m_; ++e) m.edges[e] = k & edge_bit(e);
  if (opts_.feature_masking) {
    // Zero feature entries are not lattice elements; they follow their node.
    const int d = g_->feature_dim();
    for (int v = 0; v < n_; ++v)
      for (int j = 0; j < d; ++j) m.features[static_cast<size_t>(v) * d + j] = m.nodes[v] && g_->feature(v, j) == 0.0;
    for (int i = 0; i < f_; ++i) m.features[feat_entry_[i]] = (k >> (n_ + m_ + i)) & 1;
  }
  return m;
}

Lattice::Key Lattice::to_key(const SubgraphMask& m) const {
  check_mask(*g_, m);
  Key k = 0;
  for (int v = 0; v < n_; ++v)
    if (m.nodes[v]) k |= node_bit(v);
  for (int e = 0; e < m_; ++e)
    if (m.edges[e]) k |= edge_bit(e);
  for (int i = 0; i < f_; ++i) {
    bool kept = m.feature_mode ? static_cast<bool>(m.features[feat_entry_[i]]) : m.nodes[feat_node_[i]];
    if (kept) k |= Key{1} << (n_ + m_ + i);
  }
  return k;
}

std::vector<Lattice::Key> Lattice::all_keys(SizeMetric metric) const {
  std::vector<Key> keys;
  for (Key s = 0; s <= node_bits_; ++s) {
    Key induced = 0, feats = 0;
    for (int e = 0; e < m_; ++e)
      if ((s & endpoints_[e]) == endpoints_[e]) induced |= edge_bit(e);
    for (int v = 0; v < n_; ++v)
      if (s & node_bit(v)) feats |= node_feats_[v];
    const Key free = induced | feats;
    // Iterate all subsets of `free` (standard submask walk).
    Key sub = free;
    while (true) {
      keys.push_back(s | sub);
      if (sub == 0) break;
      sub = (sub - 1) & free;
    }
    if (node_bits_ == 0) break;
  }
  std::vector<std::pair<int, Key>> tagged;
  tagged.reserve(keys.size());
  for (Key k : keys) tagged.emplace_back(size(k, metric), k);
  std::sort(tagged.begin(), tagged.end());
  for (size_t i = 0; i < keys.size(); ++i) keys[i] = tagged[i].second;
  return keys;
}

std::vector<SubgraphMask> enumerate_masks_by_size(const Graph& g, SizeMetric metric, int max_size, LatticeOptions opts) {
  Lattice lat(g, opts);
  std::vector<SubgraphMask> out;
  for (auto k : lat.all_keys(metric)) {
    if (max_size >= 0 && lat.size(k, metric) > max_size) break;
    out.push_back(lat.to_mask(k));
  }
  return out;
}

}  // namespace xte
