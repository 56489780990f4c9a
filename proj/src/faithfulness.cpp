#include "xte/faithfulness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xte/rng.hpp"

namespace xte {

PerturbConfig PerturbConfig::exhaustive(bool node_removals) {
  PerturbConfig c;
  c.mode = PerturbMode::Exhaustive;
  c.include_node_removals = node_removals;
  return c;
}

PerturbConfig PerturbConfig::monte_carlo(int samples, std::uint64_t seed, double b) {
  PerturbConfig c;
  c.mode = PerturbMode::MonteCarlo;
  c.samples = samples;
  c.seed = seed;
  c.budget_fraction = b;
  c.include_node_removals = false;
  return c;
}

void PerturbConfig::validate() const {
  if (mode == PerturbMode::MonteCarlo) {
    if (samples < 1) throw Error(ErrorCode::BadParams, "samples must be >= 1");
    if (!(budget_fraction > 0.0 && budget_fraction <= 1.0))
      throw Error(ErrorCode::BadParams, "budget fraction b must be in (0,1]");
  }
}

std::vector<Lattice::Key> exhaustive_perturbation_keys(const Lattice& lat, Lattice::Key m, Region region,
                                                       bool include_node_removals) {
  using Key = Lattice::Key;
  const Key full = lat.full_key();
  Key deletable;
  if (region == Region::Complement)
    deletable = include_node_removals ? (full & ~m) : (lat.edge_bits() & ~m);
  else
    deletable = include_node_removals ? lat.removable(m) : (m & lat.edge_bits());
  std::vector<Key> out;
  for (Key s = deletable; s != 0; s = (s - 1) & deletable) {
    Key k = full & ~s;
    if (lat.is_valid(k)) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<int> region_edges(const Graph& g, const SubgraphMask& m, Region region) {
  std::vector<int> out;
  for (int e = 0; e < g.num_edges(); ++e)
    if (m.edges[e] == (region == Region::Explanation)) out.push_back(e);
  return out;
}

// One Monte-Carlo perturbation: delete `k` region edges, drop nodes they isolate.
SubgraphMask mc_sample(const Graph& g, const std::vector<int>& region, int k, Rng& rng) {
  std::vector<int> pool = region;
  for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  SubgraphMask out = SubgraphMask::full(g);
  for (int i = 0; i < k; ++i) out.edges[pool[i]] = false;
  std::vector<int> before = g.degrees(), after(g.num_nodes(), 0);
  for (int e = 0; e < g.num_edges(); ++e)
    if (out.edges[e]) {
      ++after[g.edges()[e].u];
      ++after[g.edges()[e].v];
    }
  for (int v = 0; v < g.num_nodes(); ++v)
    if (before[v] > 0 && after[v] == 0) out.nodes[v] = false;
  return out;
}

int mc_budget(const Graph& g, double b, size_t region_size) {
  int k = static_cast<int>(std::ceil(b * g.num_edges() - 1e-9));
  k = std::max(k, 1);
  return std::min<int>(k, static_cast<int>(region_size));
}

}  // namespace

std::vector<Graph> perturbations_of(const Graph& g, const SubgraphMask& m, Region region, const PerturbConfig& cfg) {
  check_mask(g, m);
  cfg.validate();
  std::vector<Graph> out;
  if (cfg.mode == PerturbMode::Exhaustive) {
    Lattice lat(g, LatticeOptions{false, cfg.cap});
    auto keys = exhaustive_perturbation_keys(lat, lat.to_key(m), region, cfg.include_node_removals);
    if (keys.empty()) throw Error(ErrorCode::EmptyRegion, "target region has no removable elements");
    for (auto k : keys) out.push_back(apply_mask(g, lat.to_mask(k)).graph);
    return out;
  }
  auto edges = region_edges(g, m, region);
  if (edges.empty()) throw Error(ErrorCode::EmptyRegion, "target region has no edges");
  const int k = mc_budget(g, cfg.budget_fraction, edges.size());
  for (int s = 0; s < cfg.samples; ++s) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    out.push_back(apply_mask(g, mc_sample(g, edges, k, rng)).graph);
  }
  return out;
}

double delta_rate(ExplainContext& ctx, Lattice::Key m, Region region, bool include_node_removals) {
  auto keys = exhaustive_perturbation_keys(ctx.lattice(), m, region, include_node_removals);
  if (keys.empty()) return 0.0;
  size_t flips = 0;
  for (auto k : keys) flips += !ctx.preserves(k);
  return static_cast<double>(flips) / static_cast<double>(keys.size());
}

double delta_rate(const Graph& g, const SubgraphMask& m, Region region, const Classifier& c,
                  const PerturbConfig& cfg) {
  check_mask(g, m);
  cfg.validate();
  const int y = c(g);
  if (cfg.mode == PerturbMode::Exhaustive) {
    ExplainContext ctx(g, c, LatticeOptions{false, cfg.cap});
    return delta_rate(ctx, ctx.lattice().to_key(m), region, cfg.include_node_removals);
  }
  auto edges = region_edges(g, m, region);
  if (edges.empty()) return 0.0;
  const int k = mc_budget(g, cfg.budget_fraction, edges.size());
  size_t flips = 0;
  for (int s = 0; s < cfg.samples; ++s) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    flips += c(apply_mask(g, mc_sample(g, edges, k, rng)).graph) != y;
  }
  return static_cast<double>(flips) / cfg.samples;
}

double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double suf(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg) {
  return std::exp(-delta_rate(g, m, Region::Complement, c, cfg));
}

double nec(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg) {
  return 1.0 - std::exp(-delta_rate(g, m, Region::Explanation, c, cfg));
}

namespace {
FaithReport assemble(double rate_c, double rate_r, const PerturbConfig& cfg) {
  FaithReport r;
  r.delta_rate_complement = rate_c;
  r.delta_rate_explanation = rate_r;
  r.suf = std::exp(-rate_c);
  r.nec = 1.0 - std::exp(-rate_r);
  r.faith = harmonic_mean(r.suf, r.nec);
  r.config = cfg;
  return r;
}
}  // namespace

FaithReport faith(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg) {
  check_mask(g, m);
  cfg.validate();
  if (cfg.mode == PerturbMode::Exhaustive) {
    ExplainContext ctx(g, c, LatticeOptions{false, cfg.cap});
    auto r = faith(ctx, ctx.lattice().to_key(m), cfg.include_node_removals);
    r.config = cfg;
    return r;
  }
  auto r = assemble(delta_rate(g, m, Region::Complement, c, cfg), delta_rate(g, m, Region::Explanation, c, cfg), cfg);
  r.complement_perturbations = region_edges(g, m, Region::Complement).empty() ? 0 : cfg.samples;
  r.explanation_perturbations = region_edges(g, m, Region::Explanation).empty() ? 0 : cfg.samples;
  return r;
}

FaithReport faith(ExplainContext& ctx, Lattice::Key m, bool include_node_removals) {
  auto r = assemble(delta_rate(ctx, m, Region::Complement, include_node_removals),
                    delta_rate(ctx, m, Region::Explanation, include_node_removals),
                    PerturbConfig::exhaustive(include_node_removals));
  r.complement_perturbations =
      exhaustive_perturbation_keys(ctx.lattice(), m, Region::Complement, include_node_removals).size();
  r.explanation_perturbations =
      exhaustive_perturbation_keys(ctx.lattice(), m, Region::Explanation, include_node_removals).size();
  return r;
}

SubgraphMask topk_explanation(const std::vector<double>& edge_scores, const Graph& g, double k) {
  if (static_cast<int>(edge_scores.size()) != g.num_edges())
    throw Error(ErrorCode::BadParams, "expected one score per edge (" + std::to_string(g.num_edges()) + "), got " +
                                          std::to_string(edge_scores.size()));
  if (!(k > 0.0 && k <= 1.0)) throw Error(ErrorCode::BadParams, "k must be in (0,1]");
  int keep = static_cast<int>(std::ceil(k * g.num_edges() - 1e-9));
  keep = std::clamp(keep, 0, g.num_edges());
  std::vector<int> order(g.num_edges());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return edge_scores[a] > edge_scores[b]; });
  order.resize(keep);
  return SubgraphMask::from_edges(g, order);
}

FaithRatio faith_ratio(const Graph& g, const std::vector<double>& edge_scores, const Classifier& c,
                       const std::vector<double>& ks, const std::vector<double>& bs, std::uint64_t seed, int samples) {
  if (ks.empty() || bs.empty()) throw Error(ErrorCode::BadParams, "faith_ratio needs at least one k and one b");
  std::vector<double> shuffled = edge_scores;
  Rng rng(derive_seed(seed, 0xFA17));
  rng.shuffle(shuffled);
  auto score = [&](const std::vector<double>& scores) {
    double total = 0.0;
    for (size_t bi = 0; bi < bs.size(); ++bi) {
      auto cfg = PerturbConfig::monte_carlo(samples, derive_seed(seed, bi + 1), bs[bi]);
      double best = 0.0;
      for (double k : ks) best = std::max(best, faith(g, topk_explanation(scores, g, k), c, cfg).faith);
      total += best;
    }
    return total / static_cast<double>(bs.size());
  };
  FaithRatio r;
  r.faith_original = score(edge_scores);
  r.faith_shuffled = score(shuffled);
  if (r.faith_original == 0.0) {
    r.degenerate = true;
    r.ratio = std::numeric_limits<double>::infinity();
  } else {
    r.ratio = r.faith_shuffled / r.faith_original;
  }
  return r;
}

SufNecReport verify_suf_nec(const Classifier& c, const CorpusOptions& corpus, VerifyOptions opts) {
  SufNecReport rep;
  rep.classifier = c.name();
  rep.max_nodes = corpus.max_nodes;
  auto graphs = exhaustive_corpus(corpus);
  rep.graphs = graphs.size();
  struct Item {
    std::size_t checked = 0, suf_bad = 0, nec_bad = 0;
    std::optional<Lattice::Key> suf_key, nec_key;
    std::string suf_note, nec_note;
  };
  std::vector<Item> items(graphs.size());
  parallel_for(graphs.size(), opts.threads, [&](size_t i) {
    ExplainContext ctx(graphs[i], c, opts.lattice);
    const Lattice& lat = ctx.lattice();
    std::vector<Lattice::Key> pis;
    for (auto& m : pi_explanations(ctx, opts.pi).masks) pis.push_back(lat.to_key(m));
    auto& it = items[i];
    for (Lattice::Key m : ctx.keys_by_rank()) {
      if (!ctx.preserves(m)) continue;
      ++it.checked;
      FaithReport f = faith(ctx, m, true);
      // Only the part of m that a deletion confined to m can reach counts as
      // an intersection; nodes pinned by complement edges cannot be removed.
      const Lattice::Key reach = lat.removable(m);
      bool contains = false, hits_all = true;
      for (auto p : pis) {
        contains = contains || (p & ~m) == 0;
        hits_all = hits_all && (p & reach) != 0;
      }
      if ((f.suf == 1.0) != contains) {
        ++it.suf_bad;
        if (!it.suf_key) {
          it.suf_key = m;
          it.suf_note = "Suf = " + std::to_string(f.suf) + (contains ? " but mask contains a PI" : " but mask contains no PI");
        }
      }
      if ((f.nec > 0.0) != hits_all) {
        ++it.nec_bad;
        if (!it.nec_key) {
          it.nec_key = m;
          it.nec_note = "Nec = " + std::to_string(f.nec) +
                        (hits_all ? " but mask reaches every PI" : " but mask misses some PI");
        }
      }
    }
  });
  for (size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    rep.masks_checked += it.checked;
    rep.suf_violations += it.suf_bad;
    rep.nec_violations += it.nec_bad;
    Lattice lat(graphs[i], opts.lattice);
    if (it.suf_key && !rep.suf_counterexample)
      rep.suf_counterexample = Counterexample{graphs[i], lat.to_mask(*it.suf_key), it.suf_note};
    if (it.nec_key && !rep.nec_counterexample)
      rep.nec_counterexample = Counterexample{graphs[i], lat.to_mask(*it.nec_key), it.nec_note};
  }
  return rep;
}

ZeroFaithReport verify_zero_faith(const Classifier& c, const CorpusOptions& corpus, int min_edges,
                                  VerifyOptions opts) {
  ZeroFaithReport rep;
  rep.classifier = c.name();
  rep.max_nodes = corpus.max_nodes;
  auto graphs = exhaustive_corpus(corpus);
  struct Item {
    bool instance = false;
    std::size_t checked = 0, bad = 0;
    std::optional<SubgraphMask> witness;
    std::string note;
  };
  std::vector<Item> items(graphs.size());
  parallel_for(graphs.size(), opts.threads, [&](size_t i) {
    if (graphs[i].num_edges() < min_edges) return;
    ExplainContext ctx(graphs[i], c, opts.lattice);
    if (ctx.label() != 1) return;
    auto& it = items[i];
    it.instance = true;
    for (auto& m : trivial_explanations(ctx).masks) {
      if (m.edge_count() != 1) continue;
      ++it.checked;
      FaithReport f = faith(ctx, ctx.lattice().to_key(m), true);
      if (f.nec != 0.0 || f.faith != 0.0) {
        ++it.bad;
        if (!it.witness) {
          it.witness = m;
          it.note = "single-edge TE with Nec = " + std::to_string(f.nec) + ", Faith = " + std::to_string(f.faith);
        }
      }
    }
  });
  for (size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    rep.instances += it.instance;
    rep.explanations_checked += it.checked;
    rep.violations += it.bad;
    if (it.witness && !rep.counterexample) rep.counterexample = Counterexample{graphs[i], *it.witness, it.note};
  }
  return rep;
}

}  // namespace xte
