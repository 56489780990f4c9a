#include "xte/explain.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <map>
#include <set>
#include <mutex>
#include <thread>

namespace xte {

ExplainContext::ExplainContext(const Graph& g, Classifier c, LatticeOptions opts)
    : g_(g), lat_(g_, opts), c_(std::move(c)) {
  label_ = c_(g_);
  memo_[lat_.full_key()] = label_;
}

int ExplainContext::label_of(Lattice::Key k) {
  auto it = memo_.find(k);
  if (it != memo_.end()) return it->second;
  int y = c_(apply_mask(g_, lat_.to_mask(k)).graph);
  memo_.emplace(k, y);
  return y;
}

const std::vector<Lattice::Key>& ExplainContext::keys_by_rank() {
  if (keys_.empty()) {
    keys_ = lat_.all_keys(SizeMetric::EdgesPlusNodes);
    std::stable_sort(keys_.begin(), keys_.end(), [&](auto a, auto b) { return lat_.rank(a) > lat_.rank(b); });
    for (size_t i = 0; i < keys_.size(); ++i) pos_[keys_[i]] = static_cast<int>(i);
  }
  return keys_;
}

const std::vector<char>& ExplainContext::robust_table() {
  if (robust_done_) return robust_;
  const auto& keys = keys_by_rank();
  robust_.assign(keys.size(), 0);
  // Top-down: parents have rank + 1 and are therefore already decided.
  for (size_t i = 0; i < keys.size(); ++i) {
    Lattice::Key k = keys[i];
    bool ok = preserves(k);
    if (ok)
      for (auto p : lat_.parents(k))
        if (!robust_[pos_.at(p)]) {
          ok = false;
          break;
        }
    robust_[i] = ok;
  }
  robust_done_ = true;
  return robust_;
}

bool ExplainContext::is_robust(Lattice::Key k) {
  robust_table();
  return robust_[pos_.at(k)] != 0;
}

namespace {
ExplanationSet finish(ExplainContext& ctx, ExplanationKind kind, const std::vector<Lattice::Key>& keys) {
  ExplanationSet s;
  s.kind = kind;
  s.label = ctx.label();
  s.host_digest = graph_digest(ctx.graph());
  for (auto k : keys) s.masks.push_back(ctx.lattice().to_mask(k));
  std::sort(s.masks.begin(), s.masks.end());
  return s;
}
}  // namespace

ExplanationSet trivial_explanations(ExplainContext& ctx, SizeMetric metric) {
  const auto& lat = ctx.lattice();
  const bool host_empty = lat.full_key() == 0;
  std::vector<Lattice::Key> hits;
  int hit_size = -1;
  for (auto k : lat.all_keys(metric)) {
    int s = lat.size(k, metric);
    if (hit_size >= 0 && s > hit_size) break;
    if (k == 0 && !host_empty) continue;  // explanations are non-empty subgraphs
    if (ctx.preserves(k)) {
      hits.push_back(k);
      hit_size = s;
    }
  }
  auto out = finish(ctx, ExplanationKind::TE, hits);
  out.metric = metric;
  out.size = hit_size;
  return out;
}

std::vector<Lattice::Key> robust_keys(ExplainContext& ctx) {
  const auto& table = ctx.robust_table();
  const auto& keys = ctx.keys_by_rank();
  std::vector<Lattice::Key> out;
  for (size_t i = 0; i < keys.size(); ++i)
    if (table[i]) out.push_back(keys[i]);
  std::sort(out.begin(), out.end());
  return out;
}

ExplanationSet pi_explanations(ExplainContext& ctx, PiOptions opts) {
  const auto& lat = ctx.lattice();
  std::vector<Lattice::Key> hits;
  if (opts.skip_robustness) {
    const bool host_empty = lat.full_key() == 0;
    for (auto k : ctx.keys_by_rank()) {
      if ((k == 0 && !host_empty) || !ctx.preserves(k)) continue;
      bool minimal = true;
      for (auto c : lat.children(k))
        if (c != 0 && ctx.preserves(c)) minimal = false;
      if (minimal) hits.push_back(k);
    }
  } else {
    // Robustness is upward closed, so a robust mask is minimal iff no child is robust.
    for (auto k : robust_keys(ctx)) {
      bool minimal = true;
      for (auto c : lat.children(k))
        if (ctx.is_robust(c)) {
          minimal = false;
          break;
        }
      if (minimal) hits.push_back(k);
    }
  }
  return finish(ctx, ExplanationKind::PI, hits);
}

ExplanationSet trivial_explanations(const Graph& g, const Classifier& c, SizeMetric metric, LatticeOptions opts) {
  ExplainContext ctx(g, c, opts);
  return trivial_explanations(ctx, metric);
}

std::vector<SubgraphMask> robust_set(const Graph& g, const Classifier& c, LatticeOptions opts) {
  ExplainContext ctx(g, c, opts);
  std::vector<SubgraphMask> out;
  for (auto k : robust_keys(ctx)) out.push_back(ctx.lattice().to_mask(k));
  std::sort(out.begin(), out.end());
  return out;
}

ExplanationSet pi_explanations(const Graph& g, const Classifier& c, LatticeOptions opts, PiOptions pi) {
  ExplainContext ctx(g, c, opts);
  return pi_explanations(ctx, pi);
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = count;
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

CorpusOptions corpus_for(const std::vector<const ClassifierAst*>& cs, int max_nodes) {
  std::set<std::string> colors;
  for (auto* c : cs)
    if (c)
      for (auto& col : referenced_colors(*c)) colors.insert(col);
  CorpusOptions o;
  o.max_nodes = max_nodes;
  o.palette.assign(colors.begin(), colors.end());
  return o;
}

std::vector<Graph> exhaustive_corpus(const CorpusOptions& opts) {
  if (opts.max_nodes > 6) throw Error(ErrorCode::TooLarge, "exhaustive corpus limited to 6 nodes");
  const int d = static_cast<int>(opts.palette.size());
  const int choices = d + (opts.include_uncolored || d == 0 ? 1 : 0);
  std::vector<Graph> out;
  for (int n = 0; n <= opts.max_nodes; ++n) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    long colorings = 1;
    for (int i = 0; i < n; ++i) colorings *= choices;
    for (std::uint64_t es = 0; es < (std::uint64_t{1} << pairs.size()); ++es) {
      std::vector<std::pair<int, int>> edges;
      for (size_t p = 0; p < pairs.size(); ++p)
        if (es >> p & 1) edges.push_back(pairs[p]);
      for (long col = 0; col < colorings; ++col) {
        std::vector<std::vector<double>> x;
        if (d > 0) {
          long rest = col;
          for (int v = 0; v < n; ++v) {
            int c = static_cast<int>(rest % choices);
            rest /= choices;
            std::vector<double> row(d, 0.0);
            if (c < d) row[c] = 1.0;
            x.push_back(std::move(row));
          }
        }
        out.push_back(build_graph(n, edges, x, opts.palette));
      }
    }
  }
  return out;
}

namespace {

std::string canonical(const Graph& g) {
  std::string s = std::to_string(g.num_nodes()) + "|";
  for (auto& e : g.edges()) s += std::to_string(e.u) + "-" + std::to_string(e.v) + ",";
  s += "|";
  for (int v = 0; v < g.num_nodes(); ++v) s += std::to_string(g.color_of(v)) + ",";
  return s;
}

struct TePiItem {
  int label = 0;
  bool positive = false;
  size_t te_count = 0;
  std::optional<SubgraphMask> thm41_bad;
  std::vector<std::pair<std::string, SubgraphMask>> te_graphs;
  std::vector<std::string> pi_graphs;
};

}  // namespace

TePiReport verify_te_subset_pi(const Classifier& c, const CorpusOptions& corpus, VerifyOptions opts) {
  TePiReport rep;
  rep.classifier = c.name();
  rep.max_nodes = corpus.max_nodes;
  rep.existential = c.purely_existential();
  rep.thm41_checked = rep.existential;
  auto graphs = exhaustive_corpus(corpus);
  rep.graphs = graphs.size();
  std::vector<TePiItem> items(graphs.size());
  parallel_for(graphs.size(), opts.threads, [&](size_t i) {
    ExplainContext ctx(graphs[i], c, opts.lattice);
    auto te = trivial_explanations(ctx);
    auto pi = pi_explanations(ctx, opts.pi);
    auto& it = items[i];
    it.label = ctx.label();
    it.positive = ctx.label() == 1;
    std::set<SubgraphMask> pis(pi.masks.begin(), pi.masks.end());
    if (rep.existential && it.positive) {
      it.te_count = te.masks.size();
      for (auto& m : te.masks)
        if (!pis.count(m) && !it.thm41_bad) it.thm41_bad = m;
    }
    for (auto& m : te.masks) it.te_graphs.emplace_back(canonical(apply_mask(graphs[i], m).graph), m);
    for (auto& m : pi.masks) it.pi_graphs.push_back(canonical(apply_mask(graphs[i], m).graph));
  });
  std::map<int, std::set<std::string>> pi_union;
  for (auto& it : items)
    for (auto& s : it.pi_graphs) pi_union[it.label].insert(s);
  std::set<int> failed;
  for (size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    if (it.positive) ++rep.positive_instances;
    rep.te_checked += it.te_count;
    if (it.thm41_bad && !rep.thm41_counterexample) {
      rep.thm41_pass = false;
      rep.thm41_counterexample = Counterexample{graphs[i], *it.thm41_bad, "TE of a positive instance is not a PI"};
    }
    for (auto& [s, m] : it.te_graphs) {
      if (pi_union[it.label].count(s)) continue;
      rep.union_pass = false;
      ++rep.union_violations;
      failed.insert(it.label);
      if (!rep.union_counterexample)
        rep.union_counterexample =
            Counterexample{graphs[i], m, "TE subgraph never occurs as a PI for label " + std::to_string(it.label)};
    }
  }
  rep.union_failed_labels.assign(failed.begin(), failed.end());
  return rep;
}

AmbiguityReport verify_te_ambiguity(const Classifier& c1, const Classifier& c2, const CorpusOptions& corpus,
                                    VerifyOptions opts) {
  AmbiguityReport rep;
  rep.c1 = c1.name();
  rep.c2 = c2.name();
  rep.max_nodes = corpus.max_nodes;
  auto graphs = exhaustive_corpus(corpus);
  rep.graphs = graphs.size();
  struct Item {
    bool agree = false, te_eq = false, pi_eq = false;
    std::optional<SubgraphMask> te_diff;
  };
  std::vector<Item> items(graphs.size());
  parallel_for(graphs.size(), opts.threads, [&](size_t i) {
    ExplainContext a(graphs[i], c1, opts.lattice), b(graphs[i], c2, opts.lattice);
    auto& it = items[i];
    it.agree = a.label() == b.label();
    if (!it.agree) return;
    auto te1 = trivial_explanations(a), te2 = trivial_explanations(b);
    it.te_eq = te1.masks == te2.masks;
    if (!it.te_eq) {
      for (auto& m : te1.masks)
        if (std::find(te2.masks.begin(), te2.masks.end(), m) == te2.masks.end()) it.te_diff = m;
      if (!it.te_diff) it.te_diff = te2.masks.empty() ? SubgraphMask::empty(graphs[i]) : te2.masks.front();
    }
    it.pi_eq = pi_explanations(a, opts.pi).masks == pi_explanations(b, opts.pi).masks;
  });
  for (size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    if (!it.agree) continue;
    ++rep.agreeing;
    if (it.te_eq) ++rep.te_equal;
    else {
      rep.te_equal_everywhere = false;
      if (!rep.te_witness) rep.te_witness = Counterexample{graphs[i], *it.te_diff, "TE sets differ"};
    }
    if (!it.pi_eq) {
      ++rep.pi_differences;
      rep.pi_witnesses.push_back(graphs[i]);
    }
  }
  return rep;
}

}  // namespace xte
