#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xte/classifier.hpp"
#include "xte/lattice.hpp"

namespace xte {

enum class ExplanationKind { TE, PI };

struct ExplanationSet {
  ExplanationKind kind = ExplanationKind::TE;
  std::vector<SubgraphMask> masks;  // sorted
  SizeMetric metric = SizeMetric::EdgesPlusNodes;
  int label = 0;
  std::uint64_t host_digest = 0;
  std::optional<int> size;  // TE only: the common minimal size

  friend bool operator==(const ExplanationSet&, const ExplanationSet&) = default;
};

// One (graph, classifier) pair with a memo table of mask labels keyed by
// lattice bits. Shared by TE, robust-set and PI computations.
class ExplainContext {
 public:
  ExplainContext(const Graph& g, Classifier c, LatticeOptions opts = {});
  ExplainContext(const ExplainContext&) = delete;
  ExplainContext& operator=(const ExplainContext&) = delete;

  const Graph& graph() const { return g_; }
  const Lattice& lattice() const { return lat_; }
  const Classifier& classifier() const { return c_; }
  int label() const { return label_; }
  int label_of(Lattice::Key k);
  bool preserves(Lattice::Key k) { return label_of(k) == label_; }

  // Robust keys: every superset up to the full mask keeps the label.
  const std::vector<char>& robust_table();  // indexed by position in keys_by_rank()
  bool is_robust(Lattice::Key k);
  const std::vector<Lattice::Key>& keys_by_rank();

 private:
  Graph g_;
  Lattice lat_;
  Classifier c_;
  int label_;
  std::unordered_map<Lattice::Key, int> memo_;
  std::vector<Lattice::Key> keys_;  // all valid keys by descending rank
  std::unordered_map<Lattice::Key, int> pos_;
  std::vector<char> robust_;
  bool robust_done_ = false;
};

// Minimum-size label-preserving non-empty masks. The empty mask is only
// returned for the empty host graph.
ExplanationSet trivial_explanations(ExplainContext& ctx, SizeMetric metric = SizeMetric::EdgesPlusNodes);
std::vector<Lattice::Key> robust_keys(ExplainContext& ctx);

struct PiOptions {
  // Diagnostic mutant: drop the robustness condition, keeping only one-step
  // minimal non-empty label-preserving masks. Used to check that the
  // verification suites can fail.
  bool skip_robustness = false;
};

ExplanationSet pi_explanations(ExplainContext& ctx, PiOptions opts = {});

ExplanationSet trivial_explanations(const Graph& g, const Classifier& c,
                                    SizeMetric metric = SizeMetric::EdgesPlusNodes, LatticeOptions opts = {});
std::vector<SubgraphMask> robust_set(const Graph& g, const Classifier& c, LatticeOptions opts = {});
ExplanationSet pi_explanations(const Graph& g, const Classifier& c, LatticeOptions opts = {}, PiOptions pi = {});

// ---------------------------------------------------------------------------
// Exhaustive corpora and theorem-instance verification

struct CorpusOptions {
  int max_nodes = 4;
  // Node colors drawn from palette (plus "uncolored" = zero vector when
  // include_uncolored). Empty palette: featureless graphs.
  std::vector<std::string> palette;
  bool include_uncolored = true;
};

// Default palette for a set of classifiers: the colors they mention.
CorpusOptions corpus_for(const std::vector<const ClassifierAst*>& cs, int max_nodes);
// All graphs with up to max_nodes nodes, every edge subset and coloring, in a fixed order.
std::vector<Graph> exhaustive_corpus(const CorpusOptions& opts);

struct Counterexample {
  Graph graph;
  SubgraphMask mask;
  std::string note;
};

struct TePiReport {
  std::string classifier;
  int max_nodes = 0;
  bool existential = false;
  bool thm41_checked = false;  // (a) runs only for purely existential classifiers
  bool thm41_pass = true;
  std::size_t graphs = 0;
  std::size_t positive_instances = 0;
  std::size_t te_checked = 0;
  std::optional<Counterexample> thm41_counterexample;
  // (b) per label: TE union subset of PI union, comparing subgraphs as standalone graphs
  bool union_pass = true;
  std::vector<int> union_failed_labels;
  std::size_t union_violations = 0;
  std::optional<Counterexample> union_counterexample;
  bool pass() const { return thm41_pass && union_pass; }
};

struct AmbiguityReport {
  std::string c1, c2;
  int max_nodes = 0;
  std::size_t graphs = 0;
  std::size_t agreeing = 0;
  std::size_t te_equal = 0;
  bool te_equal_everywhere = true;
  std::optional<Counterexample> te_witness;
  std::size_t pi_differences = 0;
  std::vector<Graph> pi_witnesses;  // all graphs with differing PI sets
  bool pi_difference_found() const { return pi_differences > 0; }
};

struct VerifyOptions {
  int threads = 1;
  PiOptions pi;
  LatticeOptions lattice;
};

TePiReport verify_te_subset_pi(const Classifier& c, const CorpusOptions& corpus, VerifyOptions opts = {});
AmbiguityReport verify_te_ambiguity(const Classifier& c1, const Classifier& c2, const CorpusOptions& corpus,
                                    VerifyOptions opts = {});

// Runs fn(i) for i in [0, count) on `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace xte
