#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "xte/explain.hpp"

namespace xte {

enum class PerturbMode { Exhaustive, MonteCarlo };
enum class Region { Explanation, Complement };

struct PerturbConfig {
  PerturbMode mode = PerturbMode::Exhaustive;
  int samples = 1000;
  std::uint64_t seed = 0;
  double budget_fraction = 0.05;   // MonteCarlo: ceil(b * |E|) edges per sample
  bool include_node_removals = true;
  int cap = 24;                    // Exhaustive: lattice cap on the host

  static PerturbConfig exhaustive(bool node_removals = true);
  static PerturbConfig monte_carlo(int samples, std::uint64_t seed, double b);
  void validate() const;
};

struct FaithReport {
  double suf = 1.0;
  double nec = 0.0;
  double faith = 0.0;
  double delta_rate_complement = 0.0;
  double delta_rate_explanation = 0.0;
  std::size_t complement_perturbations = 0;
  std::size_t explanation_perturbations = 0;
  PerturbConfig config;
};

// Perturbed graphs of the target region. Exhaustive: every valid mask reached
// by deleting a non-empty set of region elements (edges, and with node removals
// also region nodes whose edges are all gone). MonteCarlo: cfg.samples graphs,
// each with ceil(b*|E|) region edges removed and newly isolated nodes dropped.
// Throws EmptyRegion when nothing in the region can be removed.
std::vector<Graph> perturbations_of(const Graph& g, const SubgraphMask& m, Region region, const PerturbConfig& cfg);

// Exhaustive perturbations as lattice keys (valid masks of the host).
std::vector<Lattice::Key> exhaustive_perturbation_keys(const Lattice& lat, Lattice::Key m, Region region,
                                                       bool include_node_removals);

// Mean of Delta over the region's perturbations; 0 for an empty region.
double delta_rate(const Graph& g, const SubgraphMask& m, Region region, const Classifier& c, const PerturbConfig& cfg);
// Same, Exhaustive only, reusing the context's memoized mask labels.
double delta_rate(ExplainContext& ctx, Lattice::Key m, Region region, bool include_node_removals);

double suf(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg);
double nec(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg);
FaithReport faith(const Graph& g, const SubgraphMask& m, const Classifier& c, const PerturbConfig& cfg);
FaithReport faith(ExplainContext& ctx, Lattice::Key m, bool include_node_removals = true);

double harmonic_mean(double a, double b);

SubgraphMask topk_explanation(const std::vector<double>& edge_scores, const Graph& g, double k);

struct FaithRatio {
  double ratio = 0.0;
  bool degenerate = false;  // Faith(original) == 0; ratio is +inf
  double faith_original = 0.0;
  double faith_shuffled = 0.0;
};

FaithRatio faith_ratio(const Graph& g, const std::vector<double>& edge_scores, const Classifier& c,
                       const std::vector<double>& ks, const std::vector<double>& bs, std::uint64_t seed,
                       int samples = 200);

// Props 5.3 / 5.4 over an exhaustive corpus (Exhaustive mode, node removals on):
// for every label-preserving mask m, Suf(m) = 1 iff m contains a PI, and
// Nec(m) > 0 iff m intersects every PI. The intersection is taken over the
// elements of m that a deletion inside m can remove (Lattice::removable): a
// node of m with an edge outside m is not part of it.
struct SufNecReport {
  std::string classifier;
  int max_nodes = 0;
  std::size_t graphs = 0;
  std::size_t masks_checked = 0;
  std::size_t suf_violations = 0;
  std::size_t nec_violations = 0;
  std::optional<Counterexample> suf_counterexample, nec_counterexample;
  bool pass() const { return suf_violations == 0 && nec_violations == 0; }
};

SufNecReport verify_suf_nec(const Classifier& c, const CorpusOptions& corpus, VerifyOptions opts = {});

// Thm 5.2 instances: positive graphs of the classifier with at least `min_edges`
// edges; every single-edge TE must have Nec = 0 and Faith = 0.
struct ZeroFaithReport {
  std::string classifier;
  int max_nodes = 0;
  std::size_t instances = 0;
  std::size_t explanations_checked = 0;
  std::size_t violations = 0;
  std::optional<Counterexample> counterexample;
  bool pass() const { return violations == 0 && explanations_checked > 0; }
};

ZeroFaithReport verify_zero_faith(const Classifier& c, const CorpusOptions& corpus, int min_edges = 2,
                                  VerifyOptions opts = {});

}  // namespace xte
