#include "xte/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace xte {

ojson graph_to_json(const Graph& g, std::optional<int> y, const std::vector<std::pair<int, int>>* gt_edges) {
  ojson j;
  j["n"] = g.num_nodes();
  ojson edges = ojson::array();
  for (auto& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  ojson x = ojson::array();
  for (int v = 0; v < g.num_nodes(); ++v) {
    ojson row = ojson::array();
    for (int k = 0; k < g.feature_dim(); ++k) row.push_back(g.feature(v, k));
    x.push_back(std::move(row));
  }
  j["x"] = std::move(x);
  j["names"] = g.feature_names();
  if (y) j["y"] = *y;
  if (gt_edges) {
    ojson gt = ojson::array();
    for (auto [a, b] : *gt_edges) gt.push_back({a, b});
    j["gt_edges"] = std::move(gt);
  }
  return j;
}

namespace {
[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

std::vector<std::pair<int, int>> pairs_from(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) schema(std::string("'") + field + "' must be an array");
  std::vector<std::pair<int, int>> out;
  for (auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      schema(std::string("'") + field + "' entries must be [u,v] integer pairs");
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}
}  // namespace

Record record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) schema("record must be a JSON object");
  for (auto key : {"n", "edges", "x", "names"})
    if (!j.contains(key)) schema(std::string("missing field '") + key + "'");
  if (!j["n"].is_number_integer() || j["n"].get<int>() < 0) schema("'n' must be a non-negative integer");
  const int n = j["n"].get<int>();
  auto edges = pairs_from(j["edges"], "edges");
  if (!j["names"].is_array()) schema("'names' must be an array of strings");
  std::vector<std::string> names;
  for (auto& s : j["names"]) {
    if (!s.is_string()) schema("'names' must be an array of strings");
    names.push_back(s.get<std::string>());
  }
  if (!j["x"].is_array()) schema("'x' must be an array of rows");
  std::vector<std::vector<double>> x;
  for (auto& row : j["x"]) {
    if (!row.is_array()) schema("'x' rows must be arrays");
    std::vector<double> r;
    for (auto& v : row) {
      if (!v.is_number()) schema("'x' entries must be numbers");
      r.push_back(v.get<double>());
    }
    x.push_back(std::move(r));
  }
  if (names.empty()) {
    for (auto& r : x)
      if (!r.empty()) schema("feature rows present but 'names' is empty");
    x.clear();
  }
  if (!x.empty() && static_cast<int>(x.size()) != n) schema("'x' has " + std::to_string(x.size()) + " rows for n=" + std::to_string(n));
  Record r;
  try {
    r.graph = build_graph(n, edges, x, names);
  } catch (const Error& e) {
    schema(std::string(error_code_name(e.code())) + ": " + e.what());
  }
  r.label = -1;
  if (j.contains("y")) {
    if (!j["y"].is_number_integer()) schema("'y' must be an integer");
    r.label = j["y"].get<int>();
  }
  if (j.contains("gt_edges")) {
    r.gt_edges = pairs_from(j["gt_edges"], "gt_edges");
    for (auto [a, b] : r.gt_edges)
      if (r.graph.edge_index(a, b) < 0) schema("'gt_edges' references a missing edge");
  }
  return r;
}

ojson mask_to_json(const Graph& g, const SubgraphMask& m) {
  ojson j;
  j["nodes"] = m.node_list();
  ojson edges = ojson::array();
  for (int e : m.edge_list()) edges.push_back({g.edges()[e].u, g.edges()[e].v});
  j["edges"] = std::move(edges);
  if (m.feature_mode) {
    ojson masked = ojson::array();
    const int d = g.feature_dim();
    for (int v : m.node_list())
      for (int k = 0; k < d; ++k)
        if (!m.features[static_cast<size_t>(v) * d + k] && g.feature(v, k) != 0.0) masked.push_back({v, k});
    j["masked_features"] = std::move(masked);
  }
  return j;
}

SubgraphMask mask_from_json(const Graph& g, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges")) schema("mask needs 'nodes' and 'edges'");
  SubgraphMask m = SubgraphMask::empty(g);
  for (auto& v : j["nodes"]) {
    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= g.num_nodes()) schema("mask node out of range");
    m.nodes[v.get<int>()] = true;
  }
  for (auto [a, b] : pairs_from(j["edges"], "edges")) {
    int e = g.edge_index(a, b);
    if (e < 0) schema("mask edge not in graph");
    m.edges[e] = true;
  }
  check_mask(g, m);
  return m;
}

ojson explanation_to_json(const Graph& g, const ExplanationSet& s) {
  ojson j;
  j["kind"] = s.kind == ExplanationKind::TE ? "TE" : "PI";
  j["label"] = s.label;
  if (s.size) j["size"] = *s.size;
  ojson masks = ojson::array();
  for (auto& m : s.masks) masks.push_back(mask_to_json(g, m));
  j["masks"] = std::move(masks);
  return j;
}

namespace {
ojson number_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}
}  // namespace

ojson faith_report_to_json(const FaithReport& r) {
  ojson j;
  j["suf"] = r.suf;
  j["nec"] = r.nec;
  j["faith"] = r.faith;
  j["delta_rate_complement"] = r.delta_rate_complement;
  j["delta_rate_explanation"] = r.delta_rate_explanation;
  j["complement_perturbations"] = r.complement_perturbations;
  j["explanation_perturbations"] = r.explanation_perturbations;
  ojson cfg;
  cfg["mode"] = r.config.mode == PerturbMode::Exhaustive ? "exhaustive" : "montecarlo";
  if (r.config.mode == PerturbMode::MonteCarlo) {
    cfg["samples"] = r.config.samples;
    cfg["seed"] = r.config.seed;
    cfg["b"] = number_or_string(r.config.budget_fraction);
  }
  cfg["include_node_removals"] = r.config.include_node_removals;
  j["config"] = std::move(cfg);
  return j;
}

namespace {
ojson counterexample_json(const std::optional<Counterexample>& c) {
  if (!c) return nullptr;
  ojson j;
  j["graph"] = graph_to_json(c->graph);
  j["mask"] = mask_to_json(c->graph, c->mask);
  j["note"] = c->note;
  return j;
}
}  // namespace

ojson tepi_report_to_json(const TePiReport& r) {
  ojson j;
  j["suite"] = "te-pi";
  j["classifier"] = r.classifier;
  j["max_nodes"] = r.max_nodes;
  j["graphs"] = r.graphs;
  j["purely_existential"] = r.existential;
  ojson a;
  a["status"] = !r.thm41_checked ? "skipped" : (r.thm41_pass ? "pass" : "fail");
  a["positive_instances"] = r.positive_instances;
  a["te_checked"] = r.te_checked;
  a["counterexample"] = counterexample_json(r.thm41_counterexample);
  j["te_subset_pi"] = std::move(a);
  ojson b;
  b["status"] = r.union_pass ? "pass" : "fail";
  b["violations"] = r.union_violations;
  b["failed_labels"] = r.union_failed_labels;
  b["counterexample"] = counterexample_json(r.union_counterexample);
  j["union_te_subset_union_pi"] = std::move(b);
  j["pass"] = r.pass();
  return j;
}

ojson ambiguity_report_to_json(const AmbiguityReport& r) {
  ojson j;
  j["suite"] = "ambiguity";
  j["c1"] = r.c1;
  j["c2"] = r.c2;
  j["max_nodes"] = r.max_nodes;
  j["graphs"] = r.graphs;
  j["agreeing_instances"] = r.agreeing;
  j["te_equal_instances"] = r.te_equal;
  j["te_equal_everywhere"] = r.te_equal_everywhere;
  j["te_witness"] = counterexample_json(r.te_witness);
  j["pi_difference_instances"] = r.pi_differences;
  j["first_pi_witness"] = r.pi_witnesses.empty() ? ojson(nullptr) : graph_to_json(r.pi_witnesses.front());
  j["pass"] = r.te_equal_everywhere && r.pi_difference_found();
  return j;
}

ojson counterexample_to_json(const Counterexample& c) { return counterexample_json(c); }

ojson suf_nec_report_to_json(const SufNecReport& r) {
  ojson j;
  j["suite"] = "suf-nec";
  j["classifier"] = r.classifier;
  j["max_nodes"] = r.max_nodes;
  j["graphs"] = r.graphs;
  j["masks_checked"] = r.masks_checked;
  j["suf_violations"] = r.suf_violations;
  j["nec_violations"] = r.nec_violations;
  j["suf_counterexample"] = counterexample_json(r.suf_counterexample);
  j["nec_counterexample"] = counterexample_json(r.nec_counterexample);
  j["pass"] = r.pass();
  return j;
}

ojson zero_faith_report_to_json(const ZeroFaithReport& r) {
  ojson j;
  j["suite"] = "zero-faith";
  j["classifier"] = r.classifier;
  j["max_nodes"] = r.max_nodes;
  j["instances"] = r.instances;
  j["explanations_checked"] = r.explanations_checked;
  j["violations"] = r.violations;
  j["counterexample"] = counterexample_json(r.counterexample);
  j["pass"] = r.pass();
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

}  // namespace xte
