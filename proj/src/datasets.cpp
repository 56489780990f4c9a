#include "xte/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "xte/classifier.hpp"
#include "xte/json_io.hpp"

namespace xte {

const char* task_name(Task t) {
  switch (t) {
    case Task::RedBlueNodes: return "redblue";
    case Task::TopoFeature: return "topofeature";
    case Task::MotifTask: return "motif";
  }
  return "?";
}

Task parse_task(const std::string& s) {
  if (s == "redblue" || s == "RedBlueNodes") return Task::RedBlueNodes;
  if (s == "topofeature" || s == "TopoFeature") return Task::TopoFeature;
  if (s == "motif" || s == "MotifTask") return Task::MotifTask;
  throw Error(ErrorCode::BadParams, "unknown task '" + s + "' (expected redblue, topofeature or motif)");
}

const char* ood_name(OodKind o) {
  switch (o) {
    case OodKind::None: return "none";
    case OodKind::LargerGraphs: return "larger";
    case OodKind::BaseShift: return "baseshift";
  }
  return "?";
}

OodKind parse_ood(const std::string& s) {
  if (s == "none") return OodKind::None;
  if (s == "larger") return OodKind::LargerGraphs;
  if (s == "baseshift") return OodKind::BaseShift;
  throw Error(ErrorCode::BadParams, "unknown ood kind '" + s + "' (expected none, larger or baseshift)");
}

void DatasetSpec::validate() const {
  if (count < 1) throw Error(ErrorCode::BadParams, "count must be >= 1");
  if (min_nodes < 3 || max_nodes < min_nodes) throw Error(ErrorCode::BadParams, "size range must satisfy 3 <= min <= max");
  if (ba_m < 1) throw Error(ErrorCode::BadParams, "BA attachment must be >= 1");
  if (!(er_p >= 0.0 && er_p <= 1.0)) throw Error(ErrorCode::BadParams, "ER p must be in [0,1]");
  if (ood == OodKind::LargerGraphs && ood_nodes < 3) throw Error(ErrorCode::BadParams, "ood node count must be >= 3");
  if (task == Task::RedBlueNodes && base == BaseKind::BarabasiAlbert && min_nodes <= ba_m)
    throw Error(ErrorCode::BadParams, "min node count must exceed BA attachment");
}

std::map<int, int> DatasetSplit::class_histogram() const {
  std::map<int, int> h;
  for (auto& r : records) ++h[r.label];
  return h;
}

std::vector<std::string> color_names() { return {"red", "blue", "uncolored"}; }

namespace {

const std::vector<double> kRed{1, 0, 0}, kBlue{0, 1, 0}, kUncolored{0, 0, 1}, kZero{0, 0, 0};

std::vector<std::pair<int, int>> edge_pairs(const Graph& g) {
  std::vector<std::pair<int, int>> e;
  for (auto& ed : g.edges()) e.emplace_back(ed.u, ed.v);
  return e;
}

// Uniform random recursive tree: node i attaches to a uniform earlier node.
std::vector<std::pair<int, int>> random_tree(int n, Rng& rng, int offset = 0) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(offset + static_cast<int>(rng.below(i)), offset + i);
  return e;
}

}  // namespace

Graph gen_barabasi_albert(int n, int m, Rng& rng) {
  if (!(m >= 1 && n > m)) throw Error(ErrorCode::BadParams, "BA needs n > m_attach >= 1");
  std::vector<std::pair<int, int>> edges;
  std::vector<int> repeated;  // node listed once per incident edge end
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      edges.emplace_back(i, j);
      repeated.push_back(i);
      repeated.push_back(j);
    }
  for (int v = m; v < n; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      int t = repeated.empty() ? static_cast<int>(rng.below(v)) : repeated[rng.below(repeated.size())];
      targets.insert(t);
    }
    for (int t : targets) {
      edges.emplace_back(t, v);
      repeated.push_back(t);
      repeated.push_back(v);
    }
  }
  return build_graph(n, edges);
}

Graph gen_erdos_renyi(int n, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadParams, "ER p must be in [0,1]");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return build_graph(n, edges);
}

DatasetSplit gen_red_blue_nodes(const DatasetSpec& spec) {
  if (spec.task != Task::RedBlueNodes) throw Error(ErrorCode::BadParams, "spec task is not RedBlueNodes");
  spec.validate();
  DatasetSplit out;
  out.spec = spec;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    int n = spec.ood == OodKind::LargerGraphs ? spec.ood_nodes : rng.range(spec.min_nodes, spec.max_nodes);
    bool er = spec.base == BaseKind::ErdosRenyi || spec.ood == OodKind::BaseShift;
    Graph base = er ? gen_erdos_renyi(n, spec.er_p, rng) : gen_barabasi_albert(n, spec.ba_m, rng);
    std::vector<std::vector<double>> x;
    int red = 0;
    for (int v = 0; v < n; ++v) {
      bool is_red = rng.coin();
      red += is_red;
      x.push_back(is_red ? kRed : kBlue);
    }
    out.records.push_back({with_features(base, x, color_names()), red >= n - red ? 1 : 0, {}});
  }
  return out;
}

DatasetSplit gen_topofeature(const DatasetSpec& spec) {
  if (spec.task != Task::TopoFeature) throw Error(ErrorCode::BadParams, "spec task is not TopoFeature");
  spec.validate();
  DatasetSplit out;
  out.spec = spec;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    int n = spec.ood == OodKind::LargerGraphs ? spec.ood_nodes : rng.range(spec.min_nodes, spec.max_nodes);
    bool positive = rng.coin();
    bool with_cycle = true, enough_red = true;
    if (!positive) {
      switch (rng.below(3)) {
        case 0: with_cycle = false; break;
        case 1: enough_red = false; break;
        default: with_cycle = enough_red = false;
      }
    }
    const int cycle_len = with_cycle ? rng.range(3, 5) : 0;
    const int base_n = std::max(2, n - cycle_len);
    // Acyclic base: BA with one attachment (a tree); BaseShift swaps in a uniform random tree.
    auto edges = spec.ood == OodKind::BaseShift ? random_tree(base_n, rng) : edge_pairs(gen_barabasi_albert(base_n, 1, rng));
    std::vector<std::pair<int, int>> gt;
    int total = base_n;
    if (with_cycle) {
      for (int k = 0; k < cycle_len; ++k) gt.emplace_back(base_n + k, base_n + (k + 1) % cycle_len);
      for (auto& [a, b] : gt)
        if (a > b) std::swap(a, b);
      std::sort(gt.begin(), gt.end());
      edges.insert(edges.end(), gt.begin(), gt.end());
      edges.emplace_back(static_cast<int>(rng.below(base_n)), base_n + static_cast<int>(rng.below(cycle_len)));
      total += cycle_len;
    }
    int reds = enough_red ? rng.range(2, std::min(4, total)) : rng.range(0, 1);
    std::vector<int> nodes(total);
    for (int v = 0; v < total; ++v) nodes[v] = v;
    rng.shuffle(nodes);
    std::vector<std::vector<double>> x(total, kZero);
    for (int k = 0; k < reds; ++k) x[nodes[k]] = kRed;
    Graph g = build_graph(total, edges, x, color_names());
    out.records.push_back({std::move(g), positive ? 1 : 0, positive ? gt : std::vector<std::pair<int, int>>{}});
  }
  return out;
}

std::vector<std::pair<int, int>> motif_edges(Motif m) {
  switch (m) {
    case Motif::House:  // square 0-1-2-3 with apex 4 over edge (0,1)
      return {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}};
    case Motif::Cycle5:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
    case Motif::Crane:  // triangle 0-1-2 with a two-edge boom 2-3-4
      return {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}};
  }
  return {};
}

std::vector<std::pair<int, int>> basis_edges(Basis b, int n, Rng& rng) {
  std::vector<std::pair<int, int>> e;
  switch (b) {
    case Basis::Ladder: {
      int r = n / 2;
      for (int i = 0; i < r; ++i) {
        if (i + 1 < r) {
          e.emplace_back(i, i + 1);
          e.emplace_back(r + i, r + i + 1);
        }
        e.emplace_back(i, r + i);
      }
      break;
    }
    case Basis::Tree:
      e = random_tree(n, rng);
      break;
    case Basis::Wheel:
      for (int i = 1; i < n; ++i) {
        e.emplace_back(0, i);
        e.emplace_back(i, i + 1 < n ? i + 1 : 1);
      }
      for (auto& [a, c] : e)
        if (a > c) std::swap(a, c);
      break;
  }
  return e;
}

DatasetSplit gen_motif_task(const DatasetSpec& spec) {
  if (spec.task != Task::MotifTask) throw Error(ErrorCode::BadParams, "spec task is not MotifTask");
  spec.validate();
  DatasetSplit out;
  out.spec = spec;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    Basis basis = spec.ood == OodKind::BaseShift ? spec.held_out_basis : static_cast<Basis>(rng.below(3));
    int bn = rng.range(6, 15);
    if (basis == Basis::Ladder) bn -= bn % 2;
    auto edges = basis_edges(basis, bn, rng);
    Motif motif = static_cast<Motif>(rng.below(3));
    std::vector<std::pair<int, int>> gt;
    for (auto [a, b] : motif_edges(motif)) gt.emplace_back(bn + a, bn + b);
    edges.insert(edges.end(), gt.begin(), gt.end());
    edges.emplace_back(static_cast<int>(rng.below(bn)), bn + static_cast<int>(rng.below(5)));
    const int total = bn + 5;
    std::vector<std::vector<double>> x(total, kUncolored);
    std::sort(gt.begin(), gt.end());
    out.records.push_back({build_graph(total, edges, x, color_names()), static_cast<int>(motif), gt});
  }
  return out;
}

DatasetSplit generate(const DatasetSpec& spec) {
  switch (spec.task) {
    case Task::RedBlueNodes: return gen_red_blue_nodes(spec);
    case Task::TopoFeature: return gen_topofeature(spec);
    case Task::MotifTask: return gen_motif_task(spec);
  }
  throw Error(ErrorCode::BadParams, "unknown task");
}

std::string task_classifier(Task t) {
  switch (t) {
    case Task::RedBlueNodes: return "red-majority";
    case Task::TopoFeature: return "topofeature";
    case Task::MotifTask: return "motif-task";
  }
  return "";
}

bool record_label_sound(Task t, const Record& r, std::string* why) {
  if (t != Task::MotifTask) {
    static const Classifier rb = Classifier::from_text("red-majority");
    static const Classifier tf = Classifier::from_text("topofeature");
    int y = t == Task::RedBlueNodes ? rb(r.graph) : tf(r.graph);
    if (y != r.label && why) *why = "label " + std::to_string(r.label) + " but classifier says " + std::to_string(y);
    return y == r.label;
  }
  // Bases such as wheels contain houses and 5-cycles of their own, so the
  // motif label is checked on the annotated motif subgraph.
  static const Classifier mc = Classifier::from_text("motif-task");
  static const Classifier crane = Classifier::from_text("crane-motif");
  std::vector<int> ids;
  for (auto& [a, b] : r.gt_edges) {
    int e = r.graph.edge_index(a, b);
    if (e < 0) {
      if (why) *why = "ground-truth edge missing from graph";
      return false;
    }
    ids.push_back(e);
  }
  Graph sub = apply_mask(r.graph, SubgraphMask::from_edges(r.graph, ids)).graph;
  int y = mc(sub);
  bool ok = y == r.label && (r.label != 2 || crane(sub) == 1);
  if (!ok && why) *why = "motif subgraph classified as " + std::to_string(y);
  return ok;
}

std::string split_to_jsonl(const DatasetSplit& split) {
  std::string out;
  for (auto& r : split.records) {
    out += graph_to_json(r.graph, r.label, r.gt_edges.empty() ? nullptr : &r.gt_edges).dump();
    out += '\n';
  }
  return out;
}

DatasetSplit split_from_jsonl(const std::string& text) {
  DatasetSplit s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      s.records.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return s;
}

void save_split(const DatasetSplit& split, const std::string& path) { write_file(path, split_to_jsonl(split)); }

DatasetSplit load_split(const std::string& path) { return split_from_jsonl(read_file(path)); }

}  // namespace xte
