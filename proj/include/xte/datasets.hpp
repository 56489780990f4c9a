#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xte/graph.hpp"
#include "xte/rng.hpp"

namespace xte {

enum class Task { RedBlueNodes, TopoFeature, MotifTask };
enum class BaseKind { BarabasiAlbert, ErdosRenyi };
enum class OodKind { None, LargerGraphs, BaseShift };
enum class Basis { Ladder, Tree, Wheel };
enum class Motif { House = 0, Cycle5 = 1, Crane = 2 };

const char* task_name(Task t);
Task parse_task(const std::string& s);
const char* ood_name(OodKind o);
OodKind parse_ood(const std::string& s);

struct DatasetSpec {
  Task task = Task::RedBlueNodes;
  int count = 100;
  int min_nodes = 10;
  int max_nodes = 20;
  BaseKind base = BaseKind::BarabasiAlbert;
  int ba_m = 2;       // RedBlueNodes base; TopoFeature always uses 1
  double er_p = 0.1;
  OodKind ood = OodKind::None;
  int ood_nodes = 250;              // LargerGraphs
  Basis held_out_basis = Basis::Wheel;  // MotifTask BaseShift
  std::uint64_t seed = 0;

  void validate() const;
};

struct Record {
  Graph graph;
  int label = 0;
  std::vector<std::pair<int, int>> gt_edges;  // ground-truth explanation edges (may be empty)
  friend bool operator==(const Record&, const Record&) = default;
};

struct DatasetSplit {
  std::vector<Record> records;
  std::optional<DatasetSpec> spec;
  std::map<int, int> class_histogram() const;
};

Graph gen_barabasi_albert(int n, int m_attach, Rng& rng);
Graph gen_erdos_renyi(int n, double p, Rng& rng);

DatasetSplit gen_red_blue_nodes(const DatasetSpec& spec);
DatasetSplit gen_topofeature(const DatasetSpec& spec);
DatasetSplit gen_motif_task(const DatasetSpec& spec);
DatasetSplit generate(const DatasetSpec& spec);

// Motif and basis shapes, exposed for tests.
std::vector<std::pair<int, int>> motif_edges(Motif m);  // on nodes 0..4
std::vector<std::pair<int, int>> basis_edges(Basis b, int n, Rng& rng);

// The builtin classifier whose output must equal every record's label.
std::string task_classifier(Task t);
// Checks label soundness for one record; returns false with a reason on mismatch.
bool record_label_sound(Task t, const Record& r, std::string* why = nullptr);

std::vector<std::string> color_names();  // {"red","blue","uncolored"}

void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path);
std::string split_to_jsonl(const DatasetSplit& split);
DatasetSplit split_from_jsonl(const std::string& text);

}  // namespace xte
