#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "xte/datasets.hpp"
#include "xte/explain.hpp"
#include "xte/faithfulness.hpp"

namespace xte {

using ojson = nlohmann::ordered_json;

ojson graph_to_json(const Graph& g, std::optional<int> y = std::nullopt,
                    const std::vector<std::pair<int, int>>* gt_edges = nullptr);
// Parses one JSONL record; throws SchemaError with a description.
Record record_from_json(const nlohmann::json& j);

ojson mask_to_json(const Graph& g, const SubgraphMask& m);
SubgraphMask mask_from_json(const Graph& g, const nlohmann::json& j);
ojson explanation_to_json(const Graph& g, const ExplanationSet& s);
ojson faith_report_to_json(const FaithReport& r);
ojson tepi_report_to_json(const TePiReport& r);
ojson ambiguity_report_to_json(const AmbiguityReport& r);
ojson suf_nec_report_to_json(const SufNecReport& r);
ojson zero_faith_report_to_json(const ZeroFaithReport& r);
ojson counterexample_to_json(const Counterexample& c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace xte
