#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "mgm/graph.hpp"

namespace mgm {

enum class LabelPolicy {
  Any,           // unlabeled or partially labeled graphs accepted
  RequireUnique  // training/template graphs: every node labeled, no duplicate fine labels
};

nlohmann::json graph_to_json(const VascularGraph& g);
VascularGraph graph_from_json(const nlohmann::json& j, LabelPolicy policy = LabelPolicy::Any);

VascularGraph load_graph(const std::filesystem::path& path, LabelPolicy policy = LabelPolicy::Any);
void save_graph(const VascularGraph& g, const std::filesystem::path& path);

// Shared helpers for the other JSON file formats.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
// Compact single-line dump used for byte-stable outputs.
std::string dump_json(const nlohmann::json& j);

}  // namespace mgm
