#include "mgm/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mgm/error.hpp"

namespace mgm {

using nlohmann::json;

namespace {

json label_to_json(const std::optional<ArteryLabel>& label) {
  if (!label) return nullptr;
  json j;
  j["coarse"] = std::string(to_string(label->coarse));
  j["sub"] = label->sub_index ? json(*label->sub_index) : json(nullptr);
  return j;
}

std::optional<ArteryLabel> label_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  const auto coarse = parse_coarse_label(j.at("coarse").get<std::string>());
  std::optional<int> sub;
  if (j.contains("sub") && !j.at("sub").is_null()) sub = j.at("sub").get<int>();
  return ArteryLabel(coarse, sub);
}

}  // namespace

json graph_to_json(const VascularGraph& g) {
  json nodes = json::array();
  for (const auto& node : g.nodes()) {
    json jn;
    jn["id"] = node.id;
    jn["features"] = node.features;
    jn["label"] = label_to_json(node.label);
    if (node.centerline) {
      json pts = json::array();
      for (const auto& p : *node.centerline) pts.push_back({p.x, p.y});
      jn["centerline"] = std::move(pts);
    } else {
      jn["centerline"] = nullptr;
    }
    jn["diameters"] = node.diameters ? json(*node.diameters) : json(nullptr);
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});

  json j;
  j["id"] = g.id();
  j["view"] = {{"first", std::string(to_string(g.view().first))},
               {"second", std::string(to_string(g.view().second))}};
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

VascularGraph graph_from_json(const json& j, LabelPolicy policy) {
  std::vector<ArteryNode> nodes;
  std::vector<Edge> edges;
  std::string id;
  ViewAngle view;
  try {
    id = j.at("id").get<std::string>();
    view.first = parse_first_axis(j.at("view").at("first").get<std::string>());
    view.second = parse_second_axis(j.at("view").at("second").get<std::string>());
    for (const auto& jn : j.at("nodes")) {
      ArteryNode node;
      node.id = jn.at("id").get<int>();
      node.features = jn.at("features").get<std::vector<double>>();
      if (jn.contains("label")) node.label = label_from_json(jn.at("label"));
      if (jn.contains("centerline") && !jn.at("centerline").is_null()) {
        std::vector<Point2> pts;
        for (const auto& p : jn.at("centerline")) {
          if (p.size() != 2) throw ParseError("centerline point must be [x, y]");
          pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        node.centerline = std::move(pts);
      }
      if (jn.contains("diameters") && !jn.at("diameters").is_null()) {
        node.diameters = jn.at("diameters").get<std::vector<double>>();
      }
      nodes.push_back(std::move(node));
    }
    for (const auto& je : j.at("edges")) {
      if (je.size() != 2) throw ParseError("edge must be [i, j]");
      edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph json: ") + e.what());
  }

  std::sort(nodes.begin(), nodes.end(),
            [](const ArteryNode& a, const ArteryNode& b) { return a.id < b.id; });
  VascularGraph g(std::move(id), view, std::move(nodes), std::move(edges));
  if (policy == LabelPolicy::RequireUnique) g.require_unique_labels();
  return g;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << dump_json(j) << '\n';
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

std::string dump_json(const json& j) { return j.dump(); }

VascularGraph load_graph(const std::filesystem::path& path, LabelPolicy policy) {
  return graph_from_json(read_json_file(path), policy);
}

void save_graph(const VascularGraph& g, const std::filesystem::path& path) {
  write_json_file(graph_to_json(g), path);
}

}  // namespace mgm
