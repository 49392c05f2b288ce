#include "mgm/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "mgm/error.hpp"

namespace mgm {

std::string_view to_string(CoarseLabel label) {
  switch (label) {
    case CoarseLabel::LMA: return "LMA";
    case CoarseLabel::LAD: return "LAD";
    case CoarseLabel::LCX: return "LCX";
    case CoarseLabel::D: return "D";
    case CoarseLabel::OM: return "OM";
  }
  return "?";
}

CoarseLabel parse_coarse_label(std::string_view text) {
  for (CoarseLabel c : kCoarseLabels) {
    if (to_string(c) == text) return c;
  }
  throw ValidationError("unknown artery label '" + std::string(text) + "'");
}

ArteryLabel::ArteryLabel(CoarseLabel c, std::optional<int> sub) : coarse(c), sub_index(sub) {
  if (c == CoarseLabel::LMA && sub) throw ValidationError("label: LMA never carries a sub_index");
  if (sub && *sub < 1) throw ValidationError("label: sub_index must be >= 1");
}

std::string to_string(const ArteryLabel& label) {
  std::string s(to_string(label.coarse));
  if (label.sub_index) s += std::to_string(*label.sub_index);
  return s;
}

ArteryLabel parse_artery_label(std::string_view text) {
  std::size_t split = text.size();
  while (split > 0 && text[split - 1] >= '0' && text[split - 1] <= '9') --split;
  const CoarseLabel coarse = parse_coarse_label(text.substr(0, split));
  if (split == text.size()) return ArteryLabel(coarse);
  if (text.size() - split > 6) throw ValidationError("label: sub_index too large");
  return ArteryLabel(coarse, std::stoi(std::string(text.substr(split))));
}

CoarseLabel regroup(const ArteryLabel& label) { return label.coarse; }

std::string_view to_string(FirstAxis a) {
  switch (a) {
    case FirstAxis::LAO: return "LAO";
    case FirstAxis::RAO: return "RAO";
    case FirstAxis::AP: return "AP";
  }
  return "?";
}

std::string_view to_string(SecondAxis a) {
  return a == SecondAxis::CRA ? "CRA" : "CAU";
}

FirstAxis parse_first_axis(std::string_view text) {
  if (text == "LAO") return FirstAxis::LAO;
  if (text == "RAO") return FirstAxis::RAO;
  if (text == "AP") return FirstAxis::AP;
  throw ValidationError("unknown first view axis '" + std::string(text) + "'");
}

SecondAxis parse_second_axis(std::string_view text) {
  if (text == "CRA") return SecondAxis::CRA;
  if (text == "CAU") return SecondAxis::CAU;
  throw ValidationError("unknown second view axis '" + std::string(text) + "'");
}

std::string to_string(const ViewAngle& view) {
  return std::string(to_string(view.first)) + "_" + std::string(to_string(view.second));
}

VascularGraph::VascularGraph(std::string id, ViewAngle view, std::vector<ArteryNode> nodes,
                             std::vector<Edge> edges)
    : id_(std::move(id)), view_(view), nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw ValidationError("graph '" + id_ + "': no nodes");

  const std::size_t d_in = nodes_.front().features.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ArteryNode& node = nodes_[i];
    if (node.id != static_cast<int>(i)) {
      throw ValidationError("graph '" + id_ + "': node ids must be dense 0..n-1 in order");
    }
    if (node.features.size() != d_in) {
      throw ValidationError("graph '" + id_ + "': inconsistent feature length at node " +
                            std::to_string(i));
    }
    if (node.centerline && node.centerline->size() < 2) {
      throw ValidationError("graph '" + id_ + "': centerline of node " + std::to_string(i) +
                            " has fewer than 2 points");
    }
  }

  std::set<Edge> unique;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      throw ValidationError("graph '" + id_ + "': edge references unknown node");
    }
    if (a == b) {
      throw ValidationError("graph '" + id_ + "': self-loop at node " + std::to_string(a));
    }
    Edge e = std::minmax(a, b);
    if (!unique.insert(e).second) {
      throw ValidationError("graph '" + id_ + "': duplicate edge (" + std::to_string(e.first) +
                            "," + std::to_string(e.second) + ")");
    }
  }
  if (unique.size() != n - 1) {
    throw ValidationError("graph '" + id_ + "': not a tree (|edges| = " +
                          std::to_string(unique.size()) + ", expected " + std::to_string(n - 1) +
                          "; cycle or disconnection)");
  }
  edges_.assign(unique.begin(), unique.end());

  adjacency_.assign(n, {});
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++visited;
        frontier.push(v);
      }
    }
  }
  if (visited != n) {
    throw ValidationError("graph '" + id_ + "': disconnected (cycle present elsewhere)");
  }
}

bool VascularGraph::fully_labeled() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const ArteryNode& n) { return n.label; });
}

bool VascularGraph::has_unique_labels() const {
  if (!fully_labeled()) return false;
  std::set<ArteryLabel> seen;
  for (const auto& node : nodes_) {
    if (!seen.insert(*node.label).second) return false;
  }
  return true;
}

void VascularGraph::require_unique_labels() const {
  std::set<ArteryLabel> seen;
  for (const auto& node : nodes_) {
    if (!node.label) {
      throw ValidationError("graph '" + id_ + "': node " + std::to_string(node.id) +
                            " is unlabeled");
    }
    if (!seen.insert(*node.label).second) {
      throw ValidationError("graph '" + id_ + "': duplicate fine label " +
                            to_string(*node.label));
    }
  }
}

VascularGraph relabel_nodes(const VascularGraph& g, const Permutation& perm, std::string new_id) {
  if (perm.size() != g.size()) throw ContractError("relabel_nodes: permutation size mismatch");
  std::vector<ArteryNode> nodes(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    nodes[perm[i]] = g.node(i);
    nodes[perm[i]].id = perm[i];
  }
  std::vector<Edge> edges;
  edges.reserve(g.edges().size());
  for (auto [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
  return VascularGraph(std::move(new_id), g.view(), std::move(nodes), std::move(edges));
}

Permutation ground_truth_permutation(const VascularGraph& a, const VascularGraph& b) {
  a.require_unique_labels();
  b.require_unique_labels();
  if (a.size() != b.size()) {
    throw ValidationError("ground truth: graphs '" + a.id() + "' and '" + b.id() +
                          "' have different node counts");
  }
  std::map<ArteryLabel, int> index_in_b;
  for (const auto& node : b.nodes()) index_in_b.emplace(*node.label, node.id);
  std::vector<int> assignment(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = index_in_b.find(*a.node(i).label);
    if (it == index_in_b.end()) {
      throw ValidationError("ground truth: label " + to_string(*a.node(i).label) +
                            " of graph '" + a.id() + "' missing from graph '" + b.id() + "'");
    }
    assignment[i] = it->second;
  }
  return Permutation(std::move(assignment));
}

GraphSet::GraphSet(std::vector<const VascularGraph*> graphs) : graphs_(std::move(graphs)) {
  if (graphs_.size() < 2) throw ValidationError("graph set: needs at least 2 graphs");
  for (const auto* g : graphs_) {
    if (!(g->view() == graphs_.front()->view())) {
      throw ValidationError("graph set: view angles differ ('" + g->id() + "')");
    }
    if (g->size() != graphs_.front()->size()) {
      throw ValidationError("graph set: node counts differ ('" + g->id() + "')");
    }
  }
}

}  // namespace mgm
