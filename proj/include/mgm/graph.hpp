#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgm/permutation.hpp"

namespace mgm {

enum class CoarseLabel { LMA, LAD, LCX, D, OM };

inline constexpr std::size_t kCoarseClassCount = 5;
inline constexpr CoarseLabel kCoarseLabels[kCoarseClassCount] = {
    CoarseLabel::LMA, CoarseLabel::LAD, CoarseLabel::LCX, CoarseLabel::D, CoarseLabel::OM};

std::string_view to_string(CoarseLabel label);
CoarseLabel parse_coarse_label(std::string_view text);

// Fine artery label: coarse class plus optional 1-based sub-segment index.
struct ArteryLabel {
  CoarseLabel coarse = CoarseLabel::LMA;
  std::optional<int> sub_index;

  ArteryLabel() = default;
  explicit ArteryLabel(CoarseLabel c, std::optional<int> sub = std::nullopt);

  bool operator==(const ArteryLabel&) const = default;
  auto operator<=>(const ArteryLabel&) const = default;
};

std::string to_string(const ArteryLabel& label);
// Inverse of to_string: "LMA", "LAD2", "OM1".
ArteryLabel parse_artery_label(std::string_view text);

// Drops the sub-segment index.
CoarseLabel regroup(const ArteryLabel& label);

enum class FirstAxis { LAO, RAO, AP };
enum class SecondAxis { CRA, CAU };

struct ViewAngle {
  FirstAxis first = FirstAxis::LAO;
  SecondAxis second = SecondAxis::CRA;
  bool operator==(const ViewAngle&) const = default;
};

std::string_view to_string(FirstAxis a);
std::string_view to_string(SecondAxis a);
FirstAxis parse_first_axis(std::string_view text);
SecondAxis parse_second_axis(std::string_view text);
std::string to_string(const ViewAngle& view);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct ArteryNode {
  int id = 0;
  std::vector<double> features;
  std::optional<ArteryLabel> label;
  std::optional<std::vector<Point2>> centerline;
  std::optional<std::vector<double>> diameters;

  bool operator==(const ArteryNode&) const = default;
};

using Edge = std::pair<int, int>;

// Tree of arterial segments. Validated on construction and immutable afterwards.
class VascularGraph {
 public:
  VascularGraph(std::string id, ViewAngle view, std::vector<ArteryNode> nodes,
                std::vector<Edge> edges);

  const std::string& id() const { return id_; }
  const ViewAngle& view() const { return view_; }
  const std::vector<ArteryNode>& nodes() const { return nodes_; }
  const ArteryNode& node(std::size_t i) const { return nodes_[i]; }
  // Sorted, each pair stored with first < second.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(std::size_t i) const { return adjacency_[i]; }

  std::size_t size() const { return nodes_.size(); }
  std::size_t feature_dim() const { return nodes_.front().features.size(); }

  bool fully_labeled() const;
  // True when every node carries a label and no fine label repeats.
  bool has_unique_labels() const;
  // Throws ValidationError naming the offending label unless has_unique_labels().
  void require_unique_labels() const;

  bool operator==(const VascularGraph&) const = default;

 private:
  std::string id_;
  ViewAngle view_;
  std::vector<ArteryNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

// Copy of `g` with node i moved to position perm[i] (edges and ids remapped).
VascularGraph relabel_nodes(const VascularGraph& g, const Permutation& perm, std::string new_id);

// M_ij = 1 iff fine label of node i in `a` equals that of node j in `b`.
Permutation ground_truth_permutation(const VascularGraph& a, const VascularGraph& b);

// m >= 2 graphs sharing one view angle and one node count.
class GraphSet {
 public:
  explicit GraphSet(std::vector<const VascularGraph*> graphs);

  std::size_t m() const { return graphs_.size(); }
  std::size_t n() const { return graphs_.front()->size(); }
  const VascularGraph& operator[](std::size_t i) const { return *graphs_[i]; }
  const std::vector<const VascularGraph*>& graphs() const { return graphs_; }

 private:
  std::vector<const VascularGraph*> graphs_;
};

}  // namespace mgm
