#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mgm/graph.hpp"
#include "mgm/permutation.hpp"

namespace mgm {

// Feature index map for generated graphs. Coordinates and lengths are divided
// by kImageSize, so a checkpoint trained on one dataset reads any other.
namespace feature {
inline constexpr std::size_t kDegree = 0;       // degree / 4
inline constexpr std::size_t kCenterX = 1;
inline constexpr std::size_t kCenterY = 2;
inline constexpr std::size_t kStartX = 3;
inline constexpr std::size_t kStartY = 4;
inline constexpr std::size_t kEndX = 5;
inline constexpr std::size_t kEndY = 6;
inline constexpr std::size_t kLength = 7;
inline constexpr std::size_t kMeanDiameter = 8;  // pixels / 10
inline constexpr std::size_t kDepth = 9;         // hops from LMA / 10
inline constexpr std::size_t kDirCos = 10;
inline constexpr std::size_t kDirSin = 11;
inline constexpr std::size_t kSubtree = 12;      // subtree node count / n
inline constexpr std::size_t kCount = 13;
inline constexpr double kImageSize = 512.0;
}  // namespace feature

struct PlannedLesion {
  ArteryLabel segment;
  double percent = 0.0;
};

struct TreeSpec {
  int lad_segments = 3;
  int lcx_segments = 2;
  int d_branches = 2;
  int om_branches = 2;
  ViewAngle view;
  double feature_noise = 0.05;
  std::uint64_t geometry_seed = 0;
  std::vector<PlannedLesion> stenosis_plan;
  std::size_t d_in = 121;
  std::size_t profile_samples = 48;

  std::size_t node_count() const;
  void validate() const;
};

nlohmann::json tree_spec_to_json(const TreeSpec& s);
TreeSpec tree_spec_from_json(const nlohmann::json& j);

// Smooth diameter profile peaking at `peak` a quarter of the way along, with
// an optional Gaussian notch whose deepest sample is (1 - percent/100) * peak.
std::vector<double> planted_profile(std::size_t samples, double peak, double percent);

VascularGraph generate_tree(const TreeSpec& spec, std::string id = "tree");

// Shuffled, jittered copy of `g`. The permutation sends node i of `g` to
// position perm[i] of the copy. Diameter profiles and padding are untouched.
std::pair<VascularGraph, Permutation> perturb(const VascularGraph& g, double sigma,
                                              std::uint64_t seed, std::string new_id);

struct DatasetSplits {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t templates = 0;
  std::size_t total() const { return train + test + templates; }
};

// "40/14/6"
DatasetSplits parse_splits(const std::string& text);

struct PlantedLesion {
  std::string graph_id;
  int node_id = 0;
  ArteryLabel label;
  double percent = 0.0;
};

struct DatasetManifest {
  TreeSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<std::string> templates;
  std::vector<PlantedLesion> lesions;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct Dataset {
  DatasetManifest manifest;
  std::vector<VascularGraph> train;
  std::vector<VascularGraph> test;
  std::vector<VascularGraph> templates;
};

Dataset build_dataset(const TreeSpec& spec, std::size_t count, const DatasetSplits& splits,
                      std::uint64_t seed);
// Writes <dir>/manifest.json and <dir>/graphs/<id>.json.
void write_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace mgm
