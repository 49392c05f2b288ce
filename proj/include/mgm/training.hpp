#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "mgm/autodiff.hpp"
#include "mgm/graph.hpp"
#include "mgm/nn.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

struct TrainConfig {
  std::size_t m = 3;
  std::size_t epochs = 10;
  double lr = 1e-5;
  ModelDims dims;
  SinkhornOptions sinkhorn;
  std::uint64_t seed = 0;
  std::size_t max_tuples_per_graph = 0;  // 0 = no cap

  void validate() const;
};

nlohmann::json config_to_json(const TrainConfig& c);
// Keys absent from `j` keep the values already in `base`; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

// An anchor graph plus m-1 templates sharing its view angle and node count.
struct MatchTuple {
  std::vector<const VascularGraph*> graphs;    // anchor first
  std::vector<std::size_t> template_indices;  // positions in the template list
  // Ground-truth permutations for pairs I < J in row-major order, present
  // when every graph carries unique labels.
  std::optional<std::vector<Permutation>> truth;
};

bool compatible(const VascularGraph& a, const VascularGraph& b);

// All (m-1)-combinations of compatible templates, lexicographic by template
// index. When more than `cap` exist (cap > 0), a seeded shuffle picks `cap`.
std::vector<MatchTuple> enumerate_tuples(const VascularGraph& anchor,
                                         const std::vector<VascularGraph>& templates,
                                         std::size_t m, std::size_t cap, std::uint64_t seed);

inline constexpr double kProbabilityClamp = 1e-7;

// -sum over pairs and entries of (1-M) log(1-S) + M log S, with S clamped to
// [eps, 1-eps].
ad::Var bce_loss(const std::vector<ad::Var>& predicted, const std::vector<Permutation>& truth);

// Fraction of nodes whose predicted partner equals the ground truth, over all
// pairs I < J of the tuple.
double matching_accuracy(const std::vector<DenseMatrix>& affinities,
                         const std::vector<Permutation>& truth, std::size_t m);

struct EpochReport {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_accuracy = 0.0;
  std::size_t steps = 0;
};

// One pass of per-tuple gradient steps over the training graphs.
EpochReport train_epoch(const std::vector<VascularGraph>& train_set,
                        const std::vector<VascularGraph>& template_set, ModelParams& params,
                        const TrainConfig& config, AdamState& adam, std::size_t epoch);

nlohmann::json epoch_report_to_json(const EpochReport& r);

}  // namespace mgm
