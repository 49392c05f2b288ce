#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mgm/autodiff.hpp"
#include "mgm/graph.hpp"
#include "mgm/nn.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

enum class EmbeddingStage { Intra, Cross };

struct NodeEmbeddings {
  std::string graph_id;
  DenseMatrix matrix;  // row i embeds node i
  EmbeddingStage stage = EmbeddingStage::Intra;
};

// ModelParams lifted into autodiff leaves. With trainable = false every leaf is
// a constant and no backward closures are recorded.
struct BoundParams {
  struct Layer {
    ad::Var weight;
    ad::Var bias;
    Activation activation;
  };
  ModelDims dims;
  std::vector<Layer> intra;
  std::vector<Layer> cross;
  ad::Var a_intra;
  ad::Var a_cross;

  static BoundParams bind(const ModelParams& params, bool trainable);

  // Gradients in ModelParams::tensors() order.
  std::vector<DenseMatrix> gradients() const;
};

// Differentiable building blocks.
namespace net {

ad::Var node_features(const VascularGraph& g);
ad::Var apply_layer(const ad::Var& x, const BoundParams::Layer& layer);

// L rounds of phi([sum of neighbor rows, own row]).
ad::Var intra_embed(const VascularGraph& g, const BoundParams& params);

// Sinkhorn(exp(ea * A * eb^T / sqrt(d))). Logits are shifted by their maximum
// before exponentiation; Sinkhorn is invariant to that scaling.
ad::Var bilinear_affinity(const ad::Var& ea, const ad::Var& eb, const ad::Var& a,
                          SinkhornOptions options);

// C rounds of psi([S * eb, ea]) and psi([S^T * ea, eb]), both sides updated
// from the previous round's values with the same S.
std::pair<ad::Var, ad::Var> cross_embed(const ad::Var& ea, const ad::Var& eb, const ad::Var& s,
                                        const BoundParams& params);

// Cross-graph affinities for every pair I < J of a tuple, in row-major pair
// order (0,1), (0,2), ..., (m-2, m-1).
std::vector<ad::Var> pairwise_affinities(const std::vector<const VascularGraph*>& graphs,
                                         const BoundParams& params, SinkhornOptions options);

}  // namespace net

NodeEmbeddings intra_embed(const VascularGraph& g, const ModelParams& params);
DenseMatrix intra_affinity(const NodeEmbeddings& ea, const NodeEmbeddings& eb,
                           const ModelParams& params, SinkhornOptions options = {});
std::pair<NodeEmbeddings, NodeEmbeddings> cross_embed(const NodeEmbeddings& ea,
                                                      const NodeEmbeddings& eb,
                                                      const DenseMatrix& s,
                                                      const ModelParams& params);
DenseMatrix cross_affinity(const NodeEmbeddings& ea, const NodeEmbeddings& eb,
                           const ModelParams& params, SinkhornOptions options = {});

}  // namespace mgm
