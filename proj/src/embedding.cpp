#include "mgm/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mgm/error.hpp"

namespace mgm {

BoundParams BoundParams::bind(const ModelParams& params, bool trainable) {
  params.validate();
  auto leaf = [trainable](const DenseMatrix& m) {
    return trainable ? ad::parameter(m) : ad::constant(m);
  };
  BoundParams b;
  b.dims = params.dims;
  for (const auto& l : params.intra) b.intra.push_back({leaf(l.weight), leaf(l.bias), l.activation});
  for (const auto& l : params.cross) b.cross.push_back({leaf(l.weight), leaf(l.bias), l.activation});
  b.a_intra = leaf(params.a_intra);
  b.a_cross = leaf(params.a_cross);
  return b;
}

std::vector<DenseMatrix> BoundParams::gradients() const {
  std::vector<DenseMatrix> g;
  for (const auto& l : intra) {
    g.push_back(l.weight.grad());
    g.push_back(l.bias.grad());
  }
  for (const auto& l : cross) {
    g.push_back(l.weight.grad());
    g.push_back(l.bias.grad());
  }
  g.push_back(a_intra.grad());
  g.push_back(a_cross.grad());
  return g;
}

namespace net {

ad::Var node_features(const VascularGraph& g) {
  const std::size_t d = g.feature_dim();
  DenseMatrix x(g.size(), d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::copy(g.node(i).features.begin(), g.node(i).features.end(), x.row(i).begin());
  }
  return ad::constant(std::move(x));
}

ad::Var apply_layer(const ad::Var& x, const BoundParams::Layer& layer) {
  ad::Var y = ad::add_row(ad::matmul_bt(x, layer.weight), layer.bias);
  return layer.activation == Activation::ReLU ? ad::relu(y) : y;
}

ad::Var intra_embed(const VascularGraph& g, const BoundParams& params) {
  if (g.feature_dim() != params.dims.d_in) {
    throw ValidationError("intra_embed: graph '" + g.id() + "' has feature length " +
                          std::to_string(g.feature_dim()) + ", model expects " +
                          std::to_string(params.dims.d_in));
  }
  std::vector<std::vector<int>> neighborhoods(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) neighborhoods[i] = g.neighbors(i);

  ad::Var h = node_features(g);
  for (const auto& layer : params.intra) {
    h = apply_layer(ad::concat_cols(ad::row_sum_over(h, neighborhoods), h), layer);
  }
  return h;
}

ad::Var bilinear_affinity(const ad::Var& ea, const ad::Var& eb, const ad::Var& a,
                          SinkhornOptions options) {
  if (ea.rows() != eb.rows()) {
    throw ValidationError("affinity: node counts differ (" + std::to_string(ea.rows()) + " vs " +
                          std::to_string(eb.rows()) + ")");
  }
  if (ea.cols() != eb.cols() || ea.cols() != a.rows() || a.rows() != a.cols()) {
    throw ContractError("affinity: embedding / affinity matrix shape mismatch");
  }
  const double d = static_cast<double>(ea.cols());
  ad::Var logits = ad::divide(ad::matmul_bt(ad::matmul(ea, a), eb), std::sqrt(d));
  const auto values = logits.value().data();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) throw ContractError("affinity: non-finite logits");
  // Floor keeps exp() strictly positive for Sinkhorn.
  constexpr double kLogitFloor = -700.0;
  ad::Var shifted = ad::clamp(ad::affine(logits, 1.0, -top), kLogitFloor,
                              std::numeric_limits<double>::infinity());
  return ad::sinkhorn(ad::exp(shifted), options);
}

std::pair<ad::Var, ad::Var> cross_embed(const ad::Var& ea, const ad::Var& eb, const ad::Var& s,
                                        const BoundParams& params) {
  if (ea.cols() != eb.cols() || s.rows() != ea.rows() || s.cols() != eb.rows()) {
    throw ContractError("cross_embed: shape mismatch");
  }
  ad::Var left = ea;
  ad::Var right = eb;
  const ad::Var s_t = ad::transpose(s);
  for (const auto& layer : params.cross) {
    ad::Var next_left = apply_layer(ad::concat_cols(ad::matmul(s, right), left), layer);
    ad::Var next_right = apply_layer(ad::concat_cols(ad::matmul(s_t, left), right), layer);
    left = std::move(next_left);
    right = std::move(next_right);
  }
  return {left, right};
}

std::vector<ad::Var> pairwise_affinities(const std::vector<const VascularGraph*>& graphs,
                                         const BoundParams& params, SinkhornOptions options) {
  std::vector<ad::Var> intra;
  intra.reserve(graphs.size());
  for (const auto* g : graphs) intra.push_back(intra_embed(*g, params));

  std::vector<ad::Var> out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::size_t j = i + 1; j < graphs.size(); ++j) {
      ad::Var s_bar = bilinear_affinity(intra[i], intra[j], params.a_intra, options);
      auto [ci, cj] = cross_embed(intra[i], intra[j], s_bar, params);
      out.push_back(bilinear_affinity(ci, cj, params.a_cross, options));
    }
  }
  return out;
}

}  // namespace net

namespace {

void require_stage(const NodeEmbeddings& e, EmbeddingStage stage, const char* op) {
  if (e.stage != stage) {
    throw ContractError(std::string(op) + ": embeddings of graph '" + e.graph_id +
                        "' are at the wrong stage");
  }
}

}  // namespace

NodeEmbeddings intra_embed(const VascularGraph& g, const ModelParams& params) {
  const BoundParams bound = BoundParams::bind(params, false);
  return {g.id(), net::intra_embed(g, bound).value(), EmbeddingStage::Intra};
}

DenseMatrix intra_affinity(const NodeEmbeddings& ea, const NodeEmbeddings& eb,
                           const ModelParams& params, SinkhornOptions options) {
  require_stage(ea, EmbeddingStage::Intra, "intra_affinity");
  require_stage(eb, EmbeddingStage::Intra, "intra_affinity");
  return net::bilinear_affinity(ad::constant(ea.matrix), ad::constant(eb.matrix),
                                ad::constant(params.a_intra), options)
      .value();
}

std::pair<NodeEmbeddings, NodeEmbeddings> cross_embed(const NodeEmbeddings& ea,
                                                      const NodeEmbeddings& eb,
                                                      const DenseMatrix& s,
                                                      const ModelParams& params) {
  require_stage(ea, EmbeddingStage::Intra, "cross_embed");
  require_stage(eb, EmbeddingStage::Intra, "cross_embed");
  const BoundParams bound = BoundParams::bind(params, false);
  auto [l, r] = net::cross_embed(ad::constant(ea.matrix), ad::constant(eb.matrix),
                                 ad::constant(s), bound);
  return {NodeEmbeddings{ea.graph_id, l.value(), EmbeddingStage::Cross},
          NodeEmbeddings{eb.graph_id, r.value(), EmbeddingStage::Cross}};
}

DenseMatrix cross_affinity(const NodeEmbeddings& ea, const NodeEmbeddings& eb,
                           const ModelParams& params, SinkhornOptions options) {
  require_stage(ea, EmbeddingStage::Cross, "cross_affinity");
  require_stage(eb, EmbeddingStage::Cross, "cross_affinity");
  return net::bilinear_affinity(ad::constant(ea.matrix), ad::constant(eb.matrix),
                                ad::constant(params.a_cross), options)
      .value();
}

}  // namespace mgm
