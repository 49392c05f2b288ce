#include <cmath>

#include "mgm/error.hpp"
#include "mgm/nn.hpp"

namespace mgm {

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows == 0 || cols == 0) throw ContractError("glorot_init: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

ModelParams ModelParams::initialize(const ModelDims& dims, std::uint64_t seed) {
  if (dims.d_in == 0 || dims.d_intra == 0 || dims.d_cross == 0 || dims.intra_layers == 0) {
    throw ValidationError("model dims: d_in, d_intra, d_cross and L must be positive");
  }
  if (dims.d_cross != dims.d_intra) throw ValidationError("model dims: d_cross must equal d_intra");

  std::mt19937_64 rng(seed);
  ModelParams p;
  p.dims = dims;
  for (std::size_t l = 0; l < dims.intra_layers; ++l) {
    const std::size_t in = 2 * (l == 0 ? dims.d_in : dims.d_intra);
    MlpLayer layer;
    layer.weight = glorot_init(dims.d_intra, in, rng);
    layer.bias = DenseMatrix(1, dims.d_intra);
    layer.activation = (l + 1 == dims.intra_layers) ? Activation::None : Activation::ReLU;
    p.intra.push_back(std::move(layer));
  }
  for (std::size_t c = 0; c < dims.cross_layers; ++c) {
    MlpLayer layer;
    layer.weight = glorot_init(dims.d_cross, 2 * dims.d_cross, rng);
    layer.bias = DenseMatrix(1, dims.d_cross);
    layer.activation = (c + 1 == dims.cross_layers) ? Activation::None : Activation::ReLU;
    p.cross.push_back(std::move(layer));
  }
  p.a_intra = glorot_init(dims.d_intra, dims.d_intra, rng);
  p.a_cross = glorot_init(dims.d_cross, dims.d_cross, rng);
  return p;
}

void ModelParams::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("model params: " + what); };
  if (dims.d_cross != dims.d_intra) fail("d_cross must equal d_intra");
  if (dims.intra_layers == 0) fail("at least one intra layer is required");
  if (intra.size() != dims.intra_layers) fail("intra layer count does not match L");
  if (cross.size() != dims.cross_layers) fail("cross layer count does not match C");
  for (std::size_t l = 0; l < intra.size(); ++l) {
    const std::size_t in = 2 * (l == 0 ? dims.d_in : dims.d_intra);
    if (intra[l].weight.rows() != dims.d_intra || intra[l].weight.cols() != in) {
      fail("intra layer " + std::to_string(l + 1) + " weight shape");
    }
    if (intra[l].bias.rows() != 1 || intra[l].bias.cols() != dims.d_intra) {
      fail("intra layer " + std::to_string(l + 1) + " bias shape");
    }
  }
  for (std::size_t c = 0; c < cross.size(); ++c) {
    if (cross[c].weight.rows() != dims.d_cross || cross[c].weight.cols() != 2 * dims.d_cross) {
      fail("cross layer " + std::to_string(c + 1) + " weight shape");
    }
    if (cross[c].bias.rows() != 1 || cross[c].bias.cols() != dims.d_cross) {
      fail("cross layer " + std::to_string(c + 1) + " bias shape");
    }
  }
  if (a_intra.rows() != dims.d_intra || a_intra.cols() != dims.d_intra) fail("a_intra shape");
  if (a_cross.rows() != dims.d_cross || a_cross.cols() != dims.d_cross) fail("a_cross shape");
}

std::vector<DenseMatrix*> ModelParams::tensors() {
  std::vector<DenseMatrix*> out;
  for (auto& l : intra) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (auto& l : cross) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&a_intra);
  out.push_back(&a_cross);
  return out;
}

std::vector<const DenseMatrix*> ModelParams::tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto* t : tensors()) total += t->size();
  return total;
}

void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads,
               AdamState& state) {
  if (params.size() != grads.size()) throw ContractError("adam_step: parameter/gradient count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) throw ContractError("adam_step: gradient shape mismatch");
  }
  if (state.step < 0) throw ContractError("adam_step: negative step");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!state.first_moment[i].same_shape(*params[i]) ||
        !state.second_moment[i].same_shape(*params[i])) {
      throw ContractError("adam_step: moment shape mismatch");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      p[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace mgm
