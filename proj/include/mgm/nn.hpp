#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "mgm/matrix.hpp"

namespace mgm {

enum class Activation { ReLU, None };

// y = x * W^T + b, then the activation.
struct MlpLayer {
  DenseMatrix weight;  // out x in
  DenseMatrix bias;    // 1 x out
  Activation activation = Activation::ReLU;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  bool operator==(const MlpLayer&) const = default;
};

struct ModelDims {
  std::size_t d_in = 121;
  std::size_t d_intra = 256;
  std::size_t d_cross = 256;
  std::size_t intra_layers = 3;  // L
  std::size_t cross_layers = 3;  // C

  bool operator==(const ModelDims&) const = default;
};

// Learnable state of the matcher: L intra layers (layer 1 maps 2*d_in ->
// d_intra, later layers 2*d_intra -> d_intra), C cross layers
// (2*d_cross -> d_cross) and the two bilinear affinity matrices.
struct ModelParams {
  ModelDims dims;
  std::vector<MlpLayer> intra;
  std::vector<MlpLayer> cross;
  DenseMatrix a_intra;
  DenseMatrix a_cross;

  // Glorot-uniform weights and affinity matrices, zero biases.
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed);

  // Throws ValidationError on any shape inconsistency or d_cross != d_intra.
  void validate() const;

  // Every trainable tensor in a fixed order: intra (W, b)..., cross (W, b)...,
  // a_intra, a_cross.
  std::vector<DenseMatrix*> tensors();
  std::vector<const DenseMatrix*> tensors() const;
  std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

struct AdamState {
  std::int64_t step = 0;
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<DenseMatrix> first_moment;
  std::vector<DenseMatrix> second_moment;
};

// One bias-corrected Adam update applied in place. Moments are allocated on
// the first call.
void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads,
               AdamState& state);

// Versioned checkpoint JSON. The Adam state and epoch counter are optional
// extras used to resume training.
nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json adam_to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelParams params;
  std::optional<AdamState> adam;
  std::int64_t epochs_completed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgm
