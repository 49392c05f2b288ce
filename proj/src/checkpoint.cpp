#include "mgm/error.hpp"
#include "mgm/graph_io.hpp"
#include "mgm/nn.hpp"

namespace mgm {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

json matrix_json(const DenseMatrix& m) { return m.to_nested(); }

DenseMatrix matrix_from(const json& j) {
  return DenseMatrix::from_nested(j.get<std::vector<std::vector<double>>>());
}

json layer_json(const MlpLayer& layer) {
  return {{"weight", matrix_json(layer.weight)},
          {"bias", std::vector<double>(layer.bias.data().begin(), layer.bias.data().end())},
          {"activation", layer.activation == Activation::ReLU ? "relu" : "none"}};
}

MlpLayer layer_from(const json& j) {
  MlpLayer layer;
  layer.weight = matrix_from(j.at("weight"));
  auto bias = j.at("bias").get<std::vector<double>>();
  const std::size_t out = bias.size();
  layer.bias = DenseMatrix(1, out, std::move(bias));
  const auto act = j.at("activation").get<std::string>();
  if (act == "relu") {
    layer.activation = Activation::ReLU;
  } else if (act == "none") {
    layer.activation = Activation::None;
  } else {
    throw ValidationError("checkpoint: unknown activation '" + act + "'");
  }
  return layer;
}

}  // namespace

json params_to_json(const ModelParams& params) {
  json j;
  j["version"] = kCheckpointVersion;
  j["dims"] = {{"d_in", params.dims.d_in},
               {"d_intra", params.dims.d_intra},
               {"d_cross", params.dims.d_cross},
               {"L", params.dims.intra_layers},
               {"C", params.dims.cross_layers}};
  j["intra_layers"] = json::array();
  for (const auto& l : params.intra) j["intra_layers"].push_back(layer_json(l));
  j["cross_layers"] = json::array();
  for (const auto& l : params.cross) j["cross_layers"].push_back(layer_json(l));
  j["a_intra"] = matrix_json(params.a_intra);
  j["a_cross"] = matrix_json(params.a_cross);
  return j;
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("checkpoint: unsupported version");
    }
    const auto& d = j.at("dims");
    p.dims.d_in = d.at("d_in").get<std::size_t>();
    p.dims.d_intra = d.at("d_intra").get<std::size_t>();
    p.dims.d_cross = d.at("d_cross").get<std::size_t>();
    p.dims.intra_layers = d.at("L").get<std::size_t>();
    p.dims.cross_layers = d.at("C").get<std::size_t>();
    for (const auto& l : j.at("intra_layers")) p.intra.push_back(layer_from(l));
    for (const auto& l : j.at("cross_layers")) p.cross.push_back(layer_from(l));
    p.a_intra = matrix_from(j.at("a_intra"));
    p.a_cross = matrix_from(j.at("a_cross"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint json: ") + e.what());
  }
  p.validate();
  return p;
}

json adam_to_json(const AdamState& state) {
  json j;
  j["step"] = state.step;
  j["lr"] = state.lr;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["eps"] = state.eps;
  j["first_moment"] = json::array();
  j["second_moment"] = json::array();
  for (const auto& m : state.first_moment) j["first_moment"].push_back(matrix_json(m));
  for (const auto& m : state.second_moment) j["second_moment"].push_back(matrix_json(m));
  return j;
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  try {
    s.step = j.at("step").get<std::int64_t>();
    s.lr = j.at("lr").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    for (const auto& m : j.at("first_moment")) s.first_moment.push_back(matrix_from(m));
    for (const auto& m : j.at("second_moment")) s.second_moment.push_back(matrix_from(m));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint adam state: ") + e.what());
  }
  return s;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j = params_to_json(ckpt.params);
  j["epochs_completed"] = ckpt.epochs_completed;
  if (ckpt.adam) j["adam"] = adam_to_json(*ckpt.adam);
  write_json_file(j, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  Checkpoint c;
  c.params = params_from_json(j);
  if (j.contains("epochs_completed")) c.epochs_completed = j.at("epochs_completed").get<std::int64_t>();
  if (j.contains("adam")) c.adam = adam_from_json(j.at("adam"));
  return c;
}

}  // namespace mgm
