#include "mgm/training.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "mgm/embedding.hpp"
#include "mgm/error.hpp"
#include "mgm/seed.hpp"
#include "mgm/solver.hpp"

namespace mgm {

using nlohmann::json;

void TrainConfig::validate() const {
  if (m < 2) throw ValidationError("train config: m must be >= 2");
  if (dims.d_in == 0 || dims.d_intra == 0 || dims.d_cross == 0 || dims.intra_layers == 0) {
    throw ValidationError("train config: dimensions and L must be positive");
  }
  if (dims.d_cross != dims.d_intra) throw ValidationError("train config: d_cross must equal d_intra");
  if (!(lr >= 0.0)) throw ValidationError("train config: lr must be >= 0");
  if (sinkhorn.max_iter < 1) throw ValidationError("train config: sinkhorn_max_iter must be >= 1");
  if (!(sinkhorn.tol >= 0.0)) throw ValidationError("train config: sinkhorn_tol must be >= 0");
}

json config_to_json(const TrainConfig& c) {
  return {{"m", c.m},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"L", c.dims.intra_layers},
          {"C", c.dims.cross_layers},
          {"d_in", c.dims.d_in},
          {"d_intra", c.dims.d_intra},
          {"d_cross", c.dims.d_cross},
          {"sinkhorn_max_iter", c.sinkhorn.max_iter},
          {"sinkhorn_tol", c.sinkhorn.tol},
          {"seed", c.seed},
          {"max_tuples_per_graph", c.max_tuples_per_graph}};
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
  static const std::set<std::string> known = {
      "m",       "epochs",  "lr",      "L",    "C", "d_in", "d_intra", "d_cross",
      "sinkhorn_max_iter", "sinkhorn_tol", "seed", "max_tuples_per_graph"};
  if (!j.is_object()) throw ParseError("train config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ValidationError("train config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("m")) c.m = j["m"].get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("L")) c.dims.intra_layers = j["L"].get<std::size_t>();
    if (j.contains("C")) c.dims.cross_layers = j["C"].get<std::size_t>();
    if (j.contains("d_in")) c.dims.d_in = j["d_in"].get<std::size_t>();
    if (j.contains("d_intra")) c.dims.d_intra = j["d_intra"].get<std::size_t>();
    if (j.contains("d_cross")) c.dims.d_cross = j["d_cross"].get<std::size_t>();
    if (j.contains("sinkhorn_max_iter")) c.sinkhorn.max_iter = j["sinkhorn_max_iter"].get<int>();
    if (j.contains("sinkhorn_tol")) c.sinkhorn.tol = j["sinkhorn_tol"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_tuples_per_graph")) {
      c.max_tuples_per_graph = j["max_tuples_per_graph"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

bool compatible(const VascularGraph& a, const VascularGraph& b) {
  return a.view() == b.view() && a.size() == b.size();
}

std::vector<MatchTuple> enumerate_tuples(const VascularGraph& anchor,
                                         const std::vector<VascularGraph>& templates,
                                         std::size_t m, std::size_t cap, std::uint64_t seed) {
  if (m < 2) throw ContractError("enumerate_tuples: m must be >= 2");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < templates.size(); ++i)
    if (compatible(anchor, templates[i])) pool.push_back(i);

  const std::size_t k = m - 1;
  std::vector<std::vector<std::size_t>> combos;
  if (pool.size() >= k) {
    // Walk index combinations of the pool in lexicographic order.
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    while (true) {
      std::vector<std::size_t> combo(k);
      for (std::size_t i = 0; i < k; ++i) combo[i] = pool[pick[i]];
      combos.push_back(std::move(combo));
      std::size_t pos = k;
      while (pos > 0 && pick[pos - 1] == pool.size() - k + pos - 1) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t i = pos; i < k; ++i) pick[i] = pick[i - 1] + 1;
    }
  }
  if (cap > 0 && combos.size() > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(combos.begin(), combos.end(), rng);
    combos.resize(cap);
  }

  const bool labeled = anchor.has_unique_labels() &&
                       std::all_of(pool.begin(), pool.end(),
                                   [&](std::size_t i) { return templates[i].has_unique_labels(); });
  std::vector<MatchTuple> tuples;
  tuples.reserve(combos.size());
  for (auto& combo : combos) {
    MatchTuple t;
    t.graphs.push_back(&anchor);
    for (std::size_t idx : combo) t.graphs.push_back(&templates[idx]);
    t.template_indices = std::move(combo);
    if (labeled) {
      std::vector<Permutation> truth;
      for (std::size_t i = 0; i < t.graphs.size(); ++i)
        for (std::size_t j = i + 1; j < t.graphs.size(); ++j)
          truth.push_back(ground_truth_permutation(*t.graphs[i], *t.graphs[j]));
      t.truth = std::move(truth);
    }
    tuples.push_back(std::move(t));
  }
  return tuples;
}

ad::Var bce_loss(const std::vector<ad::Var>& predicted, const std::vector<Permutation>& truth) {
  if (predicted.size() != truth.size()) throw ContractError("bce_loss: pair count mismatch");
  if (predicted.empty()) throw ContractError("bce_loss: no pairs");
  ad::Var total;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    const std::size_t n = truth[p].size();
    if (predicted[p].rows() != n || predicted[p].cols() != n) {
      throw ContractError("bce_loss: prediction shape does not match ground truth");
    }
    const DenseMatrix target = truth[p].to_matrix();
    DenseMatrix complement(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) complement(i, truth[p][i]) = 0.0;

    ad::Var s = ad::clamp(predicted[p], kProbabilityClamp, 1.0 - kProbabilityClamp);
    ad::Var positive = ad::mul(ad::constant(target), ad::log(s));
    ad::Var negative = ad::mul(ad::constant(complement), ad::log(ad::affine(s, -1.0, 1.0)));
    ad::Var pair_term = ad::sum(ad::add(positive, negative));
    total = (p == 0) ? pair_term : ad::add(total, pair_term);
  }
  return ad::scale(total, -1.0);
}

double matching_accuracy(const std::vector<DenseMatrix>& affinities,
                         const std::vector<Permutation>& truth, std::size_t m) {
  const TupleMatch result = match_tuple(affinities, m, 0);
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j, ++p) {
      const Permutation& predicted = result.matches.at(i, j);
      for (std::size_t k = 0; k < predicted.size(); ++k) {
        correct += predicted[k] == truth[p][k] ? 1 : 0;
        ++total;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

EpochReport train_epoch(const std::vector<VascularGraph>& train_set,
                        const std::vector<VascularGraph>& template_set, ModelParams& params,
                        const TrainConfig& config, AdamState& adam, std::size_t epoch) {
  config.validate();
  for (const auto& g : train_set) g.require_unique_labels();
  for (const auto& g : template_set) g.require_unique_labels();
  adam.lr = config.lr;

  EpochReport report;
  report.epoch = epoch;
  double loss_sum = 0.0;
  double accuracy_sum = 0.0;
  for (std::size_t gi = 0; gi < train_set.size(); ++gi) {
    const auto tuples =
        enumerate_tuples(train_set[gi], template_set, config.m, config.max_tuples_per_graph,
                         derive_seed(config.seed, {epoch, gi}));
    for (const auto& tuple : tuples) {
      BoundParams bound = BoundParams::bind(params, true);
      const auto affinities = net::pairwise_affinities(tuple.graphs, bound, config.sinkhorn);
      ad::Var loss = bce_loss(affinities, *tuple.truth);
      ad::backward(loss);

      std::vector<DenseMatrix> values;
      values.reserve(affinities.size());
      for (const auto& a : affinities) values.push_back(a.value());
      accuracy_sum += matching_accuracy(values, *tuple.truth, config.m);
      loss_sum += loss.scalar();

      const auto grads = bound.gradients();
      const auto tensors = params.tensors();
      adam_step(tensors, grads, adam);
      ++report.steps;
    }
  }
  if (report.steps > 0) {
    report.mean_loss = loss_sum / static_cast<double>(report.steps);
    report.mean_accuracy = accuracy_sum / static_cast<double>(report.steps);
  }
  return report;
}

json epoch_report_to_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"mean_loss", r.mean_loss},
          {"mean_accuracy", r.mean_accuracy},
          {"steps", r.steps}};
}

}  // namespace mgm
