#pragma once

// End-to-end finite-difference check of the matching loss gradient.

#include <random>
#include <vector>

#include "mgm/embedding.hpp"
#include "mgm/training.hpp"
#include "oracles.hpp"

namespace gradcheck {

// Random labeled tree on n nodes (labels LAD1..LADn) with d features.
inline mgm::VascularGraph random_tree(std::size_t n, std::size_t d, std::mt19937_64& rng,
                                      std::string id = "t") {
  std::vector<mgm::ArteryNode> nodes;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    mgm::ArteryNode node;
    node.id = static_cast<int>(i);
    node.label = mgm::ArteryLabel(mgm::CoarseLabel::LAD, static_cast<int>(i) + 1);
    node.features.resize(d);
    for (auto& v : node.features) v = u(rng);
    nodes.push_back(std::move(node));
  }
  std::vector<mgm::Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.emplace_back(static_cast<int>(rng() % i), static_cast<int>(i));
  return mgm::VascularGraph(std::move(id), {}, std::move(nodes), std::move(edges));
}

inline double tuple_loss(const std::vector<const mgm::VascularGraph*>& graphs,
                         const std::vector<mgm::Permutation>& truth, const mgm::ModelParams& p,
                         mgm::SinkhornOptions opt) {
  const auto bound = mgm::BoundParams::bind(p, false);
  return mgm::bce_loss(mgm::net::pairwise_affinities(graphs, bound, opt), truth).scalar();
}

struct Result {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

// Compares backward() against central differences for every parameter entry.
inline Result check(std::uint64_t seed, std::size_t n, std::size_t d_in, std::size_t d,
                    double h = 1e-5) {
  std::mt19937_64 rng(seed);
  mgm::ModelDims dims;
  dims.d_in = d_in;
  dims.d_intra = dims.d_cross = d;
  dims.intra_layers = 1 + rng() % 3;
  dims.cross_layers = 1 + rng() % 3;
  mgm::ModelParams p = mgm::ModelParams::initialize(dims, rng());
  // Nonzero biases so every code path carries signal.
  for (auto* t : p.tensors())
    if (t->rows() == 1)
      for (auto& v : t->data()) v = 0.1 * (double(rng() % 2001) / 1000.0 - 1.0);

  const mgm::VascularGraph base = random_tree(n, d_in, rng, "g0");
  std::vector<mgm::VascularGraph> graphs = {base};
  for (int k = 1; k < 3; ++k) {
    mgm::VascularGraph g = mgm::relabel_nodes(base, oracle::random_permutation(n, rng), "g" + std::to_string(k));
    std::vector<mgm::ArteryNode> nodes = g.nodes();
    std::normal_distribution<double> noise(0.0, 0.3);
    for (auto& node : nodes)
      for (auto& v : node.features) v += noise(rng);
    graphs.emplace_back(g.id(), g.view(), std::move(nodes), g.edges());
  }
  std::vector<const mgm::VascularGraph*> ptrs = {&graphs[0], &graphs[1], &graphs[2]};
  std::vector<mgm::Permutation> truth;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      truth.push_back(mgm::ground_truth_permutation(graphs[i], graphs[j]));

  const mgm::SinkhornOptions opt{10, 0.0};
  const auto bound = mgm::BoundParams::bind(p, true);
  mgm::ad::backward(mgm::bce_loss(mgm::net::pairwise_affinities(ptrs, bound, opt), truth));
  const auto grads = bound.gradients();

  Result r;
  auto tensors = p.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t e = 0; e < tensors[t]->size(); ++e) {
      double& x = tensors[t]->data()[e];
      const double keep = x;
      x = keep + h;
      const double up = tuple_loss(ptrs, truth, p, opt);
      x = keep - h;
      const double down = tuple_loss(ptrs, truth, p, opt);
      x = keep;
      const double fd = (up - down) / (2 * h);
      r.max_rel_err = std::max(r.max_rel_err, oracle::rel_err(grads[t].data()[e], fd));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace gradcheck
