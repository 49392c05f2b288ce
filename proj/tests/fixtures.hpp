#pragma once

#include <random>
#include <string>
#include <vector>

#include "mgm/graph.hpp"

namespace fixture {

inline mgm::ArteryNode node(int id, std::optional<mgm::ArteryLabel> label, std::vector<double> f) {
  mgm::ArteryNode n;
  n.id = id;
  n.label = label;
  n.features = std::move(f);
  return n;
}

inline mgm::ArteryLabel L(mgm::CoarseLabel c, std::optional<int> sub = std::nullopt) {
  return mgm::ArteryLabel(c, sub);
}

// LMA-LAD1-LAD2, LMA-LCX1, LCX1-OM1 with random d-dimensional features.
inline mgm::VascularGraph lca5(std::string id = "lca5", std::size_t d = 4, unsigned seed = 1) {
  using C = mgm::CoarseLabel;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto feats = [&] {
    std::vector<double> f(d);
    for (auto& v : f) v = u(rng);
    return f;
  };
  std::vector<mgm::ArteryNode> nodes = {
      node(0, L(C::LMA), feats()), node(1, L(C::LAD, 1), feats()), node(2, L(C::LAD, 2), feats()),
      node(3, L(C::LCX, 1), feats()), node(4, L(C::OM, 1), feats())};
  return mgm::VascularGraph(std::move(id), {}, std::move(nodes), {{0, 1}, {1, 2}, {0, 3}, {3, 4}});
}

}  // namespace fixture
