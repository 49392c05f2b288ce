#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mgm/error.hpp"
#include "mgm/synth.hpp"
#include "mgm/training.hpp"

using namespace mgm;

namespace {

VascularGraph with_view(const VascularGraph& g, ViewAngle v, std::string id) {
  return VascularGraph(std::move(id), v, g.nodes(), g.edges());
}

double bce_oracle(const DenseMatrix& s, const Permutation& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double p = std::clamp(s(i, j), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = m[i] == int(j) ? 1.0 : 0.0;
      total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  return total;
}

Dataset small_dataset(double noise, std::uint64_t seed, std::size_t train = 6) {
  TreeSpec spec;
  spec.lad_segments = 2;
  spec.lcx_segments = 1;
  spec.d_branches = 1;
  spec.om_branches = 1;
  spec.feature_noise = noise;
  spec.d_in = feature::kCount;
  return build_dataset(spec, train + 4, {train, 0, 4}, seed);
}

TrainConfig small_config() {
  TrainConfig c;
  c.dims.d_in = feature::kCount;
  c.dims.d_intra = c.dims.d_cross = 16;
  c.dims.intra_layers = 2;
  c.dims.cross_layers = 2;
  c.lr = 1e-3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("enumerate tuples") {
  const VascularGraph anchor = fixture::lca5("anchor");
  std::vector<VascularGraph> three;
  for (int k = 0; k < 3; ++k) three.push_back(fixture::lca5("t" + std::to_string(k), 4, k + 2));
  const auto tuples = enumerate_tuples(anchor, three, 3, 0, 0);
  CHECK(tuples.size() == 3);
  CHECK(tuples[0].template_indices == std::vector<std::size_t>{0, 1});
  CHECK(tuples[2].template_indices == std::vector<std::size_t>{1, 2});
  REQUIRE(tuples[0].truth);
  CHECK(tuples[0].truth->size() == 3);

  std::vector<VascularGraph> other;
  for (int k = 0; k < 3; ++k) other.push_back(with_view(three[k], {FirstAxis::RAO, SecondAxis::CAU}, "o"));
  CHECK(enumerate_tuples(anchor, other, 3, 0, 0).empty());

  // 4 compatible among 7.
  std::vector<VascularGraph> mixed;
  std::vector<std::size_t> good;
  for (int k = 0; k < 7; ++k) {
    const bool ok = k % 2 == 1 || k == 0;
    mixed.push_back(ok ? three[0] : with_view(three[0], {FirstAxis::AP, SecondAxis::CRA}, "x"));
    if (ok) good.push_back(k);
  }
  const auto mt = enumerate_tuples(anchor, mixed, 4, 0, 0);
  std::vector<std::vector<std::size_t>> expect;
  for (std::size_t a = 0; a < good.size(); ++a)
    for (std::size_t b = a + 1; b < good.size(); ++b)
      for (std::size_t c = b + 1; c < good.size(); ++c) expect.push_back({good[a], good[b], good[c]});
  REQUIRE(mt.size() == expect.size());
  CHECK(mt.size() == 4);
  for (std::size_t k = 0; k < mt.size(); ++k) CHECK(mt[k].template_indices == expect[k]);

  const auto capped = enumerate_tuples(anchor, three, 3, 2, 7);
  CHECK(capped.size() == 2);
  CHECK(enumerate_tuples(anchor, three, 3, 2, 7)[0].template_indices == capped[0].template_indices);
  CHECK_THROWS_AS(enumerate_tuples(anchor, three, 1, 0, 0), ContractError);
}

TEST_CASE("bce loss examples") {
  const Permutation m({1, 0, 2});
  const ad::Var perfect = ad::constant(m.to_matrix());
  const double bound = 9.0 * -std::log(1.0 - kProbabilityClamp);
  const double loss = bce_loss({perfect}, {m}).scalar();
  CHECK(loss >= 0.0);
  CHECK(loss <= bound + 1e-12);

  const double uniform = bce_loss({ad::constant(DenseMatrix(2, 2, 0.5))}, {Permutation::identity(2)}).scalar();
  CHECK(uniform == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-14));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<ad::Var> s;
    std::vector<Permutation> truth;
    double expect = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
      const DenseMatrix p = sinkhorn(oracle::random_matrix(n, n, rng, 0.01, 1.0));
      const Permutation q = oracle::random_permutation(n, rng);
      s.push_back(ad::constant(p));
      truth.push_back(q);
      expect += bce_oracle(p, q);
    }
    CHECK(std::abs(bce_loss(s, truth).scalar() - expect) <= 1e-10);
  }
  CHECK_THROWS(bce_loss({perfect}, {}));
}

TEST_CASE("end-to-end gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto r = gradcheck::check(seed, 4, 5, 6);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_err < 1e-3);
  }
}

TEST_CASE("matching accuracy") {
  const Permutation a({1, 0, 2}), b({0, 2, 1});
  std::vector<DenseMatrix> s = {a.to_matrix(), b.to_matrix(), (a.inverse() * b).to_matrix()};
  for (auto& m : s)
    for (auto& v : m.data()) v = 0.9 * v + 0.1 / 3.0;
  CHECK(matching_accuracy(s, {a, b, a.inverse() * b}, 3) == 1.0);
}

TEST_CASE("train epoch bookkeeping and degenerate optimizer") {
  const Dataset d = small_dataset(0.0, 1);
  TrainConfig c = small_config();
  c.max_tuples_per_graph = 1;
  ModelParams p = ModelParams::initialize(c.dims, c.seed);
  AdamState adam;
  const EpochReport r = train_epoch(d.train, d.templates, p, c, adam, 1);
  CHECK(r.steps == d.train.size());
  CHECK(std::isfinite(r.mean_loss));

  c.lr = 0.0;
  ModelParams q = ModelParams::initialize(c.dims, c.seed);
  const ModelParams before = q;
  AdamState adam0;
  train_epoch(d.train, d.templates, q, c, adam0, 1);
  CHECK(q == before);
}

TEST_CASE("zero-noise training starts accurate and keeps reducing loss") {
  TreeSpec spec;
  spec.feature_noise = 0.0;
  spec.d_in = feature::kCount;
  const Dataset d = build_dataset(spec, 10, {6, 0, 4}, 2);
  TrainConfig c = small_config();
  c.dims = ModelDims{};
  c.dims.d_in = feature::kCount;
  c.lr = 1e-4;
  c.max_tuples_per_graph = 2;
  ModelParams p = ModelParams::initialize(c.dims, c.seed);
  AdamState adam;
  std::vector<EpochReport> reports;
  for (std::size_t e = 1; e <= 5; ++e) {
    reports.push_back(train_epoch(d.train, d.templates, p, c, adam, e));
    MESSAGE("epoch " << e << " loss " << reports.back().mean_loss << " acc " << reports.back().mean_accuracy);
  }
  // Chance level for 10 nodes is 0.1.
  CHECK(reports[0].mean_accuracy >= 0.5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(reports[e].mean_loss < reports[e - 1].mean_loss);
}

TEST_CASE("training is deterministic") {
  const Dataset d = small_dataset(0.05, 3);
  TrainConfig c = small_config();
  c.max_tuples_per_graph = 2;
  const auto run = [&] {
    ModelParams p = ModelParams::initialize(c.dims, c.seed);
    AdamState adam;
    for (std::size_t e = 1; e <= 2; ++e) train_epoch(d.train, d.templates, p, c, adam, e);
    return params_to_json(p).dump();
  };
  CHECK(run() == run());
}

TEST_CASE("loss halves within twenty epochs on noisy synthetic data") {
  const Dataset d = small_dataset(0.05, 4, 8);
  TrainConfig c = small_config();
  c.max_tuples_per_graph = 2;
  ModelParams p = ModelParams::initialize(c.dims, c.seed);
  AdamState adam;
  const double first = train_epoch(d.train, d.templates, p, c, adam, 1).mean_loss;
  double last = first;
  for (std::size_t e = 2; e <= 20; ++e) last = train_epoch(d.train, d.templates, p, c, adam, e).mean_loss;
  MESSAGE("epoch 1 loss " << first << ", epoch 20 loss " << last);
  CHECK(last < 0.5 * first);
}

TEST_CASE("config json") {
  TrainConfig c;
  c.m = 4;
  c.lr = 2.5e-4;
  c.max_tuples_per_graph = 3;
  const TrainConfig back = config_from_json(config_to_json(c));
  CHECK(back.m == 4);
  CHECK(back.lr == 2.5e-4);
  CHECK(back.max_tuples_per_graph == 3);
  CHECK_THROWS(config_from_json(nlohmann::json{{"bogus", 1}}));
  CHECK_THROWS(config_from_json(nlohmann::json{{"m", 1}}));
  CHECK(config_from_json(nlohmann::json{{"epochs", 7}}, c).m == 4);
}
