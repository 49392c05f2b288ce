#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mgm/embedding.hpp"
#include "mgm/error.hpp"
#include "oracles.hpp"

using namespace mgm;
using Mat = std::vector<std::vector<double>>;

namespace {

ModelDims small_dims(std::size_t d_in, std::size_t d, std::size_t L, std::size_t C) {
  ModelDims dims;
  dims.d_in = d_in;
  dims.d_intra = dims.d_cross = d;
  dims.intra_layers = L;
  dims.cross_layers = C;
  return dims;
}

// Scalar-loop versions of the forward pass.
Mat layer_loop(const Mat& x, const MlpLayer& l) {
  Mat y(x.size(), std::vector<double>(l.out_dim(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
      double s = l.bias(0, o);
      for (std::size_t k = 0; k < l.in_dim(); ++k) s += l.weight(o, k) * x[i][k];
      y[i][o] = l.activation == Activation::ReLU ? std::max(0.0, s) : s;
    }
  }
  return y;
}

Mat concat_loop(const Mat& a, const Mat& b) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i].insert(out[i].end(), b[i].begin(), b[i].end());
  return out;
}

Mat intra_loop(const VascularGraph& g, const ModelParams& p) {
  Mat e;
  for (const auto& n : g.nodes()) e.push_back(n.features);
  for (const auto& l : p.intra) {
    Mat agg(e.size(), std::vector<double>(e[0].size(), 0.0));
    for (std::size_t i = 0; i < e.size(); ++i)
      for (int nb : g.neighbors(i))
        for (std::size_t k = 0; k < e[0].size(); ++k) agg[i][k] += e[nb][k];
    e = layer_loop(concat_loop(agg, e), l);
  }
  return e;
}

DenseMatrix affinity_loop(const Mat& a, const Mat& b, const DenseMatrix& A) {
  const std::size_t n = a.size(), d = a[0].size();
  DenseMatrix logits(n, n);
  double top = -1e300;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q) s += a[i][p] * A(p, q) * b[j][q];
      logits(i, j) = s / std::sqrt(double(d));
      top = std::max(top, logits(i, j));
    }
  for (auto& v : logits.data()) v = std::exp(std::max(v - top, -700.0));
  return sinkhorn(logits);
}

Mat mix_loop(const DenseMatrix& s, const Mat& e, bool transpose) {
  Mat out(e.size(), std::vector<double>(e[0].size(), 0.0));
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = 0; j < e.size(); ++j)
      for (std::size_t k = 0; k < e[0].size(); ++k)
        out[i][k] += (transpose ? s(j, i) : s(i, j)) * e[j][k];
  return out;
}

Mat rows_of(const DenseMatrix& m) { return m.to_nested(); }

}  // namespace

TEST_CASE("single node graph aggregates a zero neighbor sum") {
  ModelParams p = ModelParams::initialize(small_dims(3, 4, 1, 0), 1);
  const VascularGraph g("solo", {}, {fixture::node(0, std::nullopt, {0.5, -1.0, 2.0})}, {});
  const NodeEmbeddings e = intra_embed(g, p);
  CHECK(rows_of(e.matrix) == layer_loop({{0.0, 0.0, 0.0, 0.5, -1.0, 2.0}}, p.intra[0]));
}

TEST_CASE("two node path with identity halves") {
  ModelParams p = ModelParams::initialize(small_dims(2, 2, 1, 0), 1);
  p.intra[0].weight = DenseMatrix::from_rows({{1, 0, 1, 0}, {0, 1, 0, 1}});
  p.intra[0].bias = DenseMatrix(1, 2, 0.0);
  p.intra[0].activation = Activation::ReLU;
  const VascularGraph g("path", {},
                        {fixture::node(0, std::nullopt, {1, 0}), fixture::node(1, std::nullopt, {0, 1})},
                        {{0, 1}});
  CHECK(intra_embed(g, p).matrix == DenseMatrix::from_rows({{1, 1}, {1, 1}}));
}

TEST_CASE("intra embedding is permutation equivariant") {
  const ModelParams p = ModelParams::initialize(small_dims(4, 6, 3, 2), 2);
  const VascularGraph g = fixture::lca5("g", 4, 3);
  std::mt19937_64 rng(8);
  const Permutation pi = oracle::random_permutation(5, rng);
  const DenseMatrix a = intra_embed(g, p).matrix;
  const DenseMatrix b = intra_embed(relabel_nodes(g, pi, "h"), p).matrix;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 6; ++k) CHECK(b(pi[i], k) == doctest::Approx(a(i, k)).epsilon(1e-12));
}

TEST_CASE("intra affinity examples") {
  ModelParams p = ModelParams::initialize(small_dims(2, 2, 1, 0), 1);
  p.a_intra = DenseMatrix::identity(2);
  const NodeEmbeddings e{"x", DenseMatrix::from_rows({{1, 0}, {0, 1}}), EmbeddingStage::Intra};
  const DenseMatrix s = intra_affinity(e, e, p);
  const double big = std::exp(1.0 / std::sqrt(2.0));
  CHECK(max_abs_diff(s, oracle::sinkhorn_loop(DenseMatrix::from_rows({{big, 1}, {1, big}}))) < 1e-9);
  CHECK(s(0, 0) > s(0, 1));

  const NodeEmbeddings sep{"y", DenseMatrix::from_rows({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}}),
                           EmbeddingStage::Intra};
  ModelParams p3 = ModelParams::initialize(small_dims(3, 3, 1, 0), 1);
  p3.a_intra = DenseMatrix::identity(3);
  const DenseMatrix s3 = intra_affinity(sep, sep, p3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(s3(i, i) > s3(i, j));
}

TEST_CASE("affinities are positive and doubly stochastic") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const ModelParams p = ModelParams::initialize(small_dims(4, 8, 2, 2), rng());
    const VascularGraph a = fixture::lca5("a", 4, unsigned(rng())), b = fixture::lca5("b", 4, unsigned(rng()));
    const auto [ca, cb] = cross_embed(intra_embed(a, p), intra_embed(b, p),
                                      intra_affinity(intra_embed(a, p), intra_embed(b, p), p), p);
    for (const DenseMatrix& s : {intra_affinity(intra_embed(a, p), intra_embed(b, p), p), cross_affinity(ca, cb, p)}) {
      for (std::size_t i = 0; i < 5; ++i) {
        double r = 0.0, c = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
          CHECK(s(i, j) > 0.0);
          r += s(i, j);
          c += s(j, i);
        }
        CHECK(std::abs(r - 1.0) <= 1e-6);
        CHECK(std::abs(c - 1.0) <= 1e-6);
      }
    }
  }
}

TEST_CASE("cross embedding examples") {
  ModelParams p = ModelParams::initialize(small_dims(2, 2, 1, 1), 1);
  p.cross[0].weight = DenseMatrix::from_rows({{1, 0, 1, 0}, {0, 1, 0, 1}});
  p.cross[0].bias = DenseMatrix::from_rows({{0.5, -1.0}});
  p.cross[0].activation = Activation::ReLU;
  const NodeEmbeddings ei{"i", DenseMatrix::from_rows({{1, 0}, {0, 1}}), EmbeddingStage::Intra};
  const NodeEmbeddings ej{"j", DenseMatrix::from_rows({{2, 0}, {0, 3}}), EmbeddingStage::Intra};
  const DenseMatrix s = DenseMatrix::from_rows({{0.75, 0.25}, {0.25, 0.75}});
  const auto [ci, cj] = cross_embed(ei, ej, s, p);
  CHECK(ci.stage == EmbeddingStage::Cross);
  CHECK(max_abs_diff(ci.matrix, DenseMatrix::from_rows({{3.0, 0.0}, {1.0, 2.25}})) < 1e-15);
  CHECK(max_abs_diff(cj.matrix, DenseMatrix::from_rows({{3.25, 0.0}, {0.75, 2.75}})) < 1e-15);

  SUBCASE("hard assignment pulls the partner row") {
    p.cross[0].weight = DenseMatrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}});
    p.cross[0].bias = DenseMatrix(1, 2, 0.0);
    p.cross[0].activation = Activation::None;
    const auto [hi, hj] = cross_embed(ei, ej, Permutation({1, 0}).to_matrix(), p);
    CHECK(hi.matrix == DenseMatrix::from_rows({{0, 3}, {2, 0}}));
    CHECK(hj.matrix == DenseMatrix::from_rows({{0, 1}, {1, 0}}));
  }
  SUBCASE("uniform mixing gives every node the same aggregate") {
    p.cross[0].weight = DenseMatrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}});
    p.cross[0].bias = DenseMatrix(1, 2, 0.0);
    p.cross[0].activation = Activation::None;
    const auto [ui, uj] = cross_embed(ei, ej, DenseMatrix(2, 2, 0.5), p);
    CHECK(ui.matrix(0, 0) == ui.matrix(1, 0));
    CHECK(ui.matrix(0, 1) == ui.matrix(1, 1));
  }
}

TEST_CASE("zero cross affinity matrix gives a uniform result") {
  ModelParams p = ModelParams::initialize(small_dims(4, 5, 2, 1), 3);
  p.a_cross = DenseMatrix(5, 5, 0.0);
  const VascularGraph a = fixture::lca5("a"), b = fixture::lca5("b", 4, 7);
  const auto ea = intra_embed(a, p), eb = intra_embed(b, p);
  const auto [ca, cb] = cross_embed(ea, eb, intra_affinity(ea, eb, p), p);
  const DenseMatrix s = cross_affinity(ca, cb, p);
  for (double v : s.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("full forward pass matches the scalar-loop oracle") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const ModelParams p = ModelParams::initialize(small_dims(4, 6, 2, 2), rng());
    const VascularGraph a = fixture::lca5("a", 4, unsigned(rng())), b = fixture::lca5("b", 4, unsigned(rng()));
    const Mat la = intra_loop(a, p), lb = intra_loop(b, p);
    const DenseMatrix s_bar = affinity_loop(la, lb, p.a_intra);
    Mat xa = la, xb = lb;
    for (const auto& l : p.cross) {
      const Mat na = layer_loop(concat_loop(mix_loop(s_bar, xb, false), xa), l);
      const Mat nb = layer_loop(concat_loop(mix_loop(s_bar, xa, true), xb), l);
      xa = na;
      xb = nb;
    }
    const DenseMatrix expect = affinity_loop(xa, xb, p.a_cross);

    const BoundParams bound = BoundParams::bind(p, false);
    const auto got = net::pairwise_affinities({&a, &b}, bound, {});
    REQUIRE(got.size() == 1);
    CHECK(max_abs_diff(got[0].value(), expect) < 1e-10);
  }
}

TEST_CASE("without cross layers the cross affinity is the intra form with A_cross") {
  ModelParams p = ModelParams::initialize(small_dims(4, 6, 2, 0), 4);
  const VascularGraph a = fixture::lca5("a"), b = fixture::lca5("b", 4, 5);
  const auto ea = intra_embed(a, p), eb = intra_embed(b, p);
  const auto [ca, cb] = cross_embed(ea, eb, intra_affinity(ea, eb, p), p);
  ModelParams swapped = p;
  swapped.a_intra = p.a_cross;
  CHECK(cross_affinity(ca, cb, p) == intra_affinity(ea, eb, swapped));
}

TEST_CASE("pairwise affinities are equivariant to node order") {
  const ModelParams p = ModelParams::initialize(small_dims(4, 6, 2, 2), 5);
  const VascularGraph a = fixture::lca5("a", 4, 2), b = fixture::lca5("b", 4, 3);
  std::mt19937_64 rng(6);
  const Permutation pi = oracle::random_permutation(5, rng);
  const VascularGraph a2 = relabel_nodes(a, pi, "a2");
  const BoundParams bound = BoundParams::bind(p, false);
  const DenseMatrix s = net::pairwise_affinities({&a, &b}, bound, {})[0].value();
  const DenseMatrix s2 = net::pairwise_affinities({&a2, &b}, bound, {})[0].value();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(s2(pi[i], j) == doctest::Approx(s(i, j)).epsilon(1e-10));
}

TEST_CASE("embedding contracts") {
  const ModelParams p = ModelParams::initialize(small_dims(3, 4, 1, 1), 1);
  CHECK_THROWS_AS(intra_embed(fixture::lca5("a", 4), p), ValidationError);
  const NodeEmbeddings e{"x", DenseMatrix(5, 4, 1.0), EmbeddingStage::Intra};
  CHECK_THROWS_AS(cross_affinity(e, e, p), ContractError);
  const NodeEmbeddings small{"y", DenseMatrix(4, 4, 1.0), EmbeddingStage::Intra};
  CHECK_THROWS_AS(intra_affinity(e, small, p), ValidationError);
}
