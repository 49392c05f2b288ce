#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mgm/error.hpp"
#include "mgm/numerics.hpp"
#include "oracles.hpp"

using namespace mgm;

TEST_CASE("permutation validation and algebra") {
  CHECK_THROWS_AS(Permutation({0, 0}), ValidationError);
  CHECK_THROWS_AS(Permutation({0, 2}), ValidationError);
  const Permutation p({2, 0, 1});
  const DenseMatrix m = p.to_matrix();
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      row += m(i, j);
      col += m(j, i);
    }
    CHECK(row == 1.0);
    CHECK(col == 1.0);
  }
  CHECK(Permutation::from_matrix(m) == p);
  CHECK(p * p.inverse() == Permutation::identity(3));
  CHECK_THROWS_AS(Permutation::from_matrix(DenseMatrix(2, 2, 0.5)), ValidationError);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto a = oracle::random_permutation(5, rng), b = oracle::random_permutation(5, rng);
    CHECK(Permutation::from_matrix(matmul(a.to_matrix(), b.to_matrix())) == a * b);
  }
}

TEST_CASE("sinkhorn examples") {
  const DenseMatrix half = DenseMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  CHECK(sinkhorn(half) == half);
  CHECK(sinkhorn(DenseMatrix::from_rows({{7.0}}))(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  const DenseMatrix m = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const DenseMatrix ref = oracle::sinkhorn_loop(m);
  CHECK(max_abs_diff(sinkhorn(m, {1000, 1e-13}), ref) < 1e-10);
  CHECK(max_abs_diff(sinkhorn(m), ref) < 1e-5);
}

TEST_CASE("sinkhorn contract and scale invariance") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 12;
    const DenseMatrix m = oracle::random_matrix(n, n, rng, 0.05, 3.0);
    const DenseMatrix s = sinkhorn(m);
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        r += s(i, j);
        c += s(j, i);
        CHECK(s(i, j) > 0.0);
      }
      CHECK(std::abs(r - 1.0) <= 1e-6);
      CHECK(std::abs(c - 1.0) <= 1e-6);
    }
    CHECK(max_abs_diff(sinkhorn(4.5 * m), s) <= 1e-9);
  }
}

TEST_CASE("sinkhorn rejects bad input") {
  CHECK_THROWS(sinkhorn(DenseMatrix::from_rows({{1, 0}, {1, 1}})));
  CHECK_THROWS(sinkhorn(DenseMatrix(2, 3, 1.0)));
  CHECK_THROWS(sinkhorn(DenseMatrix::from_rows({{1, NAN}, {1, 1}})));
}

TEST_CASE("hungarian examples") {
  DenseMatrix diag(3, 3, 0.0);
  for (int i = 0; i < 3; ++i) diag(i, i) = 10.0;
  CHECK(hungarian(diag) == Permutation::identity(3));
  CHECK(hungarian(DenseMatrix::from_rows({{0, 1}, {1, 0}})) == Permutation({1, 0}));
  const DenseMatrix s = DenseMatrix::from_rows({{1, 2, 3}, {2, 4, 1}, {0, 1, 5}});
  const Permutation p = hungarian(s);
  CHECK(p == Permutation({0, 1, 2}));
  CHECK(assignment_score(s, p) == 10.0);
  double best = 0.0;
  CHECK(oracle::brute_force_assignment(s, &best) == p.assignment());
  CHECK(best == 10.0);
}

TEST_CASE("hungarian ties resolve to the lexicographically smallest assignment") {
  CHECK(hungarian(DenseMatrix(4, 4, 1.0)) == Permutation::identity(4));
  // Two optima: (0,1,2) and (1,0,2); the first wins.
  const DenseMatrix s = DenseMatrix::from_rows({{1, 1, 0}, {1, 1, 0}, {0, 0, 1}});
  CHECK(hungarian(s) == Permutation({0, 1, 2}));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 4;
    DenseMatrix m(n, n);
    for (auto& v : m.data()) v = double(rng() % 3);
    CHECK(hungarian(m).assignment() == oracle::brute_force_assignment(m));
  }
}

TEST_CASE("hungarian matches exhaustive search") {
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int t = 0; t < 100; ++t) {
      const DenseMatrix m = oracle::random_matrix(n, n, rng, -5.0, 5.0);
      CHECK(hungarian(m).assignment() == oracle::brute_force_assignment(m));
    }
  }
}

TEST_CASE("sym_eig examples") {
  auto e = sym_eig(DenseMatrix::identity(2));
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(1.0));

  e = sym_eig(DenseMatrix::from_rows({{3, 0}, {0, 1}}));
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(1, 1)) == doctest::Approx(1.0));

  e = sym_eig(DenseMatrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(r));
  CHECK(e.vectors(0, 0) * e.vectors(1, 0) > 0.0);
  CHECK(e.vectors(0, 1) * e.vectors(1, 1) < 0.0);
}

TEST_CASE("sym_eig invariants on random symmetric matrices") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng() % 25;
    DenseMatrix a = oracle::random_matrix(n, n, rng);
    a = 0.5 * (a + a.transposed());
    const auto e = sym_eig(a);
    for (std::size_t k = 1; k < n; ++k) CHECK(e.values[k - 1] >= e.values[k]);
    CHECK(max_abs_diff(matmul_at(e.vectors, e.vectors), DenseMatrix::identity(n)) <= 1e-8);
    const double norm = a.norm_inf();
    DenseMatrix lambda(n, n, 0.0);
    for (std::size_t k = 0; k < n; ++k) lambda(k, k) = e.values[k];
    const DenseMatrix av = matmul(a, e.vectors);
    const DenseMatrix vl = matmul(e.vectors, lambda);
    CHECK(max_abs_diff(av, vl) <= 1e-7 * norm);
    const DenseMatrix rebuilt = matmul_bt(vl, e.vectors);
    CHECK((a - rebuilt).norm_inf() <= 1e-7 * norm);
  }
}

TEST_CASE("distance transform examples") {
  BinaryMask dot(5, 5);
  dot.set(2, 2, true);
  const DenseMatrix d = euclidean_distance_transform(dot);
  CHECK(d(2, 2) == 1.0);
  CHECK(d(0, 0) == 0.0);

  BinaryMask disk(21, 21);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x)
      if ((x - 10) * (x - 10) + (y - 10) * (y - 10) <= 25) disk.set(x, y, true);
  const DenseMatrix dd = euclidean_distance_transform(disk);
  CHECK(std::abs(dd(10, 10) - 5.0) <= 0.5);
  CHECK(squared_distance_transform(disk) == oracle::brute_force_sq_edt(disk));
}

TEST_CASE("squared distance transform equals the brute-force oracle") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = 1 + rng() % 20, h = 1 + rng() % 20;
    BinaryMask m(w, h);
    const double density = 0.3 + 0.65 * double(rng() % 100) / 100.0;
    std::bernoulli_distribution fg(density);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) m.set(x, y, fg(rng));
    if (!m.has_background()) m.set(0, 0, false);
    CHECK(squared_distance_transform(m) == oracle::brute_force_sq_edt(m));
  }
}

TEST_CASE("distance transform requires background") {
  BinaryMask full(3, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) full.set(x, y, true);
  CHECK_THROWS_AS(squared_distance_transform(full), ContractError);
}

TEST_CASE("pgm round trip") {
  BinaryMask m(7, 4);
  m.set(1, 2, true);
  m.set(6, 3, true);
  const auto path = std::filesystem::temp_directory_path() / "mgm_test_mask.pgm";
  write_pgm_mask(m, path);
  const BinaryMask back = read_pgm_mask(path);
  REQUIRE(back.width() == 7);
  REQUIRE(back.height() == 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 7; ++x) CHECK(back.at(x, y) == m.at(x, y));
  std::filesystem::remove(path);
}
