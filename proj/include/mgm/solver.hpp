#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mgm/matrix.hpp"
#include "mgm/numerics.hpp"
#include "mgm/permutation.hpp"

namespace mgm {

// nm x nm symmetric block matrix: identity diagonal blocks, block (J, I) is the
// transpose of block (I, J).
class JointAffinity {
 public:
  using BlockMap = std::map<std::pair<std::size_t, std::size_t>, DenseMatrix>;

  // Builds from the upper-triangular blocks (I < J).
  static JointAffinity assemble(const BlockMap& blocks, std::size_t m, std::size_t n);
  // Wraps an existing matrix after checking every invariant.
  static JointAffinity from_matrix(DenseMatrix matrix, std::size_t m, std::size_t n);

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  const DenseMatrix& matrix() const { return matrix_; }
  DenseMatrix block(std::size_t i, std::size_t j) const;

 private:
  JointAffinity(DenseMatrix matrix, std::size_t m, std::size_t n);
  void validate() const;

  std::size_t m_ = 0;
  std::size_t n_ = 0;
  DenseMatrix matrix_;
};

// Top-n eigenpairs of the joint matrix folded into U * Sigma^(1/2).
struct SpectralFactor {
  std::size_t m = 0;
  std::size_t n = 0;
  DenseMatrix u_hat;           // nm x n
  std::vector<double> values;  // top-n eigenvalues, descending, before clamping

  DenseMatrix block(std::size_t graph) const;
};

SpectralFactor spectral_factor(const JointAffinity& joint);

// Hungarian on U_i * U_j^T.
Permutation pairwise_match(const SpectralFactor& factor, std::size_t i, std::size_t j);

// Pairwise permutations made cycle-consistent by routing through a pivot graph.
class MatchResult {
 public:
  MatchResult(std::size_t m, std::size_t n, std::size_t pivot, std::vector<Permutation> table);

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t pivot() const { return pivot_; }
  // M^{IJ}: node i of graph I corresponds to node at(I,J)[i] of graph J.
  const Permutation& at(std::size_t i, std::size_t j) const { return table_[i * m_ + j]; }

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t pivot_;
  std::vector<Permutation> table_;
};

MatchResult consistent_matchings(const SpectralFactor& factor, std::size_t pivot);

// All-pairs table of (possibly inconsistent) permutations. Missing (J, I)
// entries are read as the inverse of (I, J).
class PairwiseMatches {
 public:
  explicit PairwiseMatches(std::size_t m) : m_(m), table_(m * m) {}
  static PairwiseMatches from(const MatchResult& result);
  static PairwiseMatches direct(const SpectralFactor& factor);

  std::size_t m() const { return m_; }
  void set(std::size_t i, std::size_t j, Permutation p) { table_[i * m_ + j] = std::move(p); }
  Permutation get(std::size_t i, std::size_t j) const;

 private:
  std::size_t m_;
  std::vector<std::optional<Permutation>> table_;
};

// Fraction of ordered triples (I, J, K) of distinct graphs with
// M^{IJ} != M^{IK} * M^{KJ}.
double cycle_defect(const PairwiseMatches& matches);

}  // namespace mgm

namespace mgm {

// Full inference path from the upper-triangular cross-graph affinities of a
// tuple (pair order (0,1), (0,2), ..., (m-2,m-1)) to cycle-consistent
// permutations.
struct TupleMatch {
  JointAffinity joint;
  SpectralFactor factor;
  MatchResult matches;
};

TupleMatch match_tuple(const std::vector<DenseMatrix>& upper_blocks, std::size_t m, std::size_t pivot);

}  // namespace mgm
