#include "mgm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgm/error.hpp"

namespace mgm {

JointAffinity::JointAffinity(DenseMatrix matrix, std::size_t m, std::size_t n)
    : m_(m), n_(n), matrix_(std::move(matrix)) {}

JointAffinity JointAffinity::assemble(const BlockMap& blocks, std::size_t m, std::size_t n) {
  if (m < 1 || n < 1) throw ValidationError("joint affinity: m and n must be positive");
  DenseMatrix joint(m * n, m * n);
  for (std::size_t g = 0; g < m; ++g)
    for (std::size_t k = 0; k < n; ++k) joint(g * n + k, g * n + k) = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      auto it = blocks.find({i, j});
      if (it == blocks.end()) {
        throw ValidationError("joint affinity: missing block (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
      const DenseMatrix& b = it->second;
      if (b.rows() != n || b.cols() != n) {
        throw ValidationError("joint affinity: block (" + std::to_string(i) + "," +
                              std::to_string(j) + ") is not " + std::to_string(n) + "x" +
                              std::to_string(n));
      }
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          joint(i * n + r, j * n + c) = b(r, c);
          joint(j * n + c, i * n + r) = b(r, c);
        }
      }
    }
  }
  JointAffinity result(std::move(joint), m, n);
  result.validate();
  return result;
}

JointAffinity JointAffinity::from_matrix(DenseMatrix matrix, std::size_t m, std::size_t n) {
  if (matrix.rows() != m * n || matrix.cols() != m * n) {
    throw ValidationError("joint affinity: matrix is not nm x nm");
  }
  JointAffinity result(std::move(matrix), m, n);
  result.validate();
  return result;
}

void JointAffinity::validate() const {
  const std::size_t size = m_ * n_;
  for (std::size_t p = 0; p < size; ++p) {
    for (std::size_t q = 0; q < size; ++q) {
      const double v = matrix_(p, q);
      if (!std::isfinite(v)) throw ValidationError("joint affinity: non-finite entry");
      if (v != matrix_(q, p)) {
        throw ValidationError("joint affinity: not symmetric at (" + std::to_string(p) + "," +
                              std::to_string(q) + ")");
      }
      const bool diagonal_block = p / n_ == q / n_;
      if (diagonal_block) {
        if (v != (p == q ? 1.0 : 0.0)) {
          throw ValidationError("joint affinity: diagonal block is not the identity");
        }
      } else if (v < 0.0 || v > 1.0) {
        throw ValidationError("joint affinity: off-diagonal entry outside [0, 1]");
      }
    }
  }
}

DenseMatrix JointAffinity::block(std::size_t i, std::size_t j) const {
  DenseMatrix b(n_, n_);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = 0; c < n_; ++c) b(r, c) = matrix_(i * n_ + r, j * n_ + c);
  return b;
}

DenseMatrix SpectralFactor::block(std::size_t graph) const {
  if (graph >= m) throw ContractError("spectral factor: graph index out of range");
  DenseMatrix b(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) b(r, c) = u_hat(graph * n + r, c);
  return b;
}

SpectralFactor spectral_factor(const JointAffinity& joint) {
  const EigenResult eig = sym_eig(joint.matrix());
  SpectralFactor f;
  f.m = joint.m();
  f.n = joint.n();
  f.u_hat = DenseMatrix(f.m * f.n, f.n);
  f.values.assign(eig.values.begin(), eig.values.begin() + static_cast<long>(f.n));
  for (std::size_t k = 0; k < f.n; ++k) {
    const double root = std::sqrt(std::max(0.0, eig.values[k]));
    for (std::size_t r = 0; r < f.m * f.n; ++r) f.u_hat(r, k) = eig.vectors(r, k) * root;
  }
  return f;
}

Permutation pairwise_match(const SpectralFactor& factor, std::size_t i, std::size_t j) {
  if (i >= factor.m || j >= factor.m) {
    throw ContractError("pairwise_match: graph index out of range");
  }
  if (i == j) throw ContractError("pairwise_match: graph indices must differ");
  return hungarian(matmul_bt(factor.block(i), factor.block(j)));
}

MatchResult::MatchResult(std::size_t m, std::size_t n, std::size_t pivot,
                         std::vector<Permutation> table)
    : m_(m), n_(n), pivot_(pivot), table_(std::move(table)) {
  if (table_.size() != m_ * m_) throw ContractError("match result: table size");
}

MatchResult consistent_matchings(const SpectralFactor& factor, std::size_t pivot) {
  if (pivot >= factor.m) throw ContractError("consistent_matchings: pivot out of range");
  const std::size_t m = factor.m;
  std::vector<Permutation> to_pivot(m);
  for (std::size_t i = 0; i < m; ++i) {
    to_pivot[i] = (i == pivot) ? Permutation::identity(factor.n) : pairwise_match(factor, i, pivot);
  }
  std::vector<Permutation> table(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      table[i * m + j] = (i == j) ? Permutation::identity(factor.n)
                                  : to_pivot[i] * to_pivot[j].inverse();
    }
  }
  return MatchResult(m, factor.n, pivot, std::move(table));
}

PairwiseMatches PairwiseMatches::from(const MatchResult& result) {
  PairwiseMatches pm(result.m());
  for (std::size_t i = 0; i < result.m(); ++i)
    for (std::size_t j = 0; j < result.m(); ++j)
      if (i != j) pm.set(i, j, result.at(i, j));
  return pm;
}

PairwiseMatches PairwiseMatches::direct(const SpectralFactor& factor) {
  PairwiseMatches pm(factor.m);
  for (std::size_t i = 0; i < factor.m; ++i)
    for (std::size_t j = 0; j < factor.m; ++j)
      if (i != j) pm.set(i, j, pairwise_match(factor, i, j));
  return pm;
}

Permutation PairwiseMatches::get(std::size_t i, std::size_t j) const {
  if (i >= m_ || j >= m_) throw ContractError("pairwise matches: index out of range");
  if (const auto& p = table_[i * m_ + j]) return *p;
  if (const auto& q = table_[j * m_ + i]) return q->inverse();
  throw ContractError("pairwise matches: missing pair (" + std::to_string(i) + "," +
                      std::to_string(j) + ")");
}

double cycle_defect(const PairwiseMatches& matches) {
  const std::size_t m = matches.m();
  std::size_t triples = 0;
  std::size_t broken = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        ++triples;
        if (!(matches.get(i, j) == matches.get(i, k) * matches.get(k, j))) ++broken;
      }
    }
  }
  return triples == 0 ? 0.0 : static_cast<double>(broken) / static_cast<double>(triples);
}

}  // namespace mgm

namespace mgm {

TupleMatch match_tuple(const std::vector<DenseMatrix>& upper_blocks, std::size_t m,
                       std::size_t pivot) {
  if (m < 2 || upper_blocks.size() != m * (m - 1) / 2) {
    throw ContractError("match_tuple: expected m(m-1)/2 blocks");
  }
  const std::size_t n = upper_blocks.front().rows();
  JointAffinity::BlockMap blocks;
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) blocks.emplace(std::make_pair(i, j), upper_blocks[k++]);
  JointAffinity joint = JointAffinity::assemble(blocks, m, n);
  SpectralFactor factor = spectral_factor(joint);
  MatchResult matches = consistent_matchings(factor, pivot);
  return {std::move(joint), std::move(factor), std::move(matches)};
}

}  // namespace mgm
