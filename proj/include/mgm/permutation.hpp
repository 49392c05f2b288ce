#pragma once

#include <cstddef>
#include <vector>

#include "mgm/matrix.hpp"

namespace mgm {

// Bijection on {0..n-1} stored as an assignment array: row i maps to column
// assignment()[i]. As a matrix, entry (i, assignment[i]) is 1.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> assignment);

  static Permutation identity(std::size_t n);
  // Throws ValidationError unless `m` is a 0/1 matrix with exactly one 1 per row and column.
  static Permutation from_matrix(const DenseMatrix& m);

  std::size_t size() const { return assignment_.size(); }
  int operator[](std::size_t row) const { return assignment_[row]; }
  const std::vector<int>& assignment() const { return assignment_; }

  Permutation inverse() const;
  DenseMatrix to_matrix() const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<int> assignment_;
};

// Matrix product lhs * rhs: row i goes to rhs[lhs[i]].
Permutation operator*(const Permutation& lhs, const Permutation& rhs);

}  // namespace mgm
