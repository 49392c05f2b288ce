#include "mgm/permutation.hpp"

#include <numeric>
#include <string>

#include "mgm/error.hpp"

namespace mgm {

Permutation::Permutation(std::vector<int> assignment) : assignment_(std::move(assignment)) {
  const int n = static_cast<int>(assignment_.size());
  std::vector<bool> seen(assignment_.size(), false);
  for (int col : assignment_) {
    if (col < 0 || col >= n || seen[col]) {
      throw ValidationError("permutation: assignment is not a bijection on {0.." +
                            std::to_string(n - 1) + "}");
    }
    seen[col] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> a(n);
  std::iota(a.begin(), a.end(), 0);
  return Permutation(std::move(a));
}

Permutation Permutation::from_matrix(const DenseMatrix& m) {
  if (!m.is_square()) throw ValidationError("permutation: matrix is not square");
  std::vector<int> a(m.rows(), -1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (v == 1.0) {
        if (a[r] != -1) throw ValidationError("permutation: row with more than one 1");
        a[r] = static_cast<int>(c);
      } else if (v != 0.0) {
        throw ValidationError("permutation: entry other than 0 or 1");
      }
    }
    if (a[r] == -1) throw ValidationError("permutation: row without a 1");
  }
  return Permutation(std::move(a));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(assignment_.size());
  for (std::size_t i = 0; i < assignment_.size(); ++i) inv[assignment_[i]] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

DenseMatrix Permutation::to_matrix() const {
  DenseMatrix m(size(), size());
  for (std::size_t i = 0; i < size(); ++i) m(i, assignment_[i]) = 1.0;
  return m;
}

Permutation operator*(const Permutation& lhs, const Permutation& rhs) {
  if (lhs.size() != rhs.size()) throw ContractError("permutation compose: size mismatch");
  std::vector<int> out(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) out[i] = rhs[lhs[i]];
  return Permutation(std::move(out));
}

}  // namespace mgm
