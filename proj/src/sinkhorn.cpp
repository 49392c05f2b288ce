#include <cmath>

#include "mgm/error.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

DenseMatrix sinkhorn(const DenseMatrix& m, SinkhornOptions options) {
  if (!m.is_square()) throw ContractError("sinkhorn: matrix must be square");
  for (double v : m.data()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractError("sinkhorn: entries must be finite and strictly positive");
    }
  }
  const std::size_t n = m.rows();
  DenseMatrix s = m;
  std::vector<double> col_sums(n);
  for (int it = 0; it < options.max_iter; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (double v : s.row(r)) sum += v;
      for (double& v : s.row(r)) v /= sum;
    }
    std::fill(col_sums.begin(), col_sums.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) col_sums[c] += s(r, c);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) s(r, c) /= col_sums[c];

    double deviation = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (double v : s.row(r)) sum += v;
      deviation = std::max(deviation, std::abs(sum - 1.0));
    }
    if (deviation <= options.tol) break;
  }
  return s;
}

}  // namespace mgm
