#include <algorithm>
#include <cmath>
#include <limits>

#include "mgm/error.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

namespace {

// Potential-based O(n^3) minimum-cost assignment over the rows/cols selected
// by `rows` and `cols` (equal length). Writes chosen column per selected row.
double min_cost_assignment(const DenseMatrix& cost, const std::vector<int>& rows,
                           const std::vector<int>& cols, std::vector<int>& chosen) {
  const std::size_t n = rows.size();
  chosen.assign(n, -1);
  if (n == 0) return 0.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    chosen[p[j] - 1] = cols[j - 1];
    total += cost(rows[p[j] - 1], cols[j - 1]);
  }
  return total;
}

}  // namespace

double assignment_score(const DenseMatrix& score, const Permutation& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += score(i, p[i]);
  return total;
}

Permutation hungarian(const DenseMatrix& score) {
  if (!score.is_square()) throw ContractError("hungarian: score matrix must be square");
  if (!score.all_finite()) throw ContractError("hungarian: non-finite score");
  const std::size_t n = score.rows();
  if (n == 0) return Permutation{};

  // Minimize (max - score) instead of maximizing score.
  const double top = *std::max_element(score.data().begin(), score.data().end());
  DenseMatrix cost(n, n);
  for (std::size_t i = 0; i < score.size(); ++i) cost.data()[i] = top - score.data()[i];

  std::vector<int> rows(n), cols(n), chosen;
  for (std::size_t i = 0; i < n; ++i) rows[i] = cols[i] = static_cast<int>(i);
  double remaining = min_cost_assignment(cost, rows, cols, chosen);
  const double tol = 1e-12 * std::max(1.0, score.max_abs()) * static_cast<double>(n);

  // Lexicographic tie-break: fix rows in order to the smallest column that
  // still admits an optimal completion.
  std::vector<int> assignment(n);
  std::vector<int> free_cols = cols;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<int> sub_rows(rows.begin() + static_cast<long>(r) + 1, rows.end());
    bool fixed = false;
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      const int c = free_cols[k];
      std::vector<int> sub_cols;
      sub_cols.reserve(free_cols.size() - 1);
      for (int fc : free_cols)
        if (fc != c) sub_cols.push_back(fc);
      std::vector<int> sub_chosen;
      const double rest = min_cost_assignment(cost, sub_rows, sub_cols, sub_chosen);
      const double candidate = cost(r, c) + rest;
      if (candidate <= remaining + tol || k + 1 == free_cols.size()) {
        assignment[r] = c;
        remaining = rest;
        free_cols.erase(free_cols.begin() + static_cast<long>(k));
        fixed = true;
        break;
      }
    }
    if (!fixed) throw ContractError("hungarian: internal tie-break failure");
  }
  return Permutation(std::move(assignment));
}

}  // namespace mgm
