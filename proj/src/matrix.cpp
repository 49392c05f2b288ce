#include "mgm/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "mgm/error.hpp"

namespace mgm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const DenseMatrix& m) {
  return ConstMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

Map view(DenseMatrix& m) {
  return Map(m.data().data(), static_cast<Eigen::Index>(m.rows()),
             static_cast<Eigen::Index>(m.cols()));
}

void require_shape(const DenseMatrix& out, std::size_t rows, std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) {
    throw ContractError("matmul: output shape mismatch");
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractError("DenseMatrix: entry count does not equal rows*cols");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> nested;
  for (const auto& r : rows) nested.emplace_back(r);
  return from_nested(nested);
}

DenseMatrix DenseMatrix::from_nested(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ContractError("DenseMatrix: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), cols, std::move(data));
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<std::vector<double>> DenseMatrix::to_nested() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
  return out;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double DenseMatrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (double v : row(r)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double DenseMatrix::norm_frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double DenseMatrix::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimension mismatch");
  DenseMatrix out(a.rows(), b.cols());
  if (!out.empty() && a.cols() > 0) view(out).noalias() = view(a) * view(b);
  return out;
}

DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw ContractError("matmul_bt: inner dimension mismatch");
  DenseMatrix out(a.rows(), b.rows());
  if (!out.empty() && a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ContractError("matmul_at: inner dimension mismatch");
  DenseMatrix out(a.cols(), b.cols());
  if (!out.empty() && a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

void matmul_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimension mismatch");
  require_shape(out, a.rows(), b.cols());
  if (!out.empty() && a.cols() > 0) view(out).noalias() += view(a) * view(b);
}

void matmul_bt_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.cols() != b.cols()) throw ContractError("matmul_bt: inner dimension mismatch");
  require_shape(out, a.rows(), b.rows());
  if (!out.empty() && a.cols() > 0) view(out).noalias() += view(a) * view(b).transpose();
}

void matmul_at_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.rows() != b.rows()) throw ContractError("matmul_at: inner dimension mismatch");
  require_shape(out, a.cols(), b.cols());
  if (!out.empty() && a.rows() > 0) view(out).noalias() += view(a).transpose() * view(b);
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ContractError("matrix add: shape mismatch");
  DenseMatrix out = a;
  add_in_place(out, b);
  return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ContractError("matrix subtract: shape mismatch");
  DenseMatrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

void add_in_place(DenseMatrix& target, const DenseMatrix& addend) {
  if (!target.same_shape(addend)) throw ContractError("matrix add: shape mismatch");
  auto t = target.data();
  auto a = addend.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += a[i];
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ContractError("max_abs_diff: shape mismatch");
  double best = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) best = std::max(best, std::abs(ad[i] - bd[i]));
  return best;
}

}  // namespace mgm
