#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mgm {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix from_nested(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  DenseMatrix transposed() const;
  std::vector<std::vector<double>> to_nested() const;

  bool all_finite() const;
  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  void fill(double v);

  // Largest absolute row sum.
  double norm_inf() const;
  double norm_frobenius() const;
  double max_abs() const;

  bool operator==(const DenseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a * b^T
DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b
DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b);

// out += a * b (and the transposed variants); `out` must already have the result shape.
void matmul_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);
void matmul_bt_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);
void matmul_at_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);

// Entrywise helpers.
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
void add_in_place(DenseMatrix& target, const DenseMatrix& addend);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace mgm
