#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mgm/matrix.hpp"
#include "mgm/permutation.hpp"

namespace mgm {

struct SinkhornOptions {
  int max_iter = 50;
  double tol = 1e-6;
};

// Alternating row/column normalization of a strictly positive square matrix.
// Stops once every row sum is within `tol` of 1 (column sums are exact after
// each column pass) or after max_iter full passes.
DenseMatrix sinkhorn(const DenseMatrix& m, SinkhornOptions options = {});

// Maximum-score assignment. Among all maximizers the lexicographically
// smallest assignment array is returned.
Permutation hungarian(const DenseMatrix& score);

// Value of the maximum-score assignment.
double assignment_score(const DenseMatrix& score, const Permutation& p);

struct EigenResult {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // column k pairs with values[k]
};

// Cyclic Jacobi eigendecomposition of (A + A^T) / 2.
EigenResult sym_eig(const DenseMatrix& a);

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool at(std::size_t x, std::size_t y) const { return cells_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool fg) { cells_[y * width_ + x] = fg ? 1 : 0; }
  bool has_background() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Exact squared Euclidean distance from every foreground cell to the nearest
// background cell (0 on background). Result has `height` rows, `width` cols.
DenseMatrix squared_distance_transform(const BinaryMask& mask);
DenseMatrix euclidean_distance_transform(const BinaryMask& mask);

// Binary PGM (P5); nonzero pixels are foreground.
BinaryMask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace mgm
