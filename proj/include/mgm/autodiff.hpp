#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mgm/matrix.hpp"
#include "mgm/numerics.hpp"

// Reverse-mode differentiation over dense matrix expressions. Values are
// computed eagerly; each op records a closure that pushes its output gradient
// into its inputs. Leaves created with `parameter` accumulate gradients across
// backward passes until zero_grad() is called.
namespace mgm::ad {

struct Node {
  DenseMatrix value;
  DenseMatrix grad;  // empty until first touched
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  bool is_leaf = true;

  DenseMatrix& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const DenseMatrix& value() const { return node_->value; }
  // Zero matrix of the value's shape when no gradient has reached this node.
  DenseMatrix grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double scalar() const;

  void zero_grad();
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(DenseMatrix value);
Var parameter(DenseMatrix value);

// Propagates d(root)/d(.) to every reachable node; root must be 1x1.
// Intermediate gradients are reset on entry, leaf gradients accumulate.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_bt(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// Adds the 1 x cols row vector `bias` to every row of `a`.
Var add_row(const Var& a, const Var& bias);
Var concat_cols(const Var& a, const Var& b);
// Row i of the result is the sum of rows index_sets[i] of `a`.
Var row_sum_over(const Var& a, const std::vector<std::vector<int>>& index_sets);
Var scale(const Var& a, double s);
Var divide(const Var& a, double s);
// alpha * a + beta
Var affine(const Var& a, double alpha, double beta);
Var exp(const Var& a);
Var log(const Var& a);
Var relu(const Var& a);
// Gradient passes only where lo < a < hi.
Var clamp(const Var& a, double lo, double hi);
Var sum(const Var& a);
Var row_normalize(const Var& a);
Var col_normalize(const Var& a);
// Unrolled alternating normalization; the stopping decision mirrors
// mgm::sinkhorn so the forward value is identical.
Var sinkhorn(const Var& a, SinkhornOptions options = {});

}  // namespace mgm::ad
