#include "mgm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "mgm/error.hpp"

namespace mgm::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

template <typename Backward>
Var make(DenseMatrix value, std::vector<NodePtr> inputs, Backward&& fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->is_leaf = false;
  node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const NodePtr& p) { return p->requires_grad; });
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::forward<Backward>(fn);
  }
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ContractError(std::string(op) + ": shape mismatch");
  }
}

// Elementwise op with local derivative d(out)/d(in) computed from (in, out).
template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
  DenseMatrix out = a.value();
  for (double& v : out.data()) v = f(v);
  return make(std::move(out), {a.node()}, [df](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto g = in.grad_buffer().data();
    auto x = in.value.data();
    auto y = self.value.data();
    auto dy = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * df(x[i], y[i]);
  });
}

}  // namespace

DenseMatrix& Node::grad_buffer() {
  if (!grad.same_shape(value)) grad = DenseMatrix(value.rows(), value.cols());
  return grad;
}

DenseMatrix Var::grad() const {
  if (node_->grad.same_shape(node_->value)) return node_->grad;
  return DenseMatrix(node_->value.rows(), node_->value.cols());
}

double Var::scalar() const {
  if (value().rows() != 1 || value().cols() != 1) throw ContractError("scalar(): not 1x1");
  return value()(0, 0);
}

void Var::zero_grad() {
  if (node_->grad.same_shape(node_->value)) node_->grad.fill(0.0);
}

Var constant(DenseMatrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(DenseMatrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->grad = DenseMatrix(node->value.rows(), node->value.cols());
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ContractError("backward: root must be a 1x1 scalar");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->is_leaf) node->grad_buffer().fill(0.0);
  }
  root.node()->grad_buffer()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->is_leaf && node->backward) node->backward(*node);
  }
}

Var matmul(const Var& a, const Var& b) {
  return make(mgm::matmul(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) matmul_bt_add(self.grad, y.value, x.grad_buffer());
    if (y.requires_grad) matmul_at_add(x.value, self.grad, y.grad_buffer());
  });
}

Var matmul_bt(const Var& a, const Var& b) {
  return make(mgm::matmul_bt(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) matmul_add(self.grad, y.value, x.grad_buffer());
    if (y.requires_grad) matmul_at_add(self.grad, x.value, y.grad_buffer());
  });
}

Var transpose(const Var& a) {
  return make(a.value().transposed(), {a.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    DenseMatrix& g = x.grad_buffer();
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += self.grad(c, r);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make(a.value() + b.value(), {a.node(), b.node()}, [](Node& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) add_in_place(in->grad_buffer(), self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make(a.value() - b.value(), {a.node(), b.node()}, [](Node& self) {
    if (self.inputs[0]->requires_grad) add_in_place(self.inputs[0]->grad_buffer(), self.grad);
    if (self.inputs[1]->requires_grad) {
      auto g = self.inputs[1]->grad_buffer().data();
      auto dy = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= dy[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  DenseMatrix out = a.value();
  {
    auto o = out.data();
    auto bd = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
  }
  return make(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    auto dy = self.grad.data();
    if (x.requires_grad) {
      auto g = x.grad_buffer().data();
      auto yv = y.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * yv[i];
    }
    if (y.requires_grad) {
      auto g = y.grad_buffer().data();
      auto xv = x.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * xv[i];
    }
  });
}

Var add_row(const Var& a, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) throw ContractError("add_row: shape mismatch");
  DenseMatrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bias.value()(0, c);
  return make(std::move(out), {a.node(), bias.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& b = *self.inputs[1];
    if (x.requires_grad) add_in_place(x.grad_buffer(), self.grad);
    if (b.requires_grad) {
      DenseMatrix& g = b.grad_buffer();
      for (std::size_t r = 0; r < self.grad.rows(); ++r)
        for (std::size_t c = 0; c < self.grad.cols(); ++c) g(0, c) += self.grad(r, c);
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw ContractError("concat_cols: row count mismatch");
  const std::size_t ca = a.cols();
  const std::size_t cb = b.cols();
  DenseMatrix out(a.rows(), ca + cb);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.value().row(r).begin(), a.value().row(r).end(), out.row(r).begin());
    std::copy(b.value().row(r).begin(), b.value().row(r).end(),
              out.row(r).begin() + static_cast<long>(ca));
  }
  return make(std::move(out), {a.node(), b.node()}, [ca, cb](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    for (std::size_t r = 0; r < self.grad.rows(); ++r) {
      if (x.requires_grad) {
        DenseMatrix& g = x.grad_buffer();
        for (std::size_t c = 0; c < ca; ++c) g(r, c) += self.grad(r, c);
      }
      if (y.requires_grad) {
        DenseMatrix& g = y.grad_buffer();
        for (std::size_t c = 0; c < cb; ++c) g(r, c) += self.grad(r, ca + c);
      }
    }
  });
}

Var row_sum_over(const Var& a, const std::vector<std::vector<int>>& index_sets) {
  const std::size_t cols = a.cols();
  DenseMatrix out(index_sets.size(), cols);
  for (std::size_t i = 0; i < index_sets.size(); ++i) {
    for (int j : index_sets[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= a.rows()) {
        throw ContractError("row_sum_over: index out of range");
      }
      auto src = a.value().row(j);
      auto dst = out.row(i);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  }
  return make(std::move(out), {a.node()}, [index_sets](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    DenseMatrix& g = x.grad_buffer();
    for (std::size_t i = 0; i < index_sets.size(); ++i) {
      auto dy = self.grad.row(i);
      for (int j : index_sets[i]) {
        auto dst = g.row(j);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += dy[c];
      }
    }
  });
}

Var scale(const Var& a, double s) { return affine(a, s, 0.0); }

Var divide(const Var& a, double s) {
  if (s == 0.0) throw ContractError("divide: division by zero");
  return affine(a, 1.0 / s, 0.0);
}

Var affine(const Var& a, double alpha, double beta) {
  return unary(
      a, [alpha, beta](double x) { return alpha * x + beta; },
      [alpha](double, double) { return alpha; });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make(DenseMatrix(1, 1, total), {a.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    const double dy = self.grad(0, 0);
    for (double& g : x.grad_buffer().data()) g += dy;
  });
}

Var row_normalize(const Var& a) {
  DenseMatrix out = a.value();
  std::vector<double> sums(out.rows(), 0.0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (double v : out.row(r)) sums[r] += v;
    for (double& v : out.row(r)) v /= sums[r];
  }
  return make(std::move(out), {a.node()}, [sums](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    DenseMatrix& g = x.grad_buffer();
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < self.value.cols(); ++c) dot += self.grad(r, c) * self.value(r, c);
      for (std::size_t c = 0; c < self.value.cols(); ++c)
        g(r, c) += (self.grad(r, c) - dot) / sums[r];
    }
  });
}

Var col_normalize(const Var& a) {
  DenseMatrix out = a.value();
  std::vector<double> sums(out.cols(), 0.0);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) sums[c] += out(r, c);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= sums[c];
  return make(std::move(out), {a.node()}, [sums](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    DenseMatrix& g = x.grad_buffer();
    std::vector<double> dots(self.value.cols(), 0.0);
    for (std::size_t r = 0; r < self.value.rows(); ++r)
      for (std::size_t c = 0; c < self.value.cols(); ++c)
        dots[c] += self.grad(r, c) * self.value(r, c);
    for (std::size_t r = 0; r < self.value.rows(); ++r)
      for (std::size_t c = 0; c < self.value.cols(); ++c)
        g(r, c) += (self.grad(r, c) - dots[c]) / sums[c];
  });
}

Var sinkhorn(const Var& a, SinkhornOptions options) {
  if (!a.value().is_square()) throw ContractError("sinkhorn: matrix must be square");
  for (double v : a.value().data()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractError("sinkhorn: entries must be finite and strictly positive");
    }
  }
  Var s = a;
  for (int it = 0; it < options.max_iter; ++it) {
    s = col_normalize(row_normalize(s));
    double deviation = 0.0;
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double total = 0.0;
      for (double v : s.value().row(r)) total += v;
      deviation = std::max(deviation, std::abs(total - 1.0));
    }
    if (deviation <= options.tol) break;
  }
  return s;
}

}  // namespace mgm::ad
