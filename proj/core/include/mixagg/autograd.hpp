#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mixagg/tensor.hpp"

namespace mixagg {

template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate_grad(const BasicTensor<T>& g);
};

/// Handle to a node of a reverse-mode computation graph.
///
/// Nodes are created by the free functions below; the graph stays alive as
/// long as some handle references its root. Graphs built only from leaves
/// with requires_grad == false record no backward closures.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var leaf(BasicTensor<T> value, bool requires_grad = false);
  static Var constant(BasicTensor<T> value) { return leaf(std::move(value), false); }

  const BasicTensor<T>& value() const { return node_->value; }
  /// Gradient after backward(); an all-zero tensor if nothing reached this node.
  BasicTensor<T> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& dims() const { return node_->value.dims(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Reverse-mode sweep from a scalar root. Gradients are summed into every
/// reachable node that requires them, visiting nodes in reverse topological
/// order (depth-first, parents in declaration order), so accumulation order
/// is deterministic.
template <typename T>
void backward(const Var<T>& root);

/// Builds an op node for custom operations. The node requires gradients
/// iff some parent does; only then are parents and backward_fn retained.
template <typename T>
Var<T> make_op(BasicTensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backward_fn);

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> transpose(const Var<T>& a);
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
/// Elementwise product of equally-shaped tensors.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);
/// x[m x p] + bias[p] broadcast over rows; the only broadcast supported.
template <typename T>
Var<T> add_row_bias(const Var<T>& x, const Var<T>& bias);
template <typename T>
Var<T> relu(const Var<T>& x);
/// Per-row normalization over the last axis: (x - mean) / sqrt(var + eps),
/// biased variance, then gamma * xhat + beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps);
/// Divides each row by its Euclidean norm.
template <typename T>
Var<T> l2_normalize_rows(const Var<T>& x);
template <typename T>
Var<T> reshape(const Var<T>& x, Shape dims);
/// Rows [begin, end) of a matrix.
template <typename T>
Var<T> slice_rows(const Var<T>& x, std::size_t begin, std::size_t end);
/// Vertical stack of matrices with equal column counts.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts);
/// Sum of every entry, as a {1} tensor.
template <typename T>
Var<T> sum(const Var<T>& x);
/// Mean of each row of a matrix, as a {1, rows} tensor.
template <typename T>
Var<T> row_mean(const Var<T>& x);

}  // namespace mixagg
