#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
// A Var is a shared handle to a graph node; ops record a closure that pushes
// the node's gradient into its parents. The graph is released when the last
// Var referencing it goes away, so each forward pass builds a fresh tape.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace spandiff::ag {

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var scalar(double v) { return Var(Matrix::Constant(1, 1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;

  void zero_grad();
  /// Seeds d(self)/d(self) = 1; self must be 1x1.
  void backward() const;

  /// Same value, cut from the graph.
  Var detach() const { return Var(value()); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Elementwise and linear-algebra ops. Shapes follow Eigen semantics; the
// *_row variants broadcast a 1 x C operand over every row.
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var mul_col(const Var& a, const Var& col);  // broadcast R x 1 over columns
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);
Var relu(const Var& a);
Var silu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var abs(const Var& a);
Var minimum(const Var& a, const Var& b);
Var maximum(const Var& a, const Var& b);
Var clamp(const Var& a, double lo, double hi);
Var sum(const Var& a);
Var mean(const Var& a);
Var transpose(const Var& a);

/// Row-wise softmax; `additive_mask` (same shape, or 1 x C broadcast) is added
/// to the logits first, use -inf to exclude entries.
Var softmax_rows(const Var& a, const Matrix* additive_mask = nullptr);
Var log_softmax_rows(const Var& a);
Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var gather_rows(const Var& a, const std::vector<int>& rows);
Var select(const Var& a, Eigen::Index r, Eigen::Index c);  // 1 x 1

/// Row i of the result is x.row(i) times weights.row(i) reshaped (row-major)
/// into an in x out matrix: per-row dynamic linear maps.
Var rowwise_vecmat(const Var& x, const Var& weights, Eigen::Index out_dim);

/// Inverted dropout; identity when p == 0.
Var dropout(const Var& a, double p, std::mt19937_64& rng);

}  // namespace spandiff::ag
