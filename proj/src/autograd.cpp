#include "spandiff/autograd.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "spandiff/errors.hpp"

namespace spandiff::ag {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_result(Matrix value, std::initializer_list<Var> inputs,
                std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& v : inputs) any = any || v.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& v : inputs) node->parents.push_back(v.node());
      node->backward = std::move(backward);
    }
  }
  return Var(std::move(node));
}

Var make_result_vec(Matrix value, const std::vector<Var>& inputs,
                    std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& v : inputs) any = any || v.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& v : inputs) node->parents.push_back(v.node());
      node->backward = std::move(backward);
    }
  }
  return Var(std::move(node));
}

void push(const NodePtr& parent, const Matrix& g) {
  if (parent->requires_grad) parent->accumulate(g);
}

void same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  if (value().size() != 1) throw ShapeError("item() on a non-scalar");
  return value()(0, 0);
}

void Var::zero_grad() {
  if (node_) node_->grad.resize(0, 0);
}

void Var::backward() const {
  if (value().size() != 1) throw ShapeError("backward() needs a scalar root");
  if (!node_->requires_grad) return;
  // iterative post-order DFS gives a topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  return make_result(a.value() * b.value(), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    if (pa->requires_grad) pa->accumulate(n.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * n.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dims differ");
  return make_result(a.value() * b.value().transpose(), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    if (pa->requires_grad) pa->accumulate(n.grad * pb->value);
    if (pb->requires_grad) pb->accumulate(n.grad.transpose() * pa->value);
  });
}

Var add(const Var& a, const Var& b) {
  same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    push(n.parents[0], n.grad);
    push(n.parents[1], n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    push(n.parents[0], n.grad);
    push(n.parents[1], -n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  same_shape(a, b, "mul");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    if (pa->requires_grad) pa->accumulate(n.grad.cwiseProduct(pb->value));
    if (pb->requires_grad) pb->accumulate(n.grad.cwiseProduct(pa->value));
  });
}

Var div(const Var& a, const Var& b) {
  same_shape(a, b, "div");
  return make_result(a.value().cwiseQuotient(b.value()), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    if (pa->requires_grad) pa->accumulate(n.grad.cwiseQuotient(pb->value));
    if (pb->requires_grad) {
      pb->accumulate(-n.grad.cwiseProduct(n.value).cwiseQuotient(pb->value));
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row: bad row shape");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a, row}, [](Node& n) {
    push(n.parents[0], n.grad);
    if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad.colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("mul_row: bad row shape");
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return make_result(std::move(out), {a, row}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pr = n.parents[1];
    if (pa->requires_grad) {
      pa->accumulate((n.grad.array().rowwise() * pr->value.row(0).array()).matrix());
    }
    if (pr->requires_grad) pr->accumulate(n.grad.cwiseProduct(pa->value).colwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw ShapeError("mul_col: bad col shape");
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return make_result(std::move(out), {a, col}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pc = n.parents[1];
    if (pa->requires_grad) {
      pa->accumulate((n.grad.array().colwise() * pc->value.col(0).array()).matrix());
    }
    if (pc->requires_grad) pc->accumulate(n.grad.cwiseProduct(pa->value).rowwise().sum());
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& n) { push(n.parents[0], n.grad * s); });
}

Var add_scalar(const Var& a, double s) {
  return make_result((a.value().array() + s).matrix(), {a},
                     [](Node& n) { push(n.parents[0], n.grad); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var relu(const Var& a) {
  return make_result(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    const auto& p = n.parents[0];
    p->accumulate((p->value.array() > 0.0).cast<double>().matrix().cwiseProduct(n.grad));
  });
}

Var silu(const Var& a) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-a.value().array()).exp());
  Matrix out = (a.value().array() * sig).matrix();
  return make_result(std::move(out), {a}, [sig](Node& n) {
    const auto& p = n.parents[0];
    const Eigen::ArrayXXd d = sig * (1.0 + p->value.array() * (1.0 - sig));
    p->accumulate((n.grad.array() * d).matrix());
  });
}

Var exp(const Var& a) {
  return make_result(a.value().array().exp().matrix(), {a}, [](Node& n) {
    push(n.parents[0], n.grad.cwiseProduct(n.value));
  });
}

Var log(const Var& a) {
  return make_result(a.value().array().log().matrix(), {a}, [](Node& n) {
    push(n.parents[0], n.grad.cwiseQuotient(n.parents[0]->value));
  });
}

Var abs(const Var& a) {
  return make_result(a.value().cwiseAbs(), {a}, [](Node& n) {
    const auto& p = n.parents[0];
    p->accumulate(n.grad.cwiseProduct(p->value.cwiseSign()));
  });
}

Var minimum(const Var& a, const Var& b) {
  same_shape(a, b, "minimum");
  return make_result(a.value().cwiseMin(b.value()), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    const Eigen::ArrayXXd take_a = (pa->value.array() <= pb->value.array()).cast<double>();
    if (pa->requires_grad) pa->accumulate((n.grad.array() * take_a).matrix());
    if (pb->requires_grad) pb->accumulate((n.grad.array() * (1.0 - take_a)).matrix());
  });
}

Var maximum(const Var& a, const Var& b) {
  same_shape(a, b, "maximum");
  return make_result(a.value().cwiseMax(b.value()), {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    const Eigen::ArrayXXd take_a = (pa->value.array() >= pb->value.array()).cast<double>();
    if (pa->requires_grad) pa->accumulate((n.grad.array() * take_a).matrix());
    if (pb->requires_grad) pb->accumulate((n.grad.array() * (1.0 - take_a)).matrix());
  });
}

Var clamp(const Var& a, double lo, double hi) {
  return make_result(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [lo, hi](Node& n) {
    const auto& p = n.parents[0];
    const Eigen::ArrayXXd inside =
        (p->value.array() >= lo && p->value.array() <= hi).cast<double>();
    p->accumulate((n.grad.array() * inside).matrix());
  });
}

Var sum(const Var& a) {
  return make_result(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    const auto& p = n.parents[0];
    p->accumulate(Matrix::Constant(p->value.rows(), p->value.cols(), n.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const double k = 1.0 / static_cast<double>(a.value().size());
  return scale(sum(a), k);
}

Var transpose(const Var& a) {
  return make_result(a.value().transpose(), {a},
                     [](Node& n) { push(n.parents[0], n.grad.transpose()); });
}

Var softmax_rows(const Var& a, const Matrix* additive_mask) {
  Matrix logits = a.value();
  if (additive_mask != nullptr) {
    if (additive_mask->rows() == 1 && additive_mask->cols() == logits.cols()) {
      logits.rowwise() += additive_mask->row(0);
    } else if (additive_mask->rows() == logits.rows() && additive_mask->cols() == logits.cols()) {
      logits += *additive_mask;
    } else {
      throw ShapeError("softmax_rows: mask shape mismatch");
    }
  }
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    if (!std::isfinite(m)) {
      out.row(r).setZero();  // fully masked row
      continue;
    }
    Eigen::RowVectorXd e = (logits.row(r).array() - m).exp().matrix();
    out.row(r) = e / e.sum();
  }
  return make_result(std::move(out), {a}, [](Node& n) {
    const Matrix& y = n.value;
    Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    Matrix g = y.cwiseProduct(n.grad.colwise() - dot);
    n.parents[0]->accumulate(g);
  });
}

Var log_softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  Eigen::VectorXd lse(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    lse(r) = m + std::log((x.row(r).array() - m).exp().sum());
  }
  Matrix out = x.colwise() - lse;
  return make_result(std::move(out), {a}, [](Node& n) {
    const Matrix sm = n.value.array().exp().matrix();
    Eigen::VectorXd gs = n.grad.rowwise().sum();
    Matrix g = n.grad - (sm.array().colwise() * gs.array()).matrix();
    n.parents[0]->accumulate(g);
  });
}

Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index C = a.cols();
  if (gamma.cols() != C || beta.cols() != C) throw ShapeError("layer_norm: bad affine shape");
  const Matrix& x = a.value();
  Eigen::VectorXd mu = x.rowwise().mean();
  Matrix centered = x.colwise() - mu;
  Eigen::VectorXd inv =
      ((centered.array().square().rowwise().sum() / static_cast<double>(C)) + eps)
          .rsqrt()
          .matrix();
  Matrix xhat = centered.array().colwise() * inv.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  return make_result(std::move(out), {a, gamma, beta}, [xhat, inv, C](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pg = n.parents[1];
    const auto& pb = n.parents[2];
    if (pg->requires_grad) pg->accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
    if (pb->requires_grad) pb->accumulate(n.grad.colwise().sum());
    if (pa->requires_grad) {
      Matrix gx = n.grad.array().rowwise() * pg->value.row(0).array();
      Eigen::VectorXd s1 = gx.rowwise().sum();
      Eigen::VectorXd s2 = gx.cwiseProduct(xhat).rowwise().sum();
      Matrix g = (static_cast<double>(C) * gx).colwise() - s1;
      g -= (xhat.array().colwise() * s2.array()).matrix();
      g = g.array().colwise() * (inv.array() / static_cast<double>(C));
      pa->accumulate(g);
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const Eigen::Index C = parts.front().cols();
  Eigen::Index R = 0;
  for (const auto& p : parts) {
    if (p.cols() != C) throw ShapeError("concat_rows: column mismatch");
    R += p.rows();
  }
  Matrix out(R, C);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_result_vec(std::move(out), parts, [](Node& n) {
    Eigen::Index off = 0;
    for (const auto& p : n.parents) {
      const Eigen::Index k = p->value.rows();
      if (p->requires_grad) p->accumulate(n.grad.middleRows(off, k));
      off += k;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const Eigen::Index R = parts.front().rows();
  Eigen::Index C = 0;
  for (const auto& p : parts) {
    if (p.rows() != R) throw ShapeError("concat_cols: row mismatch");
    C += p.cols();
  }
  Matrix out(R, C);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_result_vec(std::move(out), parts, [](Node& n) {
    Eigen::Index off = 0;
    for (const auto& p : n.parents) {
      const Eigen::Index k = p->value.cols();
      if (p->requires_grad) p->accumulate(n.grad.middleCols(off, k));
      off += k;
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeError("slice_rows: range");
  return make_result(a.value().middleRows(start, count), {a}, [start, count](Node& n) {
    const auto& p = n.parents[0];
    Matrix g = Matrix::Zero(p->value.rows(), p->value.cols());
    g.middleRows(start, count) = n.grad;
    p->accumulate(g);
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols: range");
  return make_result(a.value().middleCols(start, count), {a}, [start, count](Node& n) {
    const auto& p = n.parents[0];
    Matrix g = Matrix::Zero(p->value.rows(), p->value.cols());
    g.middleCols(start, count) = n.grad;
    p->accumulate(g);
  });
}

Var gather_rows(const Var& a, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return make_result(std::move(out), {a}, [rows](Node& n) {
    const auto& p = n.parents[0];
    Matrix g = Matrix::Zero(p->value.rows(), p->value.cols());
    for (size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    p->accumulate(g);
  });
}

Var select(const Var& a, Eigen::Index r, Eigen::Index c) {
  if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols()) throw ShapeError("select: out of range");
  return make_result(Matrix::Constant(1, 1, a.value()(r, c)), {a}, [r, c](Node& n) {
    const auto& p = n.parents[0];
    Matrix g = Matrix::Zero(p->value.rows(), p->value.cols());
    g(r, c) = n.grad(0, 0);
    p->accumulate(g);
  });
}

Var rowwise_vecmat(const Var& x, const Var& weights, Eigen::Index out_dim) {
  const Eigen::Index N = x.rows();
  const Eigen::Index in_dim = x.cols();
  if (weights.rows() != N || weights.cols() != in_dim * out_dim) {
    throw ShapeError("rowwise_vecmat: weights must be N x (in*out)");
  }
  Matrix out = Matrix::Zero(N, out_dim);
  const Matrix& X = x.value();
  const Matrix& W = weights.value();
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index a = 0; a < in_dim; ++a) {
      const double xa = X(i, a);
      for (Eigen::Index b = 0; b < out_dim; ++b) out(i, b) += xa * W(i, a * out_dim + b);
    }
  }
  return make_result(std::move(out), {x, weights}, [N, in_dim, out_dim](Node& n) {
    const auto& px = n.parents[0];
    const auto& pw = n.parents[1];
    const Matrix& X = px->value;
    const Matrix& W = pw->value;
    Matrix gx = Matrix::Zero(N, in_dim);
    Matrix gw = Matrix::Zero(N, in_dim * out_dim);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index a = 0; a < in_dim; ++a) {
        double acc = 0.0;
        for (Eigen::Index b = 0; b < out_dim; ++b) {
          const double g = n.grad(i, b);
          acc += g * W(i, a * out_dim + b);
          gw(i, a * out_dim + b) = X(i, a) * g;
        }
        gx(i, a) = acc;
      }
    }
    if (px->requires_grad) px->accumulate(gx);
    if (pw->requires_grad) pw->accumulate(gw);
  });
}

Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  return mul(a, Var(std::move(mask)));
}

}  // namespace spandiff::ag
