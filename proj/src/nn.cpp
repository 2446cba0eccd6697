#include "spandiff/nn.hpp"

#include <cmath>
#include <limits>

#include "spandiff/errors.hpp"

namespace spandiff::nn {

Var ParamSet::add(const std::string& name, Matrix init) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name " + name);
  Var v(std::move(init), /*requires_grad=*/true);
  params_.push_back({name, v});
  return v;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

size_t ParamSet::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.var.value().size());
  return n;
}

const NamedParam* ParamSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Var Initializer::xavier(const std::string& name, int fan_in, int fan_out) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng_);
  return params_.add(name, std::move(m));
}

Var Initializer::zeros(const std::string& name, int rows, int cols) {
  return params_.add(name, Matrix::Zero(rows, cols));
}

Var Initializer::constant(const std::string& name, int rows, int cols, double v) {
  return params_.add(name, Matrix::Constant(rows, cols, v));
}

Var Initializer::normal(const std::string& name, int rows, int cols, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng_);
  return params_.add(name, std::move(m));
}

Linear::Linear(Initializer& init, const std::string& name, int in, int out, bool with_bias)
    : weight(init.xavier(name + ".weight", in, out)) {
  if (with_bias) bias = init.zeros(name + ".bias", 1, out);
}

Var Linear::operator()(const Var& x) const {
  Var y = ag::matmul(x, weight);
  return bias.defined() ? ag::add_row(y, bias) : y;
}

void Linear::zero() {
  weight.mutable_value().setZero();
  if (bias.defined()) bias.mutable_value().setZero();
}

LayerNorm::LayerNorm(Initializer& init, const std::string& name, int dim)
    : gamma(init.constant(name + ".gamma", 1, dim, 1.0)), beta(init.zeros(name + ".beta", 1, dim)) {}

Mlp::Mlp(Initializer& init, const std::string& name, const std::vector<int>& dims) {
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    layers.emplace_back(init, name + "." + std::to_string(i), dims[i], dims[i + 1]);
  }
}

Var Mlp::operator()(const Var& x) const {
  Var h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = ag::relu(h);
  }
  return h;
}

MultiHeadAttention::MultiHeadAttention(Initializer& init, const std::string& name, int dim,
                                       int heads_)
    : q(init, name + ".q", dim, dim),
      k(init, name + ".k", dim, dim),
      v(init, name + ".v", dim, dim),
      o(init, name + ".o", dim, dim),
      heads(heads_) {
  if (heads_ < 1 || dim % heads_ != 0) {
    throw InvalidDimension("model dim " + std::to_string(dim) + " not divisible by " +
                           std::to_string(heads_) + " heads");
  }
}

Var MultiHeadAttention::operator()(const Var& query, const Var& key_value,
                                   const std::vector<bool>* key_valid,
                                   const Context& ctx) const {
  const int dim = q.out_dim();
  const int hd = dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  Var Q = q(query);
  Var K = k(key_value);
  Var V = v(key_value);
  Matrix mask;
  if (key_valid != nullptr) mask = key_mask_row(*key_valid);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? Q : ag::slice_cols(Q, h * hd, hd);
    Var kh = heads == 1 ? K : ag::slice_cols(K, h * hd, hd);
    Var vh = heads == 1 ? V : ag::slice_cols(V, h * hd, hd);
    Var scores = ag::scale(ag::matmul_nt(qh, kh), inv_sqrt);
    Var attn = ag::softmax_rows(scores, key_valid != nullptr ? &mask : nullptr);
    attn = ctx.maybe_dropout(attn);
    outs.push_back(ag::matmul(attn, vh));
  }
  return o(heads == 1 ? outs.front() : ag::concat_cols(outs));
}

Matrix key_mask_row(const std::vector<bool>& valid) {
  Matrix m(1, static_cast<Eigen::Index>(valid.size()));
  for (size_t i = 0; i < valid.size(); ++i) {
    m(0, static_cast<Eigen::Index>(i)) = valid[i] ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return m;
}

}  // namespace spandiff::nn
