#pragma once

#include <random>
#include <string>
#include <vector>

#include "spandiff/autograd.hpp"

namespace spandiff::nn {

using ag::Matrix;
using ag::Var;

/// Per-forward options: dropout is active only when `training` is set and an
/// rng is supplied.
struct Context {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  Var maybe_dropout(const Var& x) const {
    if (!training || dropout <= 0.0 || rng == nullptr) return x;
    return ag::dropout(x, dropout, *rng);
  }
};

struct NamedParam {
  std::string name;
  Var var;
};

/// Owns every trainable leaf of a model under a hierarchical name.
class ParamSet {
 public:
  Var add(const std::string& name, Matrix init);
  const std::vector<NamedParam>& params() const { return params_; }
  std::vector<NamedParam>& params() { return params_; }
  void zero_grad();
  size_t scalar_count() const;
  const NamedParam* find(const std::string& name) const;

 private:
  std::vector<NamedParam> params_;
};

/// Builds fresh parameters with deterministic Xavier-uniform init.
class Initializer {
 public:
  Initializer(ParamSet& params, std::mt19937_64& rng) : params_(params), rng_(rng) {}

  Var xavier(const std::string& name, int fan_in, int fan_out);
  Var zeros(const std::string& name, int rows, int cols);
  Var constant(const std::string& name, int rows, int cols, double v);
  Var normal(const std::string& name, int rows, int cols, double stddev);

 private:
  ParamSet& params_;
  std::mt19937_64& rng_;
};

/// y = x W + b with W stored in x out.
struct Linear {
  Var weight;
  Var bias;

  Linear() = default;
  Linear(Initializer& init, const std::string& name, int in, int out, bool with_bias = true);
  Var operator()(const Var& x) const;
  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }
  /// Zeroes weight and bias, making the layer output exactly 0 (or b).
  void zero();
};

struct LayerNorm {
  Var gamma;
  Var beta;

  LayerNorm() = default;
  LayerNorm(Initializer& init, const std::string& name, int dim);
  Var operator()(const Var& x) const { return ag::layer_norm_rows(x, gamma, beta); }
};

/// Stack of Linear layers with ReLU between them (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(Initializer& init, const std::string& name, const std::vector<int>& dims);
  Var operator()(const Var& x) const;
};

/// Standard scaled dot-product attention with `heads` heads. Keys flagged
/// false in `key_valid` get -inf logits.
struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(Initializer& init, const std::string& name, int dim, int heads);
  Var operator()(const Var& query, const Var& key_value, const std::vector<bool>* key_valid,
                 const Context& ctx) const;
};

/// -inf at invalid positions, 0 elsewhere, shaped 1 x n.
Matrix key_mask_row(const std::vector<bool>& valid);

}  // namespace spandiff::nn
