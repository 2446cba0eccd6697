#include <doctest.h>

#include <random>
#include <string>

#include "oracles.hpp"
#include "spandiff/autograd.hpp"

using namespace spandiff;
using ag::Matrix;
using ag::Var;

namespace {

Var param(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return Var(m, true);
}

// Random fixed projection so every output entry gets a distinct weight.
Var reduce(const Var& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix w(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
  return ag::sum(ag::mul(y, Var(w)));
}

void expect_gradients(const std::string& name, const std::function<Var()>& f,
                      const std::vector<Var>& params) {
  CAPTURE(name);
  const oracle::GradCheckStats s = oracle::grad_check([&] { return reduce(f(), 99); }, params, 1e-6);
  CHECK(s.checked > 0);
  CHECK(s.passed == s.checked);
}

}  // namespace

TEST_CASE("every op agrees with central differences") {
  std::mt19937_64 rng(1);
  Var a = param(3, 4, rng), b = param(3, 4, rng), c = param(4, 2, rng), d = param(5, 4, rng);
  Var row = param(1, 4, rng), col = param(3, 1, rng);
  Var pos = param(3, 4, rng, 0.5, 2.0);

  expect_gradients("matmul", [&] { return ag::matmul(a, c); }, {a, c});
  expect_gradients("matmul_nt", [&] { return ag::matmul_nt(a, d); }, {a, d});
  expect_gradients("add", [&] { return ag::add(a, b); }, {a, b});
  expect_gradients("sub", [&] { return ag::sub(a, b); }, {a, b});
  expect_gradients("mul", [&] { return ag::mul(a, b); }, {a, b});
  expect_gradients("div", [&] { return ag::div(a, pos); }, {a, pos});
  expect_gradients("add_row", [&] { return ag::add_row(a, row); }, {a, row});
  expect_gradients("mul_row", [&] { return ag::mul_row(a, row); }, {a, row});
  expect_gradients("mul_col", [&] { return ag::mul_col(a, col); }, {a, col});
  expect_gradients("scale", [&] { return ag::scale(a, -2.5); }, {a});
  expect_gradients("add_scalar", [&] { return ag::add_scalar(a, 0.7); }, {a});
  expect_gradients("neg", [&] { return ag::neg(a); }, {a});
  expect_gradients("relu", [&] { return ag::relu(a); }, {a});
  expect_gradients("silu", [&] { return ag::silu(a); }, {a});
  expect_gradients("exp", [&] { return ag::exp(a); }, {a});
  expect_gradients("log", [&] { return ag::log(pos); }, {pos});
  expect_gradients("abs", [&] { return ag::abs(a); }, {a});
  expect_gradients("minimum", [&] { return ag::minimum(a, b); }, {a, b});
  expect_gradients("maximum", [&] { return ag::maximum(a, b); }, {a, b});
  expect_gradients("clamp", [&] { return ag::clamp(a, -0.5, 0.5); }, {a});
  expect_gradients("sum", [&] { return ag::sum(a); }, {a});
  expect_gradients("mean", [&] { return ag::mean(a); }, {a});
  expect_gradients("transpose", [&] { return ag::transpose(a); }, {a});
  expect_gradients("softmax_rows", [&] { return ag::softmax_rows(a); }, {a});
  Matrix mask = Matrix::Zero(1, 4);
  mask(0, 2) = -std::numeric_limits<double>::infinity();
  expect_gradients("masked softmax", [&] { return ag::softmax_rows(a, &mask); }, {a});
  expect_gradients("log_softmax_rows", [&] { return ag::log_softmax_rows(a); }, {a});
  Var gamma = param(1, 4, rng), beta = param(1, 4, rng);
  expect_gradients("layer_norm_rows", [&] { return ag::layer_norm_rows(a, gamma, beta); },
                   {a, gamma, beta});
  expect_gradients("concat_rows", [&] { return ag::concat_rows({a, d}); }, {a, d});
  expect_gradients("concat_cols", [&] { return ag::concat_cols({a, col}); }, {a, col});
  expect_gradients("slice_rows", [&] { return ag::slice_rows(d, 1, 3); }, {d});
  expect_gradients("slice_cols", [&] { return ag::slice_cols(a, 1, 2); }, {a});
  expect_gradients("gather_rows", [&] { return ag::gather_rows(d, {4, 0, 0, 2}); }, {d});
  expect_gradients("select", [&] { return ag::select(a, 2, 1); }, {a});
  Var w = param(3, 8, rng);
  expect_gradients("rowwise_vecmat", [&] { return ag::rowwise_vecmat(a, w, 2); }, {a, w});
}

TEST_CASE("gradients accumulate across uses of a node") {
  Var x(Matrix::Constant(1, 1, 3.0), true);
  Var y = ag::add(ag::mul(x, x), x);  // x^2 + x
  y.backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(7.0));
  x.zero_grad();
  CHECK(x.grad().size() == 0);
}

TEST_CASE("NoGradGuard stops recording and restores on exit") {
  Var x(Matrix::Constant(2, 2, 1.0), true);
  CHECK(ag::grad_enabled());
  {
    ag::NoGradGuard guard;
    CHECK_FALSE(ag::grad_enabled());
    Var y = ag::scale(x, 2.0);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.value()(0, 0) == 2.0);
  }
  CHECK(ag::grad_enabled());
  CHECK(ag::scale(x, 2.0).requires_grad());
}

TEST_CASE("softmax rows sum to one and ignore masked entries") {
  std::mt19937_64 rng(2);
  Var a = param(4, 6, rng, -5.0, 5.0);
  Matrix mask = Matrix::Zero(1, 6);
  mask(0, 0) = -std::numeric_limits<double>::infinity();
  const Matrix p = ag::softmax_rows(a, &mask).value();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(r, 0) == 0.0);
  }
  const Matrix shifted = ag::softmax_rows(ag::add_scalar(a, 100.0), &mask).value();
  CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout is identity at p=0 and unbiased otherwise") {
  std::mt19937_64 rng(3);
  Var a(Matrix::Ones(200, 200));
  CHECK(ag::dropout(a, 0.0, rng).value() == a.value());
  const Matrix d = ag::dropout(a, 0.25, rng).value();
  CHECK(d.mean() == doctest::Approx(1.0).epsilon(0.02));
  const double zeros = static_cast<double>((d.array() == 0.0).count()) / d.size();
  CHECK(zeros == doctest::Approx(0.25).epsilon(0.05));
}
