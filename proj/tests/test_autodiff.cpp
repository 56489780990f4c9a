#include <gtest/gtest.h>

#include <cmath>

#include "xte/autodiff.hpp"
#include "xte/rng.hpp"

using namespace xte;
using namespace xte::ad;

namespace {

Tensor random_tensor(Rng& rng, size_t r, size_t c, double lo = -1, double hi = 1) {
  Tensor t(r, c);
  for (auto& v : t.data) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Central differences on one leaf, computed independently of grad_check.
Tensor numeric_grad(const std::function<double(const Tensor&)>& f, Tensor x, double eps = 1e-6) {
  Tensor g(x.rows, x.cols);
  for (size_t i = 0; i < x.size(); ++i) {
    double keep = x.data[i];
    x.data[i] = keep + eps;
    double up = f(x);
    x.data[i] = keep - eps;
    double down = f(x);
    x.data[i] = keep;
    g.data[i] = (up - down) / (2 * eps);
  }
  return g;
}

// Checks d/dx of a unary scalar-valued builder against finite differences.
void check_unary(const std::function<Var(Var)>& op, Tensor x, double tol = 1e-6) {
  Tape t;
  Var v = t.leaf(x);
  Var y = sum(op(v));
  t.backward(y);
  Tensor analytic = t.grad(v);
  Tensor num = numeric_grad(
      [&](const Tensor& z) {
        Tape s;
        return sum(op(s.leaf(z))).item();
      },
      x);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(analytic.data[i], num.data[i], tol) << "entry " << i;
}

void check_binary(const std::function<Var(Var, Var)>& op, Tensor a, Tensor b, double tol = 1e-6) {
  Tape t;
  Var va = t.leaf(a), vb = t.leaf(b);
  t.backward(sum(op(va, vb)));
  Tensor ga = t.grad(va), gb = t.grad(vb);
  Tensor na = numeric_grad(
      [&](const Tensor& z) {
        Tape s;
        return sum(op(s.leaf(z), s.leaf(b))).item();
      },
      a);
  Tensor nb = numeric_grad(
      [&](const Tensor& z) {
        Tape s;
        return sum(op(s.leaf(a), s.leaf(z))).item();
      },
      b);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(ga.data[i], na.data[i], tol);
  for (size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(gb.data[i], nb.data[i], tol);
}

template <class F>
ErrorCode code_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Autodiff, ForwardValues) {
  Tape t;
  Var a = t.constant(Tensor(2, 2, {1, 2, 3, 4}));
  Var b = t.constant(Tensor(2, 1, {1, -1}));
  EXPECT_EQ(matmul(a, b).value().data, (std::vector<double>{-1, -1}));
  EXPECT_EQ(transpose(a).value().data, (std::vector<double>{1, 3, 2, 4}));
  EXPECT_EQ(sum_rows(a).value().data, (std::vector<double>{4, 6}));
  EXPECT_DOUBLE_EQ(mean(a).item(), 2.5);
  EXPECT_NEAR(sigmoid(t.constant(Tensor::scalar(0))).item(), 0.5, 1e-15);
  EXPECT_NEAR(softplus(t.constant(Tensor::scalar(800))).item(), 800, 1e-9);
  EXPECT_NEAR(sigmoid(t.constant(Tensor::scalar(-800))).item(), 0.0, 1e-300);
  Var sm = softmax_rows(t.constant(Tensor(1, 3, {1000, 1000, 1000})));
  for (double v : sm.value().data) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(Autodiff, UnaryGradients) {
  Rng rng(1);
  Tensor x = random_tensor(rng, 3, 4);
  check_unary([](Var v) { return sigmoid(v); }, x);
  check_unary([](Var v) { return exp(v); }, x);
  check_unary([](Var v) { return softplus(v); }, x);
  check_unary([](Var v) { return leaky_relu(v); }, x);
  check_unary([](Var v) { return relu(v); }, x);
  check_unary([](Var v) { return abs(v); }, x);
  check_unary([](Var v) { return log(v); }, random_tensor(rng, 2, 3, 0.5, 2.0));
  check_unary([](Var v) { return softmax_rows(scale(v, 3.0)); }, x);
  check_unary([](Var v) { return mul(softmax_rows(v), v); }, x);
  check_unary([](Var v) { return mean(mul(v, v)); }, x);
  check_unary([](Var v) { return matmul(transpose(v), v); }, x);
  check_unary([](Var v) { return add_scalar(scale(v, -2.0), 3.0); }, x);
  check_unary([](Var v) { return gather_rows(v, {2, 0, 2}); }, x);
  check_unary([](Var v) { return mul(segment_sum(v, {1, 0, 1}, 2), segment_sum(v, {0, 0, 1}, 2)); }, x);
  check_unary([](Var v) { return mul(sum_rows(v), sum_rows(v)); }, x);
}

TEST(Autodiff, BinaryGradients) {
  Rng rng(2);
  Tensor a = random_tensor(rng, 3, 4), b = random_tensor(rng, 3, 4);
  check_binary([](Var x, Var y) { return mul(x, y); }, a, b);
  check_binary([](Var x, Var y) { return sub(x, y); }, a, b);
  check_binary([](Var x, Var y) { return div(x, y); }, a, random_tensor(rng, 3, 4, 1, 2));
  check_binary([](Var x, Var y) { return concat(x, mul(y, y)); }, a, b);
  // broadcasting: row bias and scalar
  check_binary([](Var x, Var y) { return mul(add(x, y), add(x, y)); }, a, random_tensor(rng, 1, 4));
  check_binary([](Var x, Var y) { return mul(x, y); }, a, random_tensor(rng, 1, 1));
  check_binary([](Var x, Var y) { return matmul(x, y); }, a, random_tensor(rng, 4, 2));
  check_binary([](Var x, Var y) { return scale_rows(x, y); }, a, random_tensor(rng, 3, 1));
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3.0));
  Var y = mul(x, x);  // x^2
  t.backward(add(y, x));
  EXPECT_DOUBLE_EQ(t.grad(x).item(), 7.0);
}

TEST(Autodiff, ParameterGradientsAccumulateAcrossTapes) {
  Parameter p("w", Tensor(1, 2, {1.0, 2.0}));
  for (int k = 0; k < 2; ++k) {
    Tape t;
    t.backward(sum(mul(t.param(p), t.param(p))));
  }
  EXPECT_EQ(p.grad.data, (std::vector<double>{4.0, 8.0}));
  p.zero_grad();
  EXPECT_EQ(p.grad.data, (std::vector<double>{0.0, 0.0}));
}

TEST(Autodiff, GradCheckOnQuadratic) {
  Parameter p("w", Tensor(2, 2, {0.3, -0.7, 1.1, 0.2}));
  double err = grad_check([&](Tape& t) { return sum(mul(sigmoid(t.param(p)), t.param(p))); }, {&p});
  EXPECT_LT(err, 1e-7);
}

TEST(Autodiff, Errors) {
  Tape t;
  Var a = t.leaf(Tensor(2, 3, 1.0)), b = t.leaf(Tensor(2, 2, 1.0));
  EXPECT_EQ(code_of([&] { matmul(a, a); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { add(a, b); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { t.backward(a); }), ErrorCode::NotScalar);
  EXPECT_EQ(code_of([&] { log(t.leaf(Tensor::scalar(0.0))); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { div(a, t.leaf(Tensor(2, 3, 0.0))); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { exp(t.leaf(Tensor::scalar(1000.0))); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { Tensor(2, 2, std::vector<double>{1, 2, 3}); }), ErrorCode::ShapeMismatch);
}
