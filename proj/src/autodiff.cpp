#include "xte/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace xte::ad {

namespace {

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string("non-finite value produced by ") + op);
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

bool is_scalar(const Tensor& t) { return t.rows == 1 && t.cols == 1; }

// Elementwise op with shape broadcasting of b (same / scalar / row bias).
enum class Bcast { Same, Scalar, Row };

Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b, bool allow_row) {
  if (a.same_shape(b)) return Bcast::Same;
  if (is_scalar(b)) return Bcast::Scalar;
  if (allow_row && b.rows == 1 && b.cols == a.cols) return Bcast::Row;
  shape_error(op, a, b);
}

size_t bindex(Bcast k, size_t i, size_t cols) {
  switch (k) {
    case Bcast::Same: return i;
    case Bcast::Scalar: return 0;
    case Bcast::Row: return i % cols;
  }
  return 0;
}

Tensor reduce_to(const Tensor& g, Bcast k, const Tensor& like) {
  if (k == Bcast::Same) return g;
  Tensor out(like.rows, like.cols);
  for (size_t i = 0; i < g.size(); ++i) out.data[bindex(k, i, g.cols)] += g.data[i];
  return out;
}

template <class F, class D>
Var unary(Var a, const char* name, F f, D dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.rows, x.cols);
  for (size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
  check_finite(y, name);
  int ia = a.id;
  return a.tape->record(std::move(y), {ia}, [ia, dfdx](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(ia);
    Tensor gx(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) gx.data[i] = g.data[i] * dfdx(x.data[i]);
    t.accumulate(ia, gx);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw Error(ErrorCode::Internal, "variables from different tapes");
}

}  // namespace

Tensor::Tensor(size_t r, size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != r * c) throw Error(ErrorCode::ShapeMismatch, "tensor data size does not match shape");
}

double Tensor::item() const {
  if (!is_scalar(*this)) throw Error(ErrorCode::NotScalar, "item() on " + shape_str(*this));
  return data[0];
}

Parameter::Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
  grad = Tensor(value.rows, value.cols);
  adam_m = Tensor(value.rows, value.cols);
  adam_v = Tensor(value.rows, value.cols);
}

void Parameter::zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor t) {
  check_finite(t, "constant");
  Node n;
  n.value = std::move(t);
  nodes_.push_back(std::move(n));
  return {this, int(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor t, bool requires_grad) {
  Var v = constant(std::move(t));
  nodes_[v.id].requires_grad = requires_grad;
  return v;
}

Var Tape::param(Parameter& p) {
  Var v = leaf(p.value, true);
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::record(Tensor value, std::vector<int> inputs, BackFn back) {
  Node n;
  n.value = std::move(value);
  for (int i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {this, int(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.rows, n.value.cols);
  for (size_t i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error(ErrorCode::Internal, "backward on a foreign variable");
  if (!is_scalar(nodes_[loss.id].value))
    throw Error(ErrorCode::NotScalar, "backward needs a 1x1 loss, got " + shape_str(nodes_[loss.id].value));
  for (auto& n : nodes_) n.grad = Tensor();
  accumulate(loss.id, Tensor::scalar(1.0));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.back) {
      Tensor g = n.grad;  // back may grow nodes_? no, but keep a copy for safety
      n.back(*this, g);
    }
    if (n.param) {
      Parameter& p = *n.param;
      if (p.grad.size() != n.grad.size()) p.grad = Tensor(p.value.rows, p.value.cols);
      for (size_t k = 0; k < n.grad.size(); ++k) p.grad.data[k] += n.grad.data[k];
    }
  }
}

const Tensor& Tape::grad(Var v) const {
  static const Tensor empty;
  const Node& n = nodes_[v.id];
  return n.grad.size() == n.value.size() ? n.grad : empty;
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor &A = a.value(), &B = b.value();
  if (A.cols != B.rows) shape_error("matmul", A, B);
  Tensor C(A.rows, B.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.cols; ++k) {
      double av = A(i, k);
      if (av == 0.0) continue;
      for (size_t j = 0; j < B.cols; ++j) C(i, j) += av * B(k, j);
    }
  check_finite(C, "matmul");
  int ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor &A = t.value(ia), &B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor gA(A.rows, A.cols);
      for (size_t i = 0; i < A.rows; ++i)
        for (size_t k = 0; k < A.cols; ++k) {
          double s = 0;
          for (size_t j = 0; j < B.cols; ++j) s += g(i, j) * B(k, j);
          gA(i, k) = s;
        }
      t.accumulate(ia, gA);
    }
    if (t.requires_grad(ib)) {
      Tensor gB(B.rows, B.cols);
      for (size_t i = 0; i < A.rows; ++i)
        for (size_t k = 0; k < A.cols; ++k) {
          double av = A(i, k);
          if (av == 0.0) continue;
          for (size_t j = 0; j < B.cols; ++j) gB(k, j) += av * g(i, j);
        }
      t.accumulate(ib, gB);
    }
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  Tensor T(A.cols, A.rows);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  int ia = a.id;
  return a.tape->record(std::move(T), {ia}, [ia](Tape& t, const Tensor& g) {
    Tensor gA(g.cols, g.rows);
    for (size_t i = 0; i < g.rows; ++i)
      for (size_t j = 0; j < g.cols; ++j) gA(j, i) = g(i, j);
    t.accumulate(ia, gA);
  });
}

namespace {

Var add_like(Var a, Var b, double sign, const char* name) {
  same_tape(a, b);
  const Tensor &A = a.value(), &B = b.value();
  Bcast k = broadcast_kind(name, A, B, true);
  Tensor C(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) C.data[i] = A.data[i] + sign * B.data[bindex(k, i, A.cols)];
  check_finite(C, name);
  int ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib}, [ia, ib, k, sign](Tape& t, const Tensor& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      Tensor gb = reduce_to(g, k, t.value(ib));
      if (sign != 1.0)
        for (double& v : gb.data) v *= sign;
      t.accumulate(ib, gb);
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_like(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_like(a, b, -1.0, "sub"); }

Var mul(Var a, Var b) {
  same_tape(a, b);
  const Tensor &A = a.value(), &B = b.value();
  Bcast k = broadcast_kind("mul", A, B, false);
  Tensor C(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) C.data[i] = A.data[i] * B.data[bindex(k, i, A.cols)];
  check_finite(C, "mul");
  int ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib}, [ia, ib, k](Tape& t, const Tensor& g) {
    const Tensor &A = t.value(ia), &B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor gA(A.rows, A.cols);
      for (size_t i = 0; i < A.size(); ++i) gA.data[i] = g.data[i] * B.data[bindex(k, i, A.cols)];
      t.accumulate(ia, gA);
    }
    if (t.requires_grad(ib)) {
      Tensor full(A.rows, A.cols);
      for (size_t i = 0; i < A.size(); ++i) full.data[i] = g.data[i] * A.data[i];
      t.accumulate(ib, reduce_to(full, k, B));
    }
  });
}

Var div(Var a, Var b) {
  same_tape(a, b);
  const Tensor &A = a.value(), &B = b.value();
  Bcast k = broadcast_kind("div", A, B, false);
  for (double v : B.data)
    if (v == 0.0) throw Error(ErrorCode::DomainError, "division by zero");
  Tensor C(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) C.data[i] = A.data[i] / B.data[bindex(k, i, A.cols)];
  check_finite(C, "div");
  int ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib}, [ia, ib, k](Tape& t, const Tensor& g) {
    const Tensor &A = t.value(ia), &B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor gA(A.rows, A.cols);
      for (size_t i = 0; i < A.size(); ++i) gA.data[i] = g.data[i] / B.data[bindex(k, i, A.cols)];
      t.accumulate(ia, gA);
    }
    if (t.requires_grad(ib)) {
      Tensor full(A.rows, A.cols);
      for (size_t i = 0; i < A.size(); ++i) {
        double bv = B.data[bindex(k, i, A.cols)];
        full.data[i] = -g.data[i] * A.data[i] / (bv * bv);
      }
      t.accumulate(ib, reduce_to(full, k, B));
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var sigmoid(Var a) {
  return unary(a, "sigmoid", stable_sigmoid, [](double x) {
    double s = stable_sigmoid(x);
    return s * (1 - s);
  });
}

Var relu(Var a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, "leaky_relu", [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x) { return x > 0 ? 1.0 : slope; });
}

Var log(Var a) {
  for (double v : a.value().data)
    if (!(v > 0)) throw Error(ErrorCode::DomainError, "log of non-positive value");
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var abs(Var a) {
  return unary(a, "abs", [](double x) { return std::abs(x); },
               [](double x) { return x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary(
      a, "softplus", [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      stable_sigmoid);
}

Var sum(Var a) {
  const Tensor& A = a.value();
  double s = 0;
  for (double v : A.data) s += v;
  Tensor out = Tensor::scalar(s);
  check_finite(out, "sum");
  int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, const Tensor& g) {
    const Tensor& A = t.value(ia);
    t.accumulate(ia, Tensor(A.rows, A.cols, g.data[0]));
  });
}

Var mean(Var a) {
  size_t n = a.value().size();
  if (n == 0) throw Error(ErrorCode::DomainError, "mean of an empty tensor");
  return scale(sum(a), 1.0 / double(n));
}

Var concat(Var a, Var b) {
  same_tape(a, b);
  const Tensor &A = a.value(), &B = b.value();
  if (A.rows != B.rows) shape_error("concat", A, B);
  Tensor C(A.rows, A.cols + B.cols);
  for (size_t i = 0; i < A.rows; ++i) {
    for (size_t j = 0; j < A.cols; ++j) C(i, j) = A(i, j);
    for (size_t j = 0; j < B.cols; ++j) C(i, A.cols + j) = B(i, j);
  }
  int ia = a.id, ib = b.id;
  size_t ca = A.cols, cb = B.cols;
  return a.tape->record(std::move(C), {ia, ib}, [ia, ib, ca, cb](Tape& t, const Tensor& g) {
    Tensor gA(g.rows, ca), gB(g.rows, cb);
    for (size_t i = 0; i < g.rows; ++i) {
      for (size_t j = 0; j < ca; ++j) gA(i, j) = g(i, j);
      for (size_t j = 0; j < cb; ++j) gB(i, j) = g(i, ca + j);
    }
    t.accumulate(ia, gA);
    t.accumulate(ib, gB);
  });
}

Var softmax_rows(Var a) {
  const Tensor& A = a.value();
  Tensor S(A.rows, A.cols);
  for (size_t i = 0; i < A.rows; ++i) {
    double m = -INFINITY;
    for (size_t j = 0; j < A.cols; ++j) m = std::max(m, A(i, j));
    double z = 0;
    for (size_t j = 0; j < A.cols; ++j) z += (S(i, j) = std::exp(A(i, j) - m));
    for (size_t j = 0; j < A.cols; ++j) S(i, j) /= z;
  }
  check_finite(S, "softmax_rows");
  int ia = a.id;
  Tensor Scopy = S;
  return a.tape->record(std::move(S), {ia}, [ia, Scopy](Tape& t, const Tensor& g) {
    Tensor gA(Scopy.rows, Scopy.cols);
    for (size_t i = 0; i < Scopy.rows; ++i) {
      double dot = 0;
      for (size_t j = 0; j < Scopy.cols; ++j) dot += g(i, j) * Scopy(i, j);
      for (size_t j = 0; j < Scopy.cols; ++j) gA(i, j) = Scopy(i, j) * (g(i, j) - dot);
    }
    t.accumulate(ia, gA);
  });
}

Var segment_sum(Var values, const std::vector<int>& segment_ids, size_t n_segments) {
  const Tensor& V = values.value();
  if (segment_ids.size() != V.rows)
    throw Error(ErrorCode::ShapeMismatch, "segment_sum: " + std::to_string(segment_ids.size()) + " ids for " +
                                              std::to_string(V.rows) + " rows");
  for (int s : segment_ids)
    if (s < 0 || size_t(s) >= n_segments) throw Error(ErrorCode::ShapeMismatch, "segment_sum: id out of range");
  Tensor out(n_segments, V.cols);
  for (size_t i = 0; i < V.rows; ++i)
    for (size_t j = 0; j < V.cols; ++j) out(segment_ids[i], j) += V(i, j);
  int iv = values.id;
  size_t rows = V.rows, cols = V.cols;
  return values.tape->record(std::move(out), {iv}, [iv, segment_ids, rows, cols](Tape& t, const Tensor& g) {
    Tensor gV(rows, cols);
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j) gV(i, j) = g(segment_ids[i], j);
    t.accumulate(iv, gV);
  });
}

Var gather_rows(Var values, const std::vector<int>& indices) {
  const Tensor& V = values.value();
  for (int r : indices)
    if (r < 0 || size_t(r) >= V.rows) throw Error(ErrorCode::ShapeMismatch, "gather_rows: index out of range");
  Tensor out(indices.size(), V.cols);
  for (size_t i = 0; i < indices.size(); ++i)
    for (size_t j = 0; j < V.cols; ++j) out(i, j) = V(indices[i], j);
  int iv = values.id;
  size_t rows = V.rows, cols = V.cols;
  return values.tape->record(std::move(out), {iv}, [iv, indices, rows, cols](Tape& t, const Tensor& g) {
    Tensor gV(rows, cols);
    for (size_t i = 0; i < indices.size(); ++i)
      for (size_t j = 0; j < cols; ++j) gV(indices[i], j) += g(i, j);
    t.accumulate(iv, gV);
  });
}

Var sum_rows(Var a) { return segment_sum(a, std::vector<int>(a.rows(), 0), 1); }

Var scale_rows(Var a, Var w) {
  same_tape(a, w);
  const Tensor &A = a.value(), &W = w.value();
  if (W.cols != 1 || W.rows != A.rows) shape_error("scale_rows", A, W);
  Tensor C(A.rows, A.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) C(i, j) = A(i, j) * W(i, 0);
  check_finite(C, "scale_rows");
  int ia = a.id, iw = w.id;
  return a.tape->record(std::move(C), {ia, iw}, [ia, iw](Tape& t, const Tensor& g) {
    const Tensor &A = t.value(ia), &W = t.value(iw);
    if (t.requires_grad(ia)) {
      Tensor gA(A.rows, A.cols);
      for (size_t i = 0; i < A.rows; ++i)
        for (size_t j = 0; j < A.cols; ++j) gA(i, j) = g(i, j) * W(i, 0);
      t.accumulate(ia, gA);
    }
    if (t.requires_grad(iw)) {
      Tensor gW(W.rows, 1);
      for (size_t i = 0; i < A.rows; ++i)
        for (size_t j = 0; j < A.cols; ++j) gW(i, 0) += g(i, j) * A(i, j);
      t.accumulate(iw, gW);
    }
  });
}

double grad_check(const std::function<Var(Tape&)>& f, std::vector<Parameter*> params, double eps) {
  for (auto* p : params) p->zero_grad();
  {
    Tape t;
    Var loss = f(t);
    t.backward(loss);
  }
  auto eval = [&] {
    Tape t;
    return f(t).item();
  };
  double worst = 0;
  for (auto* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      double orig = p->value.data[i];
      p->value.data[i] = orig + eps;
      double up = eval();
      p->value.data[i] = orig - eps;
      double down = eval();
      p->value.data[i] = orig;
      double numeric = (up - down) / (2 * eps);
      double analytic = p->grad.data[i];
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
    }
  }
  return worst;
}

}  // namespace xte::ad
