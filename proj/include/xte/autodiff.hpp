#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xte/error.hpp"

namespace xte::ad {

// Dense row-major float64 matrix. Scalars are 1x1.
struct Tensor {
  size_t rows = 0, cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Tensor(size_t r, size_t c, std::vector<double> d);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  size_t size() const { return data.size(); }
  double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return data[i * cols + j]; }
  double item() const;
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// A trainable tensor. Gradients accumulate into `grad` on every backward pass
// until zero_grad() is called.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m, adam_v;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
  const Tensor& value() const;
  size_t rows() const { return value().rows; }
  size_t cols() const { return value().cols; }
  double item() const { return value().item(); }
};

class Tape {
 public:
  Var constant(Tensor t);
  Var leaf(Tensor t, bool requires_grad = true);
  Var param(Parameter& p);

  // Reverse pass from a scalar. Parameter gradients accumulate into
  // Parameter::grad; leaf gradients are available through grad().
  void backward(Var loss);
  const Tensor& grad(Var v) const;
  const Tensor& value(int id) const { return nodes_[id].value; }
  size_t size() const { return nodes_.size(); }

  using BackFn = std::function<void(Tape&, const Tensor& grad_out)>;
  Var record(Tensor value, std::vector<int> inputs, BackFn back);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  void accumulate(int id, const Tensor& g);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackFn back;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
// Same shapes, or b a 1x1 scalar, or b a 1xC row bias added to every row of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Same shapes or b a 1x1 scalar.
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.01);
Var log(Var a);
Var exp(Var a);
Var abs(Var a);  // subgradient 0 at 0
Var softplus(Var a);  // log(1 + e^x), stable
Var sum(Var a);       // -> 1x1
Var mean(Var a);      // -> 1x1
Var concat(Var a, Var b);  // along columns
Var softmax_rows(Var a);
// out[s] = sum of rows i with segment_ids[i] == s.
Var segment_sum(Var values, const std::vector<int>& segment_ids, size_t n_segments);
Var gather_rows(Var values, const std::vector<int>& indices);
Var sum_rows(Var a);  // column sums -> 1xC
// Each row of a scaled by the matching entry of the column vector w (Rx1).
Var scale_rows(Var a, Var w);

// Max over all parameter entries of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<Var(Tape&)>& f, std::vector<Parameter*> params, double eps = 1e-4);

}  // namespace xte::ad
