#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Graph records operations in creation order, so node ids are already a
// topological order. Graphs carry no values; inputs are bound by name at
// evaluation time, which lets one graph be evaluated under many bindings.

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survnet/tensor.hpp"

namespace survnet::diff {

enum class Op {
  kInput,
  kConstant,
  kAffine,         // x * W^T + b, x: B x in, W: out x in, b: 1 x out
  kHadamard,       // elementwise product, equal shapes
  kAdd,
  kSub,
  kMul,            // 1 x 1 scalar times tensor
  kNeg,
  kExp,
  kLog,
  kSoftplus,
  kTanh,
  kSigmoid,
  kRelu,
  kAbs,
  kPower,          // x^p for constant p
  kSum,            // all entries -> 1 x 1
  kMean,           // all entries -> 1 x 1
  kScale,          // c * x for constant c
  kAddScalar,      // x + c for constant c
  kClamp,          // min(max(x, lo), hi)
  kRowSum,         // B x n -> B x 1
  kBroadcastRows,  // 1 x n -> B x n
  kBroadcastCols,  // B x 1 -> B x n
  kConcatCols,     // [a, b] along columns
  kWhereNegative,  // c < 0 ? a : b, no gradient through c
  kLog1mExp,       // log(1 - exp(-x)), x > 0
};

const char* op_name(Op op);

// Handle to a node of a Graph.
struct Expr {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  // Declares a named input. Declaring the same name twice returns the same
  // node; the shapes must agree.
  Expr input(const std::string& name, Shape shape);
  Expr constant(Tensor value);
  Expr constant(Shape shape, double fill) { return constant(Tensor(shape, fill)); }

  Expr affine(Expr x, Expr weight, std::optional<Expr> bias = std::nullopt);
  Expr hadamard(Expr a, Expr b);
  Expr add(Expr a, Expr b);
  Expr sub(Expr a, Expr b);
  Expr mul(Expr scalar, Expr x);
  Expr neg(Expr x);
  Expr exp(Expr x);
  Expr log(Expr x);
  Expr log1mexp(Expr x);
  Expr softplus(Expr x);
  Expr tanh(Expr x);
  Expr sigmoid(Expr x);
  Expr relu(Expr x);
  Expr abs(Expr x);
  Expr power(Expr x, double exponent);
  Expr sum(Expr x);
  Expr mean(Expr x);
  Expr scale(Expr x, double factor);
  Expr add_scalar(Expr x, double offset);
  Expr clamp(Expr x, double lo, double hi = std::numeric_limits<double>::infinity());
  Expr row_sum(Expr x);
  Expr broadcast_rows(Expr row, std::size_t rows);
  Expr broadcast_cols(Expr column, std::size_t cols);
  Expr concat_cols(Expr a, Expr b);
  Expr where_negative(Expr condition, Expr if_negative, Expr otherwise);

  const Shape& shape(Expr e) const { return node(e).shape; }
  Op op(Expr e) const { return node(e).op; }
  std::size_t size() const { return nodes_.size(); }
  std::vector<std::string> input_names() const;
  std::optional<Expr> find_input(const std::string& name) const;

 private:
  friend class Evaluation;

  struct Node {
    Op op;
    Shape shape;
    int a = -1;
    int b = -1;
    int c = -1;
    double p0 = 0.0;
    double p1 = 0.0;
    int slot = -1;  // input name index or constant index
  };

  const Node& node(Expr e) const;
  Expr push(Node n);
  Expr unary(Op op, Expr x, double p0 = 0.0, double p1 = 0.0);
  void require_same_shape(const char* what, Expr a, Expr b) const;

  std::vector<Node> nodes_;
  std::vector<std::string> input_names_;
  std::vector<Tensor> constants_;
  std::map<std::string, int> input_index_;
};

// Name -> tensor. Values are either owned or borrowed; borrowed tensors must
// outlive every evaluation that uses the bindings.
class Bindings {
 public:
  void set(const std::string& name, Tensor value);
  void ref(const std::string& name, const Tensor& value);
  const Tensor* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

 private:
  std::map<std::string, std::shared_ptr<const Tensor>> refs_;
};

using GradientMap = std::map<std::string, Tensor>;

// Forward values of every node reachable from the requested roots.
class Evaluation {
 public:
  Evaluation(const Graph& graph, const Bindings& bindings, std::span<const Expr> roots);

  const Tensor& value(Expr e) const;
  const Graph& graph() const { return *graph_; }

  // Reverse sweep from a 1 x 1 root. Requested inputs that do not influence
  // the root receive zero adjoints.
  GradientMap gradient(Expr root, std::span<const std::string> wrt) const;

 private:
  const Graph* graph_;
  std::vector<Tensor> values_;
  std::vector<char> computed_;
};

Tensor eval_graph(const Graph& graph, Expr root, const Bindings& bindings);
GradientMap gradient(const Graph& graph, Expr root, const Bindings& bindings,
                     std::span<const std::string> wrt);

// Max over all entries of the requested inputs of
// |analytic - central difference| / max(1, |analytic|).
double finite_diff_check(const Graph& graph, Expr root, const Bindings& bindings,
                         std::span<const std::string> wrt, double eps = 1e-5);

}  // namespace survnet::diff
