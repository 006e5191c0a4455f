#include "survnet/diff.hpp"

#include <algorithm>
#include <cmath>

#include "survnet/error.hpp"

namespace survnet::diff {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

bool is_integer(double p) { return std::floor(p) == p; }

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kAffine: return "affine";
    case Op::kHadamard: return "hadamard";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kNeg: return "neg";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSoftplus: return "softplus";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kAbs: return "abs";
    case Op::kPower: return "power";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kClamp: return "clamp";
    case Op::kRowSum: return "row_sum";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kBroadcastCols: return "broadcast_cols";
    case Op::kConcatCols: return "concat_cols";
    case Op::kWhereNegative: return "where_negative";
    case Op::kLog1mExp: return "log1mexp";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Graph construction

const Graph::Node& Graph::node(Expr e) const {
  if (e.id < 0 || static_cast<std::size_t>(e.id) >= nodes_.size()) {
    throw ContractError("expression does not belong to this graph");
  }
  return nodes_[static_cast<std::size_t>(e.id)];
}

Expr Graph::push(Node n) {
  nodes_.push_back(n);
  return Expr{static_cast<int>(nodes_.size() - 1)};
}

void Graph::require_same_shape(const char* what, Expr a, Expr b) const {
  if (shape(a) != shape(b)) {
    throw ShapeError(std::string(what) + ": shapes " + shape(a).str() + " and " +
                     shape(b).str() + " differ");
  }
}

Expr Graph::input(const std::string& name, Shape shape) {
  if (auto it = input_index_.find(name); it != input_index_.end()) {
    const Expr e{it->second};
    if (this->shape(e) != shape) {
      throw ShapeError("input '" + name + "' redeclared with shape " + shape.str() +
                       ", previously " + this->shape(e).str());
    }
    return e;
  }
  Node n{Op::kInput, shape};
  n.slot = static_cast<int>(input_names_.size());
  input_names_.push_back(name);
  const Expr e = push(n);
  input_index_[name] = e.id;
  return e;
}

Expr Graph::constant(Tensor value) {
  Node n{Op::kConstant, value.shape()};
  n.slot = static_cast<int>(constants_.size());
  constants_.push_back(std::move(value));
  return push(n);
}

Expr Graph::affine(Expr x, Expr weight, std::optional<Expr> bias) {
  const Shape& xs = shape(x);
  const Shape& ws = shape(weight);
  if (xs.cols != ws.cols) {
    throw ShapeError("affine: input " + xs.str() + " incompatible with weight " + ws.str());
  }
  Node n{Op::kAffine, {xs.rows, ws.rows}, x.id, weight.id};
  if (bias) {
    const Shape& bs = shape(*bias);
    if (bs.rows != 1 || bs.cols != ws.rows) {
      throw ShapeError("affine: bias " + bs.str() + " incompatible with weight " + ws.str());
    }
    n.c = bias->id;
  }
  return push(n);
}

Expr Graph::hadamard(Expr a, Expr b) {
  require_same_shape("hadamard", a, b);
  return push({Op::kHadamard, shape(a), a.id, b.id});
}

Expr Graph::add(Expr a, Expr b) {
  require_same_shape("add", a, b);
  return push({Op::kAdd, shape(a), a.id, b.id});
}

Expr Graph::sub(Expr a, Expr b) {
  require_same_shape("sub", a, b);
  return push({Op::kSub, shape(a), a.id, b.id});
}

Expr Graph::mul(Expr scalar, Expr x) {
  if (shape(scalar).size() != 1) throw ShapeError("mul: first operand must be 1x1");
  return push({Op::kMul, shape(x), scalar.id, x.id});
}

Expr Graph::unary(Op op, Expr x, double p0, double p1) {
  Node n{op, shape(x), x.id};
  n.p0 = p0;
  n.p1 = p1;
  return push(n);
}

Expr Graph::neg(Expr x) { return unary(Op::kNeg, x); }
Expr Graph::exp(Expr x) { return unary(Op::kExp, x); }
Expr Graph::log(Expr x) { return unary(Op::kLog, x); }
Expr Graph::log1mexp(Expr x) { return unary(Op::kLog1mExp, x); }
Expr Graph::softplus(Expr x) { return unary(Op::kSoftplus, x); }
Expr Graph::tanh(Expr x) { return unary(Op::kTanh, x); }
Expr Graph::sigmoid(Expr x) { return unary(Op::kSigmoid, x); }
Expr Graph::relu(Expr x) { return unary(Op::kRelu, x); }
Expr Graph::abs(Expr x) { return unary(Op::kAbs, x); }
Expr Graph::power(Expr x, double exponent) { return unary(Op::kPower, x, exponent); }
Expr Graph::scale(Expr x, double factor) { return unary(Op::kScale, x, factor); }
Expr Graph::add_scalar(Expr x, double offset) { return unary(Op::kAddScalar, x, offset); }

Expr Graph::clamp(Expr x, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo must not exceed hi");
  return unary(Op::kClamp, x, lo, hi);
}

Expr Graph::sum(Expr x) { return push({Op::kSum, {1, 1}, x.id}); }
Expr Graph::mean(Expr x) {
  if (shape(x).size() == 0) throw ShapeError("mean of empty tensor");
  return push({Op::kMean, {1, 1}, x.id});
}

Expr Graph::row_sum(Expr x) { return push({Op::kRowSum, {shape(x).rows, 1}, x.id}); }

Expr Graph::broadcast_rows(Expr row, std::size_t rows) {
  if (shape(row).rows != 1) throw ShapeError("broadcast_rows: operand must have one row");
  return push({Op::kBroadcastRows, {rows, shape(row).cols}, row.id});
}

Expr Graph::broadcast_cols(Expr column, std::size_t cols) {
  if (shape(column).cols != 1) throw ShapeError("broadcast_cols: operand must have one column");
  return push({Op::kBroadcastCols, {shape(column).rows, cols}, column.id});
}

Expr Graph::concat_cols(Expr a, Expr b) {
  if (shape(a).rows != shape(b).rows) {
    throw ShapeError("concat_cols: row counts " + shape(a).str() + " and " + shape(b).str());
  }
  return push({Op::kConcatCols, {shape(a).rows, shape(a).cols + shape(b).cols}, a.id, b.id});
}

Expr Graph::where_negative(Expr condition, Expr if_negative, Expr otherwise) {
  require_same_shape("where_negative", condition, if_negative);
  require_same_shape("where_negative", condition, otherwise);
  return push({Op::kWhereNegative, shape(condition), condition.id, if_negative.id, otherwise.id});
}

std::vector<std::string> Graph::input_names() const { return input_names_; }

std::optional<Expr> Graph::find_input(const std::string& name) const {
  if (auto it = input_index_.find(name); it != input_index_.end()) return Expr{it->second};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Bindings

void Bindings::set(const std::string& name, Tensor value) {
  refs_[name] = std::make_shared<const Tensor>(std::move(value));
}

void Bindings::ref(const std::string& name, const Tensor& value) {
  refs_[name] = std::shared_ptr<const Tensor>(std::shared_ptr<const Tensor>(), &value);
}

const Tensor* Bindings::find(const std::string& name) const {
  auto it = refs_.find(name);
  return it == refs_.end() ? nullptr : it->second.get();
}

// ---------------------------------------------------------------------------
// Forward pass

Evaluation::Evaluation(const Graph& graph, const Bindings& bindings, std::span<const Expr> roots)
    : graph_(&graph), values_(graph.nodes_.size()), computed_(graph.nodes_.size(), 0) {
  const auto& nodes = graph.nodes_;
  std::vector<char> needed(nodes.size(), 0);
  int top = -1;
  for (Expr r : roots) {
    graph.node(r);
    needed[static_cast<std::size_t>(r.id)] = 1;
    top = std::max(top, r.id);
  }
  for (int i = top; i >= 0; --i) {
    if (!needed[static_cast<std::size_t>(i)]) continue;
    const auto& n = nodes[static_cast<std::size_t>(i)];
    for (int op : {n.a, n.b, n.c}) {
      if (op >= 0) needed[static_cast<std::size_t>(op)] = 1;
    }
  }

  for (int i = 0; i <= top; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!needed[idx]) continue;
    const auto& n = nodes[idx];
    Tensor out;
    auto in = [&](int k) -> const Tensor& { return values_[static_cast<std::size_t>(k)]; };
    auto map_unary = [&](auto&& fn) {
      const Tensor& x = in(n.a);
      out = Tensor(n.shape);
      for (std::size_t j = 0; j < x.size(); ++j) out[j] = fn(x[j]);
    };
    switch (n.op) {
      case Op::kInput: {
        const std::string& name = graph.input_names_[static_cast<std::size_t>(n.slot)];
        const Tensor* bound = bindings.find(name);
        if (bound == nullptr) throw BindingError("input '" + name + "' is not bound");
        if (bound->shape() != n.shape) {
          throw ShapeError("input '" + name + "' bound with shape " + bound->shape().str() +
                           ", expected " + n.shape.str());
        }
        out = *bound;
        break;
      }
      case Op::kConstant:
        out = graph.constants_[static_cast<std::size_t>(n.slot)];
        break;
      case Op::kAffine: {
        const Tensor& x = in(n.a);
        const Tensor& w = in(n.b);
        const std::size_t batch = x.rows(), inner = x.cols(), outw = w.rows();
        out = Tensor(n.shape);
        for (std::size_t r = 0; r < batch; ++r) {
          const double* xr = x.values().data() + r * inner;
          for (std::size_t o = 0; o < outw; ++o) {
            const double* wr = w.values().data() + o * inner;
            double acc = n.c >= 0 ? in(n.c)[o] : 0.0;
            for (std::size_t k = 0; k < inner; ++k) acc += wr[k] * xr[k];
            out(r, o) = acc;
          }
        }
        break;
      }
      case Op::kHadamard: {
        const Tensor& a = in(n.a);
        const Tensor& b = in(n.b);
        out = Tensor(n.shape);
        for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
        break;
      }
      case Op::kAdd: {
        const Tensor& a = in(n.a);
        const Tensor& b = in(n.b);
        out = Tensor(n.shape);
        for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + b[j];
        break;
      }
      case Op::kSub: {
        const Tensor& a = in(n.a);
        const Tensor& b = in(n.b);
        out = Tensor(n.shape);
        for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
        break;
      }
      case Op::kMul: {
        const double s = in(n.a)[0];
        const Tensor& x = in(n.b);
        out = Tensor(n.shape);
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = s * x[j];
        break;
      }
      case Op::kNeg: map_unary([](double v) { return -v; }); break;
      case Op::kExp: map_unary([](double v) { return std::exp(v); }); break;
      case Op::kLog:
        map_unary([](double v) {
          if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
          return std::log(v);
        });
        break;
      case Op::kLog1mExp:
        map_unary([](double v) {
          if (!(v > 0.0)) throw DomainError("log1mexp of non-positive value " + std::to_string(v));
          return std::log(-std::expm1(-v));
        });
        break;
      case Op::kSoftplus: map_unary(stable_softplus); break;
      case Op::kTanh: map_unary([](double v) { return std::tanh(v); }); break;
      case Op::kSigmoid: map_unary(stable_sigmoid); break;
      case Op::kRelu: map_unary([](double v) { return v > 0.0 ? v : 0.0; }); break;
      case Op::kAbs: map_unary([](double v) { return std::abs(v); }); break;
      case Op::kPower: {
        const double p = n.p0;
        map_unary([p](double v) {
          if (std::isnan(v) || (v < 0.0 && !is_integer(p)) || (v == 0.0 && p < 0.0)) {
            throw DomainError("power: invalid base " + std::to_string(v) + " for exponent " +
                              std::to_string(p));
          }
          return std::pow(v, p);
        });
        break;
      }
      case Op::kScale: {
        const double c = n.p0;
        map_unary([c](double v) { return c * v; });
        break;
      }
      case Op::kAddScalar: {
        const double c = n.p0;
        map_unary([c](double v) { return v + c; });
        break;
      }
      case Op::kClamp: {
        const double lo = n.p0, hi = n.p1;
        map_unary([lo, hi](double v) { return std::min(std::max(v, lo), hi); });
        break;
      }
      case Op::kSum:
      case Op::kMean: {
        const Tensor& x = in(n.a);
        double acc = 0.0;
        for (double v : x.values()) acc += v;
        if (n.op == Op::kMean) acc /= static_cast<double>(x.size());
        out = Tensor::scalar(acc);
        break;
      }
      case Op::kRowSum: {
        const Tensor& x = in(n.a);
        out = Tensor(n.shape);
        for (std::size_t r = 0; r < x.rows(); ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < x.cols(); ++c) acc += x(r, c);
          out[r] = acc;
        }
        break;
      }
      case Op::kBroadcastRows: {
        const Tensor& x = in(n.a);
        out = Tensor(n.shape);
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < n.shape.cols; ++c) out(r, c) = x[c];
        break;
      }
      case Op::kBroadcastCols: {
        const Tensor& x = in(n.a);
        out = Tensor(n.shape);
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < n.shape.cols; ++c) out(r, c) = x[r];
        break;
      }
      case Op::kConcatCols: {
        const Tensor& a = in(n.a);
        const Tensor& b = in(n.b);
        out = Tensor(n.shape);
        for (std::size_t r = 0; r < n.shape.rows; ++r) {
          for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
          for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
        }
        break;
      }
      case Op::kWhereNegative: {
        const Tensor& c = in(n.a);
        const Tensor& a = in(n.b);
        const Tensor& b = in(n.c);
        out = Tensor(n.shape);
        for (std::size_t j = 0; j < c.size(); ++j) out[j] = c[j] < 0.0 ? a[j] : b[j];
        break;
      }
    }
    values_[idx] = std::move(out);
    computed_[idx] = 1;
  }
}

const Tensor& Evaluation::value(Expr e) const {
  graph_->node(e);
  const auto idx = static_cast<std::size_t>(e.id);
  if (!computed_[idx]) throw ContractError("value requested for a node outside the evaluated roots");
  return values_[idx];
}

// ---------------------------------------------------------------------------
// Reverse pass

GradientMap Evaluation::gradient(Expr root, std::span<const std::string> wrt) const {
  const auto& nodes = graph_->nodes_;
  if (graph_->shape(root).size() != 1) {
    throw ContractError("gradient requires a scalar root, got shape " + graph_->shape(root).str());
  }
  const auto rid = static_cast<std::size_t>(root.id);
  if (!computed_[rid]) throw ContractError("gradient root was not evaluated");

  std::vector<Tensor> adj(nodes.size());
  std::vector<char> has(nodes.size(), 0);
  auto acc = [&](int k) -> Tensor& {
    const auto i = static_cast<std::size_t>(k);
    if (!has[i]) {
      adj[i] = Tensor(nodes[i].shape);
      has[i] = 1;
    }
    return adj[i];
  };
  acc(root.id)[0] = 1.0;

  for (int i = root.id; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!has[idx]) continue;
    const auto& n = nodes[idx];
    const Tensor& g = adj[idx];
    const Tensor& y = values_[idx];
    auto val = [&](int k) -> const Tensor& { return values_[static_cast<std::size_t>(k)]; };
    auto unary_back = [&](auto&& dfn) {
      const Tensor& x = val(n.a);
      Tensor& dx = acc(n.a);
      for (std::size_t j = 0; j < x.size(); ++j) dx[j] += g[j] * dfn(x[j], y[j]);
    };
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kAffine: {
        const Tensor& x = val(n.a);
        const Tensor& w = val(n.b);
        const std::size_t batch = x.rows(), inner = x.cols(), outw = w.rows();
        Tensor& dx = acc(n.a);
        Tensor& dw = acc(n.b);
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t o = 0; o < outw; ++o) {
            const double go = g(r, o);
            if (go == 0.0) continue;
            for (std::size_t k = 0; k < inner; ++k) {
              dx(r, k) += go * w(o, k);
              dw(o, k) += go * x(r, k);
            }
          }
        }
        if (n.c >= 0) {
          Tensor& db = acc(n.c);
          for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t o = 0; o < outw; ++o) db[o] += g(r, o);
        }
        break;
      }
      case Op::kHadamard: {
        const Tensor& a = val(n.a);
        const Tensor& b = val(n.b);
        Tensor& da = acc(n.a);
        for (std::size_t j = 0; j < a.size(); ++j) da[j] += g[j] * b[j];
        Tensor& db = acc(n.b);
        for (std::size_t j = 0; j < a.size(); ++j) db[j] += g[j] * a[j];
        break;
      }
      case Op::kAdd: {
        Tensor& da = acc(n.a);
        for (std::size_t j = 0; j < g.size(); ++j) da[j] += g[j];
        Tensor& db = acc(n.b);
        for (std::size_t j = 0; j < g.size(); ++j) db[j] += g[j];
        break;
      }
      case Op::kSub: {
        Tensor& da = acc(n.a);
        for (std::size_t j = 0; j < g.size(); ++j) da[j] += g[j];
        Tensor& db = acc(n.b);
        for (std::size_t j = 0; j < g.size(); ++j) db[j] -= g[j];
        break;
      }
      case Op::kMul: {
        const double s = val(n.a)[0];
        const Tensor& x = val(n.b);
        double ds = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) ds += g[j] * x[j];
        acc(n.a)[0] += ds;
        Tensor& dx = acc(n.b);
        for (std::size_t j = 0; j < x.size(); ++j) dx[j] += g[j] * s;
        break;
      }
      case Op::kNeg: unary_back([](double, double) { return -1.0; }); break;
      case Op::kExp: unary_back([](double, double out) { return out; }); break;
      case Op::kLog: unary_back([](double x, double) { return 1.0 / x; }); break;
      case Op::kLog1mExp: unary_back([](double x, double) { return 1.0 / std::expm1(x); }); break;
      case Op::kSoftplus: unary_back([](double x, double) { return stable_sigmoid(x); }); break;
      case Op::kTanh: unary_back([](double, double out) { return 1.0 - out * out; }); break;
      case Op::kSigmoid: unary_back([](double, double out) { return out * (1.0 - out); }); break;
      case Op::kRelu: unary_back([](double x, double) { return x > 0.0 ? 1.0 : 0.0; }); break;
      case Op::kAbs:
        unary_back([](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
        break;
      case Op::kPower: {
        const double p = n.p0;
        unary_back([p](double x, double) { return p == 0.0 ? 0.0 : p * std::pow(x, p - 1.0); });
        break;
      }
      case Op::kScale: {
        const double c = n.p0;
        unary_back([c](double, double) { return c; });
        break;
      }
      case Op::kAddScalar: unary_back([](double, double) { return 1.0; }); break;
      case Op::kClamp: {
        const double lo = n.p0, hi = n.p1;
        unary_back([lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
        break;
      }
      case Op::kSum: {
        Tensor& dx = acc(n.a);
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += g[0];
        break;
      }
      case Op::kMean: {
        Tensor& dx = acc(n.a);
        const double share = g[0] / static_cast<double>(dx.size());
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += share;
        break;
      }
      case Op::kRowSum: {
        Tensor& dx = acc(n.a);
        for (std::size_t r = 0; r < dx.rows(); ++r)
          for (std::size_t c = 0; c < dx.cols(); ++c) dx(r, c) += g[r];
        break;
      }
      case Op::kBroadcastRows: {
        Tensor& dx = acc(n.a);
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < n.shape.cols; ++c) dx[c] += g(r, c);
        break;
      }
      case Op::kBroadcastCols: {
        Tensor& dx = acc(n.a);
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < n.shape.cols; ++c) dx[r] += g(r, c);
        break;
      }
      case Op::kConcatCols: {
        Tensor& da = acc(n.a);
        const std::size_t ac = da.cols();
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < ac; ++c) da(r, c) += g(r, c);
        Tensor& db = acc(n.b);
        for (std::size_t r = 0; r < n.shape.rows; ++r)
          for (std::size_t c = 0; c < db.cols(); ++c) db(r, c) += g(r, ac + c);
        break;
      }
      case Op::kWhereNegative: {
        const Tensor& c = val(n.a);
        Tensor& da = acc(n.b);
        for (std::size_t j = 0; j < c.size(); ++j)
          if (c[j] < 0.0) da[j] += g[j];
        Tensor& db = acc(n.c);
        for (std::size_t j = 0; j < c.size(); ++j)
          if (!(c[j] < 0.0)) db[j] += g[j];
        break;
      }
    }
  }

  GradientMap out;
  for (const auto& name : wrt) {
    auto it = graph_->input_index_.find(name);
    if (it == graph_->input_index_.end()) {
      throw BindingError("gradient requested for unknown input '" + name + "'");
    }
    const auto i = static_cast<std::size_t>(it->second);
    out[name] = has[i] ? adj[i] : Tensor(nodes[i].shape);
  }
  return out;
}

Tensor eval_graph(const Graph& graph, Expr root, const Bindings& bindings) {
  const Expr roots[] = {root};
  return Evaluation(graph, bindings, roots).value(root);
}

GradientMap gradient(const Graph& graph, Expr root, const Bindings& bindings,
                     std::span<const std::string> wrt) {
  if (graph.shape(root).size() != 1) {
    throw ContractError("gradient requires a scalar root, got shape " + graph.shape(root).str());
  }
  const Expr roots[] = {root};
  return Evaluation(graph, bindings, roots).gradient(root, wrt);
}

double finite_diff_check(const Graph& graph, Expr root, const Bindings& bindings,
                         std::span<const std::string> wrt, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_diff_check: eps must be positive");
  const GradientMap analytic = gradient(graph, root, bindings, wrt);
  double worst = 0.0;
  for (const auto& name : wrt) {
    const Tensor* base = bindings.find(name);
    if (base == nullptr) throw BindingError("input '" + name + "' is not bound");
    const Tensor& grad = analytic.at(name);
    for (std::size_t j = 0; j < base->size(); ++j) {
      Bindings shifted = bindings;
      Tensor plus = *base;
      Tensor minus = *base;
      plus[j] += eps;
      minus[j] -= eps;
      shifted.set(name, plus);
      const double fp = eval_graph(graph, root, shifted).item();
      shifted.set(name, minus);
      const double fm = eval_graph(graph, root, shifted).item();
      const double numeric = (fp - fm) / (2.0 * eps);
      const double err = std::abs(grad[j] - numeric) / std::max(1.0, std::abs(grad[j]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace survnet::diff
