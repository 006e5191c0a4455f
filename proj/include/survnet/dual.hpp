#pragma once

// Forward-mode tangents carried as graph expressions.
//
// A Dual pairs an expression with its derivative in the scalar time input t
// (also an expression, or absent when the value does not depend on t). Since
// the tangent is itself part of the graph, a reverse sweep over it yields
// exact parameter gradients of quantities such as the event density.

#include <optional>

#include "survnet/diff.hpp"

namespace survnet {

struct Dual {
  diff::Expr value;
  std::optional<diff::Expr> tangent;
};

namespace dual {

inline Dual constant(diff::Expr v) { return {v, std::nullopt}; }

inline Dual affine(diff::Graph& g, const Dual& x, diff::Expr weight,
                   std::optional<diff::Expr> bias) {
  Dual out{g.affine(x.value, weight, bias), std::nullopt};
  if (x.tangent) out.tangent = g.affine(*x.tangent, weight);
  return out;
}

inline std::optional<diff::Expr> add_opt(diff::Graph& g, std::optional<diff::Expr> a,
                                         std::optional<diff::Expr> b) {
  if (a && b) return g.add(*a, *b);
  return a ? a : b;
}

inline Dual add(diff::Graph& g, const Dual& a, const Dual& b) {
  return {g.add(a.value, b.value), add_opt(g, a.tangent, b.tangent)};
}

inline Dual sub(diff::Graph& g, const Dual& a, const Dual& b) {
  std::optional<diff::Expr> t;
  if (a.tangent && b.tangent) {
    t = g.sub(*a.tangent, *b.tangent);
  } else if (a.tangent) {
    t = a.tangent;
  } else if (b.tangent) {
    t = g.neg(*b.tangent);
  }
  return {g.sub(a.value, b.value), t};
}

inline Dual hadamard(diff::Graph& g, const Dual& a, const Dual& b) {
  std::optional<diff::Expr> t;
  if (a.tangent) t = g.hadamard(*a.tangent, b.value);
  if (b.tangent) t = add_opt(g, t, g.hadamard(a.value, *b.tangent));
  return {g.hadamard(a.value, b.value), t};
}

inline Dual tanh(diff::Graph& g, const Dual& x) {
  Dual out{g.tanh(x.value), std::nullopt};
  if (x.tangent) {
    const diff::Expr slope = g.add_scalar(g.neg(g.hadamard(out.value, out.value)), 1.0);
    out.tangent = g.hadamard(slope, *x.tangent);
  }
  return out;
}

inline Dual softplus(diff::Graph& g, const Dual& x) {
  Dual out{g.softplus(x.value), std::nullopt};
  if (x.tangent) out.tangent = g.hadamard(g.sigmoid(x.value), *x.tangent);
  return out;
}

inline Dual exp(diff::Graph& g, const Dual& x) {
  Dual out{g.exp(x.value), std::nullopt};
  if (x.tangent) out.tangent = g.hadamard(out.value, *x.tangent);
  return out;
}

inline Dual row_sum(diff::Graph& g, const Dual& x) {
  Dual out{g.row_sum(x.value), std::nullopt};
  if (x.tangent) out.tangent = g.row_sum(*x.tangent);
  return out;
}

}  // namespace dual
}  // namespace survnet
