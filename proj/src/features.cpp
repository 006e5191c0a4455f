#include "survnet/features.hpp"

#include <cmath>

#include "survnet/error.hpp"

namespace survnet {

namespace {

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

std::string layer_name(const DenseLayout& l, std::size_t k, const char* tensor) {
  return l.prefix + "." + std::to_string(k) + "." + tensor;
}

}  // namespace

std::size_t DenseLayout::output_width() const {
  if (head_width != 0) return head_width;
  return widths.empty() ? input_width : widths.back();
}

void DenseLayout::validate() const {
  if (input_width == 0) throw ConfigError("dense network: input width must be positive");
  for (std::size_t w : widths)
    if (w == 0) throw ConfigError("dense network: zero-width layer");
}

nlohmann::json DenseLayout::to_json() const {
  return {{"input_width", input_width},
          {"widths", widths},
          {"head_width", head_width},
          {"order", order == BlockOrder::kReluThenNorm ? "relu_norm" : "norm_relu"},
          {"prefix", prefix}};
}

DenseLayout DenseLayout::from_json(const nlohmann::json& j) {
  DenseLayout l;
  l.input_width = j.at("input_width").get<std::size_t>();
  l.widths = j.at("widths").get<std::vector<std::size_t>>();
  l.head_width = j.at("head_width").get<std::size_t>();
  const auto order = j.at("order").get<std::string>();
  if (order == "relu_norm") {
    l.order = BlockOrder::kReluThenNorm;
  } else if (order == "norm_relu") {
    l.order = BlockOrder::kNormThenRelu;
  } else {
    throw ParseError("unknown dense block order '" + order + "'");
  }
  l.prefix = j.at("prefix").get<std::string>();
  l.validate();
  return l;
}

void init_dense(const DenseLayout& layout, std::mt19937_64& rng, ParamSet& into) {
  layout.validate();
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const int l = static_cast<int>(k);
    into.add(layer_name(layout, k, "weight"), kaiming_uniform({out, in}, in, rng), false, l);
    into.add(layer_name(layout, k, "bias"), kaiming_uniform({1, out}, in, rng), false, l);
    into.add(layer_name(layout, k, "norm.gain"), Tensor({1, out}, 1.0), false, l);
    into.add(layer_name(layout, k, "norm.shift"), Tensor({1, out}, 0.0), false, l);
    in = out;
  }
  if (layout.head_width != 0) {
    const std::size_t k = layout.widths.size();
    const int l = static_cast<int>(k);
    into.add(layer_name(layout, k, "weight"), kaiming_uniform({layout.head_width, in}, in, rng),
             false, l);
    into.add(layer_name(layout, k, "bias"), kaiming_uniform({1, layout.head_width}, in, rng),
             false, l);
  }
}

diff::Expr layer_norm(diff::Graph& g, diff::Expr x, diff::Expr gain, diff::Expr shift,
                      double epsilon) {
  const Shape s = g.shape(x);
  const double inv_width = 1.0 / static_cast<double>(s.cols);
  const auto mean = g.scale(g.row_sum(x), inv_width);
  const auto centered = g.sub(x, g.broadcast_cols(mean, s.cols));
  const auto var = g.scale(g.row_sum(g.hadamard(centered, centered)), inv_width);
  const auto inv_std = g.power(g.add_scalar(var, epsilon), -0.5);
  const auto normed = g.hadamard(centered, g.broadcast_cols(inv_std, s.cols));
  return g.add(g.hadamard(normed, g.broadcast_rows(gain, s.rows)), g.broadcast_rows(shift, s.rows));
}

diff::Expr dense_graph(diff::Graph& g, const DenseLayout& layout, diff::Expr x) {
  layout.validate();
  if (g.shape(x).cols != layout.input_width) {
    throw ShapeError("dense network: input width " + std::to_string(g.shape(x).cols) +
                     ", expected " + std::to_string(layout.input_width));
  }
  diff::Expr cur = x;
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const auto w = g.input(layer_name(layout, k, "weight"), {out, in});
    const auto b = g.input(layer_name(layout, k, "bias"), {1, out});
    const auto gain = g.input(layer_name(layout, k, "norm.gain"), {1, out});
    const auto shift = g.input(layer_name(layout, k, "norm.shift"), {1, out});
    cur = g.affine(cur, w, b);
    if (layout.order == BlockOrder::kReluThenNorm) {
      cur = layer_norm(g, g.relu(cur), gain, shift);
    } else {
      cur = g.relu(layer_norm(g, cur, gain, shift));
    }
    in = out;
  }
  if (layout.head_width != 0) {
    const std::size_t k = layout.widths.size();
    const auto w = g.input(layer_name(layout, k, "weight"), {layout.head_width, in});
    const auto b = g.input(layer_name(layout, k, "bias"), {1, layout.head_width});
    cur = g.affine(cur, w, b);
  }
  return cur;
}

}  // namespace survnet
