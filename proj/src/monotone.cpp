#include "survnet/monotone.hpp"

#include <cmath>

#include "survnet/error.hpp"

namespace survnet::monotone {

namespace {

void validate_widths(std::size_t input_width, const std::vector<std::size_t>& widths,
                     const char* what) {
  if (input_width == 0) throw ConfigError(std::string(what) + ": input width must be positive");
  if (widths.empty()) throw ConfigError(std::string(what) + ": at least one layer is required");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError(std::string(what) + ": zero-width layer");
  }
}

Tensor abs_normal(Shape shape, double stddev, double factor, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(shape);
  for (double& v : t.values()) v = factor * std::abs(dist(rng));
  return t;
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor scaled_abs(Tensor t, double factor) {
  for (double& v : t.values()) v = factor * std::abs(v);
  return t;
}

std::vector<double> single_row(const diff::Graph& g, diff::Expr root, const diff::Bindings& b) {
  const Tensor out = diff::eval_graph(g, root, b);
  return {out.values().begin(), out.values().end()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Layouts

void MondeLayout::validate() const { validate_widths(input_width, widths, "MONDE"); }

std::string MondeLayout::name(std::size_t layer, const char* tensor) const {
  return prefix + "." + std::to_string(layer) + "." + tensor;
}

nlohmann::json MondeLayout::to_json() const {
  return {{"input_width", input_width}, {"widths", widths}, {"prefix", prefix}};
}

MondeLayout MondeLayout::from_json(const nlohmann::json& j) {
  MondeLayout l;
  l.input_width = j.at("input_width").get<std::size_t>();
  l.widths = j.at("widths").get<std::vector<std::size_t>>();
  l.prefix = j.at("prefix").get<std::string>();
  l.validate();
  return l;
}

void MondePlusLayout::validate() const {
  validate_widths(input_width, widths, "MONDE+");
  if (hadamard_width == 0) throw ConfigError("MONDE+: zero hadamard width");
}

std::string MondePlusLayout::name(std::size_t layer, const char* tensor) const {
  return prefix + "." + std::to_string(layer) + "." + tensor;
}

nlohmann::json MondePlusLayout::to_json() const {
  return {{"input_width", input_width},
          {"widths", widths},
          {"hadamard_width", hadamard_width},
          {"prefix", prefix}};
}

MondePlusLayout MondePlusLayout::from_json(const nlohmann::json& j) {
  MondePlusLayout l;
  l.input_width = j.at("input_width").get<std::size_t>();
  l.widths = j.at("widths").get<std::vector<std::size_t>>();
  l.hadamard_width = j.at("hadamard_width").get<std::size_t>();
  l.prefix = j.at("prefix").get<std::string>();
  l.validate();
  return l;
}

// ---------------------------------------------------------------------------
// Initialization

void init_monde(const MondeLayout& layout, std::mt19937_64& rng, ParamSet& into) {
  layout.validate();
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const int layer = static_cast<int>(k);
    into.add(layout.name(k, "W.weight"),
             abs_normal({out, in}, 1.0 / static_cast<double>(in), kMondeWeightFactor, rng),
             true, layer);
    into.add(layout.name(k, "W.bias"),
             abs_normal({1, out}, 1.0 / static_cast<double>(out), kMondeBiasFactor, rng),
             false, layer);
    in = out;
  }
}

MondeParams init_monde(const MondeLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MondeParams p{layout, {}};
  init_monde(layout, rng, p.params);
  return p;
}

void init_monde_plus(const MondePlusLayout& layout, std::mt19937_64& rng, ParamSet& into) {
  layout.validate();
  const std::size_t x_width = layout.input_width;
  const std::size_t h = layout.hadamard_width;
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const int layer = static_cast<int>(k);
    into.add(layout.name(k, "A.weight"),
             scaled_abs(kaiming_uniform({out, h}, h, rng), kMondePlusMatrixFactor), true, layer);
    into.add(layout.name(k, "B.weight"),
             scaled_abs(kaiming_uniform({out, in}, in, rng), kMondePlusMatrixFactor), true, layer);
    into.add(layout.name(k, "B.bias"),
             scaled_abs(kaiming_uniform({1, out}, in, rng), kMondePlusBBiasFactor), false, layer);
    into.add(layout.name(k, "G.weight"),
             scaled_abs(kaiming_uniform({h, in}, in, rng), kMondePlusMatrixFactor), true, layer);
    into.add(layout.name(k, "G.bias"),
             scaled_abs(kaiming_uniform({1, h}, in, rng), kMondePlusGBiasFactor), false, layer);
    into.add(layout.name(k, "H.weight"),
             scaled_abs(kaiming_uniform({out, in}, in, rng), kMondePlusMatrixFactor), true, layer);
    into.add(layout.name(k, "H.bias"), kaiming_uniform({1, out}, in, rng), false, layer);
    into.add(layout.name(k, "L.weight"), kaiming_uniform({out, x_width}, x_width, rng), false,
             layer);
    into.add(layout.name(k, "L.bias"), kaiming_uniform({1, out}, x_width, rng), false, layer);
    Tensor a({1, h});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : a.values()) v = unit(rng);
    into.add(layout.name(k, "a"), std::move(a), true, layer);
    into.add(layout.name(k, "b"), Tensor({1, h}), false, layer);
    in = out;
  }
}

MondePlusParams init_monde_plus(const MondePlusLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MondePlusParams p{layout, {}};
  init_monde_plus(layout, rng, p.params);
  return p;
}

MondeParams zero_monde(const MondeLayout& layout) {
  layout.validate();
  MondeParams p{layout, {}};
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    p.params.add(layout.name(k, "W.weight"), Tensor({out, in}), true, static_cast<int>(k));
    p.params.add(layout.name(k, "W.bias"), Tensor({1, out}), false, static_cast<int>(k));
    in = out;
  }
  return p;
}

MondePlusParams zero_monde_plus(const MondePlusLayout& layout) {
  layout.validate();
  MondePlusParams p{layout, {}};
  const std::size_t h = layout.hadamard_width;
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const int l = static_cast<int>(k);
    p.params.add(layout.name(k, "A.weight"), Tensor({out, h}), true, l);
    p.params.add(layout.name(k, "B.weight"), Tensor({out, in}), true, l);
    p.params.add(layout.name(k, "B.bias"), Tensor({1, out}), false, l);
    p.params.add(layout.name(k, "G.weight"), Tensor({h, in}), true, l);
    p.params.add(layout.name(k, "G.bias"), Tensor({1, h}), false, l);
    p.params.add(layout.name(k, "H.weight"), Tensor({out, in}), true, l);
    p.params.add(layout.name(k, "H.bias"), Tensor({1, out}), false, l);
    p.params.add(layout.name(k, "L.weight"), Tensor({out, layout.input_width}), false, l);
    p.params.add(layout.name(k, "L.bias"), Tensor({1, out}), false, l);
    p.params.add(layout.name(k, "a"), Tensor({1, h}), true, l);
    p.params.add(layout.name(k, "b"), Tensor({1, h}), false, l);
    in = out;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graphs

Dual monde_graph(diff::Graph& g, const MondeLayout& layout, const Dual& z) {
  layout.validate();
  if (g.shape(z.value).cols != layout.input_width) {
    throw ShapeError("MONDE: input width " + std::to_string(g.shape(z.value).cols) +
                     ", expected " + std::to_string(layout.input_width));
  }
  Dual cur = z;
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const auto w = g.input(layout.name(k, "W.weight"), {out, in});
    const auto b = g.input(layout.name(k, "W.bias"), {1, out});
    cur = dual::affine(g, cur, w, b);
    if (k + 1 < layout.widths.size()) cur = dual::tanh(g, cur);
    in = out;
  }
  return cur;
}

Dual monde_plus_graph(diff::Graph& g, const MondePlusLayout& layout, const Dual& t,
                      diff::Expr z0) {
  layout.validate();
  const Shape ts = g.shape(t.value);
  if (ts.cols != 1) throw ShapeError("MONDE+: time input must be a column");
  if (g.shape(z0).cols != layout.input_width || g.shape(z0).rows != ts.rows) {
    throw ShapeError("MONDE+: feature input " + g.shape(z0).str() + " incompatible with layout");
  }
  const std::size_t batch = ts.rows;
  const std::size_t h = layout.hadamard_width;
  const std::size_t x_width = layout.input_width;

  Dual z = dual::constant(z0);
  std::size_t in = layout.input_width;
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    const std::size_t out = layout.widths[k];
    const auto A = g.input(layout.name(k, "A.weight"), {out, h});
    const auto B = g.input(layout.name(k, "B.weight"), {out, in});
    const auto Bb = g.input(layout.name(k, "B.bias"), {1, out});
    const auto G = g.input(layout.name(k, "G.weight"), {h, in});
    const auto Gb = g.input(layout.name(k, "G.bias"), {1, h});
    const auto H = g.input(layout.name(k, "H.weight"), {out, in});
    const auto Hb = g.input(layout.name(k, "H.bias"), {1, out});
    const auto L = g.input(layout.name(k, "L.weight"), {out, x_width});
    const auto Lb = g.input(layout.name(k, "L.bias"), {1, out});
    const auto a = g.input(layout.name(k, "a"), {1, h});
    const auto b = g.input(layout.name(k, "b"), {1, h});

    // a t + b, broadcast over the batch
    const auto a_rows = g.broadcast_rows(a, batch);
    Dual u{g.add(g.hadamard(g.broadcast_cols(t.value, h), a_rows), g.broadcast_rows(b, batch)),
           std::nullopt};
    if (t.tangent) u.tangent = g.hadamard(g.broadcast_cols(*t.tangent, h), a_rows);

    const Dual time_gate = dual::softplus(g, u);
    const Dual state_gate = dual::softplus(g, dual::affine(g, z, G, Gb));
    const Dual mixed = dual::affine(g, dual::hadamard(g, time_gate, state_gate), A, std::nullopt);
    Dual pre = dual::add(g, mixed, dual::affine(g, z, B, Bb));
    pre = dual::add(g, pre, dual::constant(g.affine(z0, L, Lb)));
    const Dual act = k + 1 < layout.widths.size() ? dual::tanh(g, pre) : pre;
    z = dual::add(g, dual::affine(g, z, H, Hb), act);
    in = out;
  }
  return z;
}

std::vector<double> monde_forward(const MondeParams& params, std::span<const double> z) {
  if (z.size() != params.layout.input_width) {
    throw ShapeError("MONDE: input length " + std::to_string(z.size()) + ", expected " +
                     std::to_string(params.layout.input_width));
  }
  diff::Graph g;
  const auto zin = g.input("z", {1, z.size()});
  const Dual out = monde_graph(g, params.layout, dual::constant(zin));
  diff::Bindings b;
  params.params.bind(b);
  b.set("z", Tensor::row(z));
  return single_row(g, out.value, b);
}

std::vector<double> monde_plus_forward(const MondePlusParams& params, double t,
                                       std::span<const double> x) {
  if (x.size() != params.layout.input_width) {
    throw ShapeError("MONDE+: feature length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(params.layout.input_width));
  }
  diff::Graph g;
  const auto tin = g.input("t", {1, 1});
  const auto xin = g.input("x", {1, x.size()});
  const Dual out = monde_plus_graph(g, params.layout, dual::constant(tin), xin);
  diff::Bindings b;
  params.params.bind(b);
  b.set("t", Tensor::scalar(t));
  b.set("x", Tensor::row(x));
  return single_row(g, out.value, b);
}

void project_nonnegative(MondeParams& params) { params.params.project_nonnegative(); }
void project_nonnegative(MondePlusParams& params) { params.params.project_nonnegative(); }

nlohmann::json to_json(const MondePlusParams& params) {
  return {{"layout", params.layout.to_json()}, {"params", params.params.to_json()}};
}

MondePlusParams monde_plus_from_json(const nlohmann::json& j) {
  return {MondePlusLayout::from_json(j.at("layout")), ParamSet::from_json(j.at("params"))};
}

nlohmann::json to_json(const MondeParams& params) {
  return {{"layout", params.layout.to_json()}, {"params", params.params.to_json()}};
}

MondeParams monde_from_json(const nlohmann::json& j) {
  return {MondeLayout::from_json(j.at("layout")), ParamSet::from_json(j.at("params"))};
}

}  // namespace survnet::monotone
