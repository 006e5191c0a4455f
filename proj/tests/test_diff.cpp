#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "support.hpp"
#include "survnet/diff.hpp"
#include "survnet/error.hpp"

using namespace survnet;
using namespace survnet::diff;
using survnet::testing::random_tensor;

namespace {

double eval1(const Graph& g, Expr e, const Bindings& b) { return eval_graph(g, e, b).item(); }

}  // namespace

TEST_CASE("eval_graph elementary values") {
  Graph g;
  Expr x = g.input("x", {1, 1});
  Bindings b;
  b.set("x", Tensor::scalar(0.0));
  CHECK(eval1(g, g.softplus(x), b) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(eval1(g, g.tanh(x), b) == 0.0);
  CHECK(eval1(g, g.sigmoid(x), b) == 0.5);

  Graph h;
  Expr v = h.input("v", {1, 1});
  Expr w = h.constant(Tensor::matrix({{2.0}}));
  Expr bias = h.constant(Tensor::row({0.5}));
  Bindings bv;
  bv.set("v", Tensor::scalar(1.0));
  CHECK(eval1(h, h.affine(v, w, bias), bv) == 2.5);
}

TEST_CASE("softplus is stable for large arguments") {
  Graph g;
  Expr x = g.input("x", {1, 3});
  Bindings b;
  b.set("x", Tensor::row({-800.0, 800.0, 30.0}));
  const Tensor v = eval_graph(g, g.softplus(x), b);
  CHECK(std::isfinite(v[0]));
  CHECK(v[0] >= 0.0);
  CHECK(v[1] == 800.0);
  CHECK(v[2] == doctest::Approx(30.0 + std::log1p(std::exp(-30.0))));
}

TEST_CASE("gradient examples") {
  Graph g;
  Expr x = g.input("x", {1, 1});
  Expr y = g.input("y", {1, 1});
  Bindings b;
  b.set("x", Tensor::scalar(0.0));
  b.set("y", Tensor::scalar(3.0));
  const std::vector<std::string> wx{"x"};
  CHECK(gradient(g, g.softplus(x), b, wx).at("x").item() == doctest::Approx(0.5));
  CHECK(gradient(g, g.tanh(x), b, wx).at("x").item() == doctest::Approx(1.0));

  b.set("x", Tensor::scalar(2.0));
  const std::vector<std::string> wxy{"x", "y"};
  const auto gr = gradient(g, g.hadamard(x, y), b, wxy);
  CHECK(gr.at("x").item() == 3.0);
  CHECK(gr.at("y").item() == 2.0);
}

TEST_CASE("errors") {
  Graph g;
  Expr x = g.input("x", {1, 2});
  Bindings empty;
  CHECK_THROWS_AS(eval_graph(g, g.sum(x), empty), BindingError);

  Bindings wrong;
  wrong.set("x", Tensor::row({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(eval_graph(g, g.sum(x), wrong), ShapeError);

  Bindings neg;
  neg.set("x", Tensor::row({1.0, -2.0}));
  CHECK_THROWS_AS(eval_graph(g, g.log(x), neg), DomainError);

  Expr y = g.input("y", {1, 3});
  CHECK_THROWS_AS(g.add(x, y), ShapeError);

  Bindings ok;
  ok.set("x", Tensor::row({1.0, 2.0}));
  const std::vector<std::string> wx{"x"};
  CHECK_THROWS_AS(gradient(g, g.exp(x), ok, wx), ContractError);
}

TEST_CASE("finite_diff_check examples") {
  Graph g;
  Expr w = g.input("w", {1, 1});
  Bindings b;
  b.set("w", Tensor::scalar(3.0));
  const std::vector<std::string> ww{"w"};
  CHECK(gradient(g, g.hadamard(w, w), b, ww).at("w").item() == 6.0);
  CHECK(finite_diff_check(g, g.hadamard(w, w), b, ww, 1e-5) <= 1e-6);

  Graph c;
  Expr z = c.input("z", {1, 1});
  Expr k = c.add(c.scale(z, 0.0), c.constant({1, 1}, 2.0));
  Bindings bz;
  bz.set("z", Tensor::scalar(1.0));
  const std::vector<std::string> wz{"z"};
  CHECK(finite_diff_check(c, k, bz, wz) == 0.0);
}

TEST_CASE("every op kind matches central differences on random instances") {
  using Builder = std::function<Expr(Graph&, Expr, Expr, Expr)>;
  // a and b are 2 x 3 inputs in [-3, 3]; p is a positive 2 x 3 input in [0.5, 3].
  const std::vector<std::pair<const char*, Builder>> cases{
      {"affine", [](Graph& g, Expr a, Expr, Expr) {
         Expr w = g.input("w", {4, 3});
         Expr bias = g.input("bias", {1, 4});
         return g.affine(a, w, bias);
       }},
      {"hadamard", [](Graph& g, Expr a, Expr b, Expr) { return g.hadamard(a, b); }},
      {"add", [](Graph& g, Expr a, Expr b, Expr) { return g.add(a, b); }},
      {"sub", [](Graph& g, Expr a, Expr b, Expr) { return g.sub(a, b); }},
      {"mul", [](Graph& g, Expr a, Expr, Expr) { return g.mul(g.input("s", {1, 1}), a); }},
      {"neg", [](Graph& g, Expr a, Expr, Expr) { return g.neg(a); }},
      {"exp", [](Graph& g, Expr a, Expr, Expr) { return g.exp(a); }},
      {"log", [](Graph& g, Expr, Expr, Expr p) { return g.log(p); }},
      {"log1mexp", [](Graph& g, Expr, Expr, Expr p) { return g.log1mexp(p); }},
      {"softplus", [](Graph& g, Expr a, Expr, Expr) { return g.softplus(a); }},
      {"tanh", [](Graph& g, Expr a, Expr, Expr) { return g.tanh(a); }},
      {"sigmoid", [](Graph& g, Expr a, Expr, Expr) { return g.sigmoid(a); }},
      {"relu", [](Graph& g, Expr a, Expr, Expr) { return g.relu(a); }},
      {"abs", [](Graph& g, Expr a, Expr, Expr) { return g.abs(a); }},
      {"power", [](Graph& g, Expr, Expr, Expr p) { return g.power(p, 2.5); }},
      {"sum", [](Graph& g, Expr a, Expr, Expr) { return g.sum(a); }},
      {"mean", [](Graph& g, Expr a, Expr, Expr) { return g.mean(a); }},
      {"scale", [](Graph& g, Expr a, Expr, Expr) { return g.scale(a, -1.7); }},
      {"add_scalar", [](Graph& g, Expr a, Expr, Expr) { return g.add_scalar(a, 0.3); }},
      {"clamp", [](Graph& g, Expr a, Expr, Expr) { return g.clamp(a, -1.0, 1.0); }},
      {"row_sum", [](Graph& g, Expr a, Expr, Expr) { return g.row_sum(a); }},
      {"broadcast_rows", [](Graph& g, Expr, Expr, Expr) {
         return g.broadcast_rows(g.input("r", {1, 3}), 4);
       }},
      {"broadcast_cols", [](Graph& g, Expr, Expr, Expr) {
         return g.broadcast_cols(g.input("c", {2, 1}), 5);
       }},
      {"concat_cols", [](Graph& g, Expr a, Expr b, Expr) { return g.concat_cols(a, g.row_sum(b)); }},
      {"where_negative", [](Graph& g, Expr a, Expr b, Expr p) { return g.where_negative(a, b, p); }},
  };

  std::mt19937_64 rng(11);
  for (const auto& [name, build] : cases) {
    CAPTURE(name);
    Graph g;
    Expr a = g.input("a", {2, 3});
    Expr b = g.input("b", {2, 3});
    Expr p = g.input("p", {2, 3});
    Expr out = build(g, a, b, p);
    // Random linear read-out so every output entry carries a distinct weight.
    Expr readout = g.input("readout", g.shape(out));
    Expr root = g.sum(g.hadamard(out, readout));
    const std::vector<std::string> wrt = g.input_names();
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      Bindings bind;
      for (const auto& in : wrt) {
        const double lo = in == "p" ? 0.5 : -3.0;
        bind.set(in, random_tensor(g.shape(*g.find_input(in)), lo, 3.0, rng));
      }
      worst = std::max(worst, finite_diff_check(g, root, bind, wrt, 1e-5));
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("eval_graph is pure") {
  std::mt19937_64 rng(3);
  Graph g;
  Expr x = g.input("x", {3, 4});
  Expr w = g.input("w", {2, 4});
  Expr root = g.mean(g.tanh(g.affine(x, w)));
  Bindings b;
  b.set("x", random_tensor({3, 4}, -1, 1, rng));
  b.set("w", random_tensor({2, 4}, -1, 1, rng));
  const Tensor before = *b.find("x");
  const Tensor v1 = eval_graph(g, root, b);
  const Tensor v2 = eval_graph(g, root, b);
  CHECK(v1 == v2);
  CHECK(*b.find("x") == before);
}

TEST_CASE("gradient of mean is exactly 1/len") {
  Graph g;
  Expr v = g.input("v", {1, 8});
  std::mt19937_64 rng(5);
  Bindings b;
  b.set("v", random_tensor({1, 8}, -3, 3, rng));
  const std::vector<std::string> wv{"v"};
  const Tensor gr = gradient(g, g.mean(v), b, wv).at("v");
  for (double x : gr.values()) CHECK(x == 1.0 / 8.0);
}

TEST_CASE("requested inputs without influence get zero adjoints") {
  Graph g;
  Expr x = g.input("x", {1, 2});
  g.input("unused", {2, 2});
  Bindings b;
  b.set("x", Tensor::row({1.0, 2.0}));
  b.set("unused", Tensor({2, 2}, 1.0));
  const std::vector<std::string> wrt{"x", "unused"};
  const auto gr = gradient(g, g.sum(x), b, wrt);
  CHECK(gr.at("unused") == Tensor({2, 2}, 0.0));
}
