#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "survnet/error.hpp"
#include "survnet/monotone.hpp"

using namespace survnet;
using namespace survnet::monotone;

namespace {

MondePlusParams random_projected_monde_plus(std::size_t x_width, std::vector<std::size_t> widths,
                                            std::size_t h, std::mt19937_64& rng) {
  MondePlusParams p = zero_monde_plus({x_width, widths, h, "m"});
  for (auto& param : p.params.items()) {
    param.value = testing::random_tensor(param.value.shape(), -2.0, 2.0, rng);
  }
  project_nonnegative(p);
  return p;
}

}  // namespace

TEST_CASE("monde_forward hand examples") {
  MondeParams one = zero_monde({1, {1}, "m"});
  one.params.value("m.0.W.weight")[0] = 2.0;
  one.params.value("m.0.W.bias")[0] = 0.5;
  const std::vector<double> z1{1.0};
  CHECK(monde_forward(one, z1)[0] == 2.5);

  MondeParams two = zero_monde({1, {1, 1}, "m"});
  two.params.value("m.0.W.weight")[0] = 1.0;
  two.params.value("m.1.W.weight")[0] = 1.0;
  const std::vector<double> z0{0.0}, zh{0.5}, zf{1.0};
  CHECK(monde_forward(two, z0)[0] == 0.0);
  const double mid = monde_forward(two, zh)[0];
  CHECK(mid == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  CHECK(mid == doctest::Approx(0.462).epsilon(1e-3));
  CHECK(monde_forward(two, zf)[0] == doctest::Approx(0.762).epsilon(1e-3));
  CHECK(monde_forward(two, zf)[0] > mid);

  const std::vector<double> bad{1.0, 2.0};
  CHECK_THROWS_AS(monde_forward(one, bad), ShapeError);
}

TEST_CASE("monde_plus_forward hand examples") {
  MondePlusParams p = zero_monde_plus({1, {1}, 1, "m"});
  p.params.value("m.0.A.weight")[0] = 1.0;
  p.params.value("m.0.a")[0] = 1.0;
  const double ln2 = std::log(2.0);
  const std::vector<double> x{0.7};
  CHECK(monde_plus_forward(p, 0.0, x)[0] == doctest::Approx(ln2 * ln2).epsilon(1e-14));
  CHECK(monde_plus_forward(p, 0.0, x)[0] == doctest::Approx(0.4805).epsilon(1e-4));
  const double at1 = monde_plus_forward(p, 1.0, x)[0];
  CHECK(at1 == doctest::Approx(std::log1p(std::exp(1.0)) * ln2).epsilon(1e-14));
  CHECK(at1 == doctest::Approx(0.9103).epsilon(1e-4));
  CHECK(monde_plus_forward(p, 1.0, x) == monde_plus_forward(p, 1.0, x));

  const std::vector<double> bad{1.0, 2.0};
  CHECK_THROWS_AS(monde_plus_forward(p, 0.0, bad), ShapeError);
}

TEST_CASE("init_monde") {
  const MondeLayout layout{3, {8, 8, 1}, "m"};
  const MondeParams a = init_monde(layout, 42);
  const MondeParams b = init_monde(layout, 42);
  CHECK(a.params == b.params);
  CHECK_FALSE(a.params == init_monde(layout, 43).params);
  for (const auto& p : a.params.items()) {
    if (p.name.find("weight") == std::string::npos) continue;
    CHECK(p.nonnegative);
    for (double v : p.value.values()) CHECK(v >= 0.0);
  }
  CHECK_THROWS_AS(init_monde(MondeLayout{3, {8, 0, 1}, "m"}, 1), ConfigError);
  CHECK_THROWS_AS(init_monde(MondeLayout{3, {}, "m"}, 1), ConfigError);
}

TEST_CASE("init_monde_plus") {
  const MondePlusLayout layout{4, {32, 32, 3}, 16, "m"};
  const MondePlusParams a = init_monde_plus(layout, 7);
  CHECK(a.params == init_monde_plus(layout, 7).params);
  CHECK(a.params.satisfies_constraints());
  for (std::size_t k = 0; k < layout.widths.size(); ++k) {
    for (double v : a.params.value(layout.name(k, "a")).values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (double v : a.params.value(layout.name(k, "b")).values()) CHECK(v == 0.0);
    for (double v : a.params.value(layout.name(k, "B.bias")).values()) CHECK(v <= 0.0);
    for (double v : a.params.value(layout.name(k, "G.bias")).values()) CHECK(v >= 0.0);
    CHECK_FALSE(a.params.contains(layout.name(k, "A.bias")));
  }
  for (const char* t : {"A.weight", "B.weight", "G.weight", "H.weight", "a"}) {
    CHECK(a.params.at(layout.name(0, t)).nonnegative);
  }
  CHECK_FALSE(a.params.at(layout.name(0, "L.weight")).nonnegative);
  CHECK_FALSE(a.params.at(layout.name(0, "b")).nonnegative);
  CHECK_THROWS_AS(init_monde_plus(MondePlusLayout{4, {32, 0}, 16, "m"}, 1), ConfigError);
}

TEST_CASE("project_nonnegative") {
  MondePlusParams p = zero_monde_plus({1, {2}, 2, "m"});
  p.params.value("m.0.A.weight")[0] = -0.3;
  p.params.value("m.0.L.weight")[0] = -0.3;
  project_nonnegative(p);
  CHECK(p.params.value("m.0.A.weight")[0] == 0.0);
  CHECK(p.params.value("m.0.L.weight")[0] == -0.3);

  std::mt19937_64 rng(1);
  MondePlusParams q = random_projected_monde_plus(2, {4, 1}, 3, rng);
  const MondePlusParams before = q;
  const std::vector<double> x{0.2, -0.4};
  const auto out = monde_plus_forward(q, 0.5, x);
  project_nonnegative(q);
  CHECK(q.params == before.params);
  CHECK(monde_plus_forward(q, 0.5, x) == out);
}

TEST_CASE("MONDE is monotone in every input coordinate") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0), step(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    MondeParams p = zero_monde({3, {5, 4, 2}, "m"});
    for (auto& param : p.params.items()) param.value = testing::random_tensor(param.value.shape(), -2, 2, rng);
    project_nonnegative(p);
    std::vector<double> z{u(rng), u(rng), u(rng)};
    std::vector<double> z2 = z;
    for (double& v : z2) v += step(rng);
    const auto a = monde_forward(p, z);
    const auto b = monde_forward(p, z2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] <= b[i]);
  }
}

TEST_CASE("MONDE+ is monotone in t") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), tu(0.0, 2.0);
  std::size_t violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const MondePlusParams p = random_projected_monde_plus(3, {6, 6, 2}, 4, rng);
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    double t1 = tu(rng), t2 = tu(rng);
    if (t1 > t2) std::swap(t1, t2);
    const auto a = monde_plus_forward(p, t1, x);
    const auto b = monde_plus_forward(p, t2, x);
    for (std::size_t i = 0; i < a.size(); ++i) violations += a[i] > b[i];
  }
  CHECK(violations == 0);
}

TEST_CASE("MONDE+ layers contain MONDE layers") {
  std::mt19937_64 rng(4);
  const std::vector<std::size_t> widths{5, 4, 1};
  for (int rep = 0; rep < 50; ++rep) {
    MondePlusParams plus = zero_monde_plus({3, widths, 2, "p"});
    MondeParams monde = zero_monde({3, widths, "m"});
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const Tensor& shape_w = plus.params.value(plus.layout.name(k, "B.weight"));
      Tensor w = testing::random_tensor(shape_w.shape(), 0.0, 2.0, rng);
      Tensor b = testing::random_tensor({1, widths[k]}, -1.0, 1.0, rng);
      plus.params.value(plus.layout.name(k, "B.weight")) = w;
      plus.params.value(plus.layout.name(k, "B.bias")) = b;
      monde.params.value(monde.layout.name(k, "W.weight")) = w;
      monde.params.value(monde.layout.name(k, "W.bias")) = b;
      // G stays random: with A = 0 it must not matter.
      plus.params.value(plus.layout.name(k, "G.weight")) =
          testing::random_tensor(plus.params.value(plus.layout.name(k, "G.weight")).shape(), 0.0, 1.0, rng);
    }
    const std::vector<double> x{0.3, -1.2, 0.8};
    const double a = monde_plus_forward(plus, 0.6, x)[0];
    const double b = monde_forward(monde, x)[0];
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("parameter JSON round trip is exact") {
  const MondePlusParams p = init_monde_plus(MondePlusLayout{2, {4, 1}, 3, "m"}, 9);
  const MondePlusParams q = monde_plus_from_json(nlohmann::json::parse(to_json(p).dump()));
  CHECK(q.params == p.params);
  const MondeParams m = init_monde(MondeLayout{2, {4, 1}, "m"}, 9);
  CHECK(monde_from_json(nlohmann::json::parse(to_json(m).dump())).params == m.params);
}
