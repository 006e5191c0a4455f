#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "survnet/error.hpp"
#include "survnet/losses.hpp"

using namespace survnet;

namespace {

auto constant_survival(double s) {
  return testing::function_model(1, [s](double, std::span<const double>) { return s; });
}

std::vector<Sample> samples(std::initializer_list<std::pair<int, double>> et) {
  std::vector<Sample> out;
  for (auto [e, t] : et) out.push_back({{0.0}, e, t});
  return out;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.monde_plus_widths = {4};
  c.hadamard_width = 4;
  c.feature_widths = {4};
  return c;
}

}  // namespace

TEST_CASE("sample_event_time") {
  std::mt19937_64 rng(1);
  CHECK(sample_event_time(0, 5.0, 1.0, Side::kMinus, rng) == 5.0);
  CHECK(sample_event_time(1, 0.7, 0.0, Side::kMinus, rng) == 0.7);
  CHECK(sample_event_time(1, 0.7, 0.0, Side::kPlus, rng) == 0.7);

  // Replay the generator to learn |g|, then check the ReLU pushforward.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    const double g = std::abs(normal(b));
    const double t = sample_event_time(1, 0.1, 0.5, Side::kMinus, a);
    CHECK(t == std::max(0.0, 0.1 - g));
    if (g > 0.1) CHECK(t == 0.0);
  }

  std::mt19937_64 r(2);
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_event_time(1, 0.4, 0.3, Side::kMinus, r) <= 0.4);
    CHECK(sample_event_time(1, 0.4, 0.3, Side::kPlus, r) >= 0.4);
  }
}

TEST_CASE("bce_survival_loss examples") {
  LossConfig cfg;
  cfg.bce_weight = 0.5;
  std::mt19937_64 rng(0);
  const auto censored = samples({{0, 0.5}});
  CHECK(bce_survival_loss(constant_survival(0.8), censored, cfg, rng) ==
        doctest::Approx(-0.5 * std::log(0.8)).epsilon(1e-14));
  CHECK(-0.5 * std::log(0.8) == doctest::Approx(0.1116).epsilon(1e-3));

  cfg.bce_weight = 1.0;
  const std::vector<BceDraw> plus{{0.6, Side::kPlus}};
  const Tensor x({1, 1});
  CHECK(bce_loss_from_draws(constant_survival(0.5), x, plus, cfg) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  cfg.bce_weight = 0.5;
  cfg.sigma_factor = 0.3;
  // Perfect step model: S = 1 before T, 0 after.
  const double T = 0.5;
  auto step = testing::function_model(1, [T](double t, std::span<const double>) { return t < T ? 1.0 : 0.0; });
  std::vector<Sample> dead(64, Sample{{0.0}, 1, T});
  const double loss = bce_survival_loss(step, dead, cfg, rng);
  CHECK(loss >= 0.0);
  CHECK(loss <= -std::log(1.0 - cfg.epsilon) + 1e-15);

  std::vector<Sample> empty;
  CHECK_THROWS_AS(bce_survival_loss(step, empty, cfg, rng), ContractError);
}

TEST_CASE("bce loss is deterministic for censored batches and non-negative") {
  LossConfig cfg;
  auto m = build_model(ModelKind::kSumoPlusPlus, 1, tiny_config(), 3);
  const auto censored = samples({{0, 0.2}, {0, 0.9}, {0, 0.4}});
  std::mt19937_64 a(1), b(999);
  CHECK(bce_survival_loss(*m, censored, cfg, a) == bce_survival_loss(*m, censored, cfg, b));

  std::mt19937_64 rng(5);
  const auto mixed = samples({{1, 0.2}, {0, 0.9}, {1, 0.4}, {1, 1.3}});
  for (int i = 0; i < 200; ++i) CHECK(bce_survival_loss(*m, mixed, cfg, rng) >= 0.0);
}

TEST_CASE("sumo_loss examples") {
  const testing::ConstantHazardModel flat(1, 0.0, -std::log(0.8));
  const auto censored = samples({{0, 1.0}});
  CHECK(sumo_loss(flat, censored, 3.0) == doctest::Approx(-std::log(0.8)).epsilon(1e-14));
  CHECK(-std::log(0.8) == doctest::Approx(0.2231).epsilon(1e-3));

  const testing::ConstantHazardModel unit(1, 1.0);
  const auto dead = samples({{1, 1.0}});
  CHECK(sumo_loss(unit, dead, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sumo_loss(unit, dead, 2.0) == doctest::Approx(2.0).epsilon(1e-14));

  KaplanMeierModel km(1);
  CHECK_THROWS_AS(sumo_loss(km, dead, 1.0), UnsupportedOperation);
}

TEST_CASE("graph losses agree with value losses") {
  std::mt19937_64 rng(4);
  auto model = build_model(ModelKind::kSumoPlusPlus, 2, tiny_config(), 8);
  const auto& m = dynamic_cast<const NeuralSurvivalModel&>(*model);
  const std::size_t n = 6;
  Tensor x = testing::random_tensor({n, 2}, -1.0, 1.0, rng);
  std::vector<int> e{1, 0, 1, 1, 0, 1};
  std::vector<double> t{0.2, 0.5, 0.9, 0.05, 1.2, 0.6};
  std::vector<Sample> batch;
  for (std::size_t i = 0; i < n; ++i) batch.push_back({{x(i, 0), x(i, 1)}, e[i], t[i]});

  LossConfig cfg;
  cfg.bce_weight = 0.7;
  const auto draws = draw_bce_batch(e, t, cfg.sigma(), rng);
  {
    diff::Graph g;
    const auto root = bce_loss_graph(g, m, n, cfg);
    diff::Bindings b;
    m.params().bind(b);
    bind_bce(b, x, draws);
    CHECK(diff::eval_graph(g, root, b).item() ==
          doctest::Approx(bce_loss_from_draws(m, x, draws, cfg)).epsilon(1e-12));
  }
  {
    diff::Graph g;
    const auto root = sumo_loss_graph(g, m, n, 1.5, 1e-7);
    diff::Bindings b;
    m.params().bind(b);
    bind_sumo(b, x, e, t);
    CHECK(diff::eval_graph(g, root, b).item() == doctest::Approx(sumo_loss(m, batch, 1.5)).epsilon(1e-12));
  }
  {
    const std::vector<PointTarget> pts{{0, 0.3, 0.9}, {1, 0.5, 0.4}, {1, 0.9, 0.1}, {4, 0.2, 0.7}};
    const std::vector<double> w{0.5, 0.25, 0.25, 1.0};
    diff::Graph g;
    const auto root = point_bce_graph(g, m, pts.size());
    diff::Bindings b;
    m.params().bind(b);
    bind_points(b, x, pts, w);
    CHECK(diff::eval_graph(g, root, b).item() == doctest::Approx(point_bce_loss(m, x, pts, w)).epsilon(1e-12));
  }
}

TEST_CASE("point loss in log space matches plain BCE away from saturation") {
  const testing::ConstantHazardModel m(1, 1.0);
  const Tensor x({1, 1});
  const std::vector<PointTarget> pts{{0, 0.5, 0.3}};
  const std::vector<double> w{1.0};
  const double s = std::exp(-0.5);
  CHECK(point_bce_loss(m, x, pts, w) ==
        doctest::Approx(-(0.3 * std::log(s) + 0.7 * std::log(1.0 - s))).epsilon(1e-13));
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(6);
  auto model = build_model(ModelKind::kSumoPlusPlus, 2, tiny_config(), 2);
  const auto& m = dynamic_cast<const NeuralSurvivalModel&>(*model);
  const Tensor x = testing::random_tensor({2, 2}, -1.0, 1.0, rng);
  const std::vector<int> e{1, 0};
  const std::vector<double> t{0.4, 0.7};
  const auto names = m.params().names();

  LossConfig cfg;
  diff::Graph g;
  const auto root = bce_loss_graph(g, m, 2, cfg);
  diff::Bindings b;
  m.params().bind(b);
  bind_bce(b, x, draw_bce_batch(e, t, cfg.sigma(), rng));
  CHECK(diff::finite_diff_check(g, root, b, names) <= 1e-4);

  diff::Graph h;
  const auto sroot = sumo_loss_graph(h, m, 2, 1.0, 1e-7);
  diff::Bindings bs;
  m.params().bind(bs);
  bind_sumo(bs, x, e, t);
  CHECK(diff::finite_diff_check(h, sroot, bs, names) <= 1e-4);
}

TEST_CASE("LossConfig validation") {
  LossConfig c;
  c.epsilon = 0.01;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LossConfig{};
  c.bce_weight = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LossConfig{};
  c.sigma_factor = 0.8;
  c.t_max = 2.0;
  CHECK(c.sigma() == 1.6);
  CHECK(LossConfig::from_json(c.to_json()).sigma() == 1.6);
}
