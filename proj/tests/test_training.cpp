#include <doctest.h>

#include <cmath>
#include <sstream>

#include "survnet/data.hpp"
#include "survnet/error.hpp"
#include "survnet/training.hpp"

using namespace survnet;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.monde_plus_widths = {8, 8};
  c.hadamard_width = 8;
  c.feature_widths = {8};
  return c;
}

struct Splits {
  Dataset train, val;
};

Splits small_splits() {
  const Dataset d = normalize(synthetic_weibull({240, 2, 1.5, 1.0, 0.3, 1}));
  const auto parts = random_split(d.size(), {0.6, 0.2, 0.2}, 0);
  return {d.subset(parts[0]), d.subset(parts[1])};
}

TrainConfig quick_config(std::size_t steps) {
  TrainConfig c;
  c.max_steps = steps;
  c.window = 16;
  c.patience = 64;
  return c;
}

}  // namespace

TEST_CASE("adam_step examples") {
  ParamSet p;
  p.add("w", Tensor::scalar(1.0));
  AdamState s;
  AdamOptions o;
  diff::GradientMap g{{"w", Tensor::scalar(2.0)}};
  const StepStats st = adam_step(p, g, s, o);
  CHECK(st.grad_norm == 2.0);
  CHECK(st.clipped_norm == 1.0);
  CHECK(p.value("w").item() == doctest::Approx(1.0 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p.value("w").item() == doctest::Approx(0.999).epsilon(1e-9));

  ParamSet q;
  q.add("a", Tensor::row({0.5, -0.2}));
  AdamState sq;
  adam_step(q, {{"a", Tensor::row({0.0, 0.0})}}, sq, o);
  CHECK(q.value("a") == Tensor::row({0.5, -0.2}));

  ParamSet c;
  c.add("c", Tensor::scalar(0.0), true);
  AdamState sc;
  adam_step(c, {{"c", Tensor::scalar(1.0)}}, sc, o);
  CHECK(c.value("c").item() == 0.0);

  AdamState sn;
  CHECK_THROWS_AS(adam_step(q, {{"a", Tensor::row({NAN, 0.0})}}, sn, o), DomainError);
  CHECK_THROWS_AS(adam_step(q, {{"a", Tensor::scalar(1.0)}}, sn, o), ShapeError);
}

TEST_CASE("clipping bounds the global norm") {
  ParamSet p;
  p.add("a", Tensor({2, 3}));
  p.add("b", Tensor({1, 4}));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  AdamState s;
  for (int i = 0; i < 100; ++i) {
    diff::GradientMap g{{"a", Tensor({2, 3})}, {"b", Tensor({1, 4})}};
    for (auto& [name, t] : g) {
      for (double& v : t.values()) v = n(rng);
    }
    CHECK(adam_step(p, g, s, AdamOptions{}).clipped_norm <= 1.0 + 1e-12);
  }
}

TEST_CASE("decoupled weight decay") {
  ParamSet p;
  p.add("w", Tensor::scalar(2.0));
  AdamState s;
  AdamOptions o;
  o.weight_decay = 0.5;
  adam_step(p, {{"w", Tensor::scalar(0.0)}}, s, o);
  CHECK(p.value("w").item() == doctest::Approx(2.0 * (1.0 - 1e-3 * 0.5)).epsilon(1e-15));
}

TEST_CASE("train edge cases") {
  const Splits s = small_splits();
  auto m = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 0);
  auto& n = dynamic_cast<NeuralSurvivalModel&>(*m);
  const ParamSet before = n.params();
  const TrainHistory h = train(n, s.train, s.val, quick_config(0));
  CHECK(h.steps == 0);
  CHECK(h.train_loss.empty());
  CHECK(n.params() == before);

  TrainConfig bad = quick_config(10);
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(n, s.train, s.val, bad), ConfigError);
  Dataset empty = s.val.subset(std::vector<std::size_t>{});
  CHECK_THROWS_AS(train(n, s.train, empty, quick_config(10)), ContractError);
}

TEST_CASE("training is deterministic and keeps constraints") {
  const Splits s = small_splits();
  for (LossKind loss : {LossKind::kBce, LossKind::kSumo}) {
    TrainConfig cfg = quick_config(120);
    cfg.loss = loss;
    auto a = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 3);
    auto b = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 3);
    auto& na = dynamic_cast<NeuralSurvivalModel&>(*a);
    auto& nb = dynamic_cast<NeuralSurvivalModel&>(*b);
    const TrainHistory ha = train(na, s.train, s.val, cfg);
    const TrainHistory hb = train(nb, s.train, s.val, cfg);
    CHECK(ha == hb);
    CHECK(na.params() == nb.params());
    CHECK(na.params().satisfies_constraints());
    CHECK(ha.train_loss.size() == ha.steps);
    CHECK(ha.val_loss.size() == ha.steps);
    CHECK(ha.moving_average.size() == ha.steps);
    CHECK(std::isnan(ha.moving_average[cfg.window - 2]));
    CHECK_FALSE(std::isnan(ha.moving_average[cfg.window - 1]));
  }
}

TEST_CASE("early stopping fires within window plus patience of the last improvement") {
  const Splits s = small_splits();
  TrainConfig cfg = quick_config(3000);
  cfg.window = 8;
  cfg.patience = 20;
  cfg.adam.learning_rate = 0.05;
  auto m = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 1);
  auto& n = dynamic_cast<NeuralSurvivalModel&>(*m);
  const TrainHistory h = train(n, s.train, s.val, cfg);
  REQUIRE(h.stop_reason == "patience");
  CHECK(h.steps <= h.best_step + cfg.window + cfg.patience);
  CHECK(h.best_moving_average == h.moving_average[h.best_step - 1]);
  for (double v : h.moving_average) {
    if (!std::isnan(v)) CHECK(v >= h.best_moving_average);
  }

  std::ostringstream out;
  h.write_csv(out);
  CHECK(out.str().rfind("step,train_loss,val_loss,moving_avg\n", 0) == 0);
}

TEST_CASE("weight decay only applies to Cox-like models") {
  const Splits s = small_splits();
  TrainConfig plain = quick_config(40);
  TrainConfig decayed = plain;
  decayed.adam.weight_decay = 0.5;

  auto a = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 2);
  auto b = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 2);
  train(dynamic_cast<NeuralSurvivalModel&>(*a), s.train, s.val, plain);
  train(dynamic_cast<NeuralSurvivalModel&>(*b), s.train, s.val, decayed);
  CHECK(dynamic_cast<NeuralSurvivalModel&>(*a).params() == dynamic_cast<NeuralSurvivalModel&>(*b).params());

  auto c = build_model(ModelKind::kCoxNN, 2, small_config(), 2);
  auto d = build_model(ModelKind::kCoxNN, 2, small_config(), 2);
  train(dynamic_cast<NeuralSurvivalModel&>(*c), s.train, s.val, plain);
  train(dynamic_cast<NeuralSurvivalModel&>(*d), s.train, s.val, decayed);
  CHECK_FALSE(dynamic_cast<NeuralSurvivalModel&>(*c).params() == dynamic_cast<NeuralSurvivalModel&>(*d).params());
}

TEST_CASE("fit_points on the toy fixture lowers the loss") {
  const ToyFixture fx = toy_dataset();
  auto m = build_model(ModelKind::kSumoPlusPlus, 32, ModelConfig{}, 0);
  AdamOptions o;
  o.clip_norm = 0.0;
  const auto trace = fit_points(dynamic_cast<NeuralSurvivalModel&>(*m), fx.features, fx.points, fx.weights(), 512, o);
  CHECK(trace.size() == 513);
  CHECK(trace.back() < trace.front());
}

TEST_CASE("multi_run_select") {
  const Splits s = small_splits();
  const TimeGrid grid{1.0, 17};
  TrainConfig cfg = quick_config(60);
  cfg.seed = 4;
  const Selection sel = multi_run_select(ModelKind::kSumoPlusPlus, small_config(), s.train, s.val, cfg, 3, grid);
  CHECK(sel.runs.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(sel.runs[k].seed == 4 + k);
    CHECK(sel.runs[sel.best_run].validation.mean >= sel.runs[k].validation.mean);
  }
  CHECK(evaluate_all(*sel.model, s.val, grid) == sel.runs[sel.best_run].validation);

  const Selection again = multi_run_select(ModelKind::kSumoPlusPlus, small_config(), s.train, s.val, cfg, 3, grid);
  CHECK(again.best_run == sel.best_run);
  CHECK(again.model->to_json() == sel.model->to_json());

  const Selection one = multi_run_select(ModelKind::kSumoPlusPlus, small_config(), s.train, s.val, cfg, 1, grid);
  auto direct = build_model(ModelKind::kSumoPlusPlus, 2, small_config(), 4);
  train(dynamic_cast<NeuralSurvivalModel&>(*direct), s.train, s.val, cfg);
  CHECK(evaluate_all(*direct, s.val, grid) == one.runs[0].validation);

  CHECK_THROWS_AS(multi_run_select(ModelKind::kSumoPlusPlus, small_config(), s.train, s.val, cfg, 0, grid),
                  ConfigError);
}

TEST_CASE("TrainConfig JSON") {
  TrainConfig c;
  c.loss = LossKind::kSumo;
  c.loss_config.gamma = 2.5;
  c.adam.weight_decay = 0.01;
  const TrainConfig back = TrainConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(parse_loss_kind("bce") == LossKind::kBce);
  CHECK_THROWS_AS(parse_loss_kind("mse"), ConfigError);
}
