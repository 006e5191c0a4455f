#include "survnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "survnet/error.hpp"

namespace survnet {

namespace {

double clamp_probability(double s, double eps) { return std::clamp(s, eps, 1.0 - eps); }

Tensor gather_rows(const Tensor& x, std::span<const PointTarget> points) {
  Tensor out({points.size(), x.cols()});
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (points[p].sample >= x.rows()) throw ContractError("point refers to a missing sample");
    for (std::size_t c = 0; c < x.cols(); ++c) out(p, c) = x(points[p].sample, c);
  }
  return out;
}

Tensor batch_features(std::span<const Sample> batch) {
  const std::size_t d = batch.front().x.size();
  Tensor x({batch.size(), d});
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch[r].x.size() != d) throw ShapeError("batch samples have differing feature lengths");
    for (std::size_t c = 0; c < d; ++c) x(r, c) = batch[r].x[c];
  }
  return x;
}

// Lambda range keeping log S and log(1 - S) above log_floor.
std::pair<double, double> hazard_bounds(double log_floor) {
  return {-std::log1p(-std::exp(log_floor)), -log_floor};
}

diff::Expr clamped_survival(diff::Graph& g, diff::Expr s, double eps) { return g.clamp(s, eps, 1.0 - eps); }

}  // namespace

void LossConfig::validate() const {
  if (!(sigma_factor >= 0.0)) throw ConfigError("sigma_factor must be >= 0");
  if (!(bce_weight >= 0.0 && bce_weight <= 1.0)) throw ConfigError("bce_weight must lie in [0, 1]");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ConfigError("epsilon must lie in (0, 1e-3]");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
}

nlohmann::json LossConfig::to_json() const {
  return {{"sigma_factor", sigma_factor}, {"bce_weight", bce_weight}, {"gamma", gamma},
          {"epsilon", epsilon},           {"t_max", t_max}};
}

LossConfig LossConfig::from_json(const nlohmann::json& j) {
  LossConfig c;
  c.sigma_factor = j.value("sigma_factor", c.sigma_factor);
  c.bce_weight = j.value("bce_weight", c.bce_weight);
  c.gamma = j.value("gamma", c.gamma);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.t_max = j.value("t_max", c.t_max);
  c.validate();
  return c;
}

double sample_event_time(int event, double time, double sigma, Side side, std::mt19937_64& rng) {
  if (side == Side::kMinus && event == 0) return time;
  if (sigma <= 0.0) return time;
  std::normal_distribution<double> normal(0.0, sigma);
  const double g = std::abs(normal(rng));
  return side == Side::kMinus ? std::max(0.0, time - g) : time + g;
}

BceDraw draw_bce(int event, double time, double sigma, std::mt19937_64& rng) {
  if (event == 0) return {time, Side::kMinus};
  std::bernoulli_distribution coin(0.5);
  const Side side = coin(rng) ? Side::kMinus : Side::kPlus;
  return {sample_event_time(event, time, sigma, side, rng), side};
}

std::vector<BceDraw> draw_bce_batch(std::span<const int> events, std::span<const double> times,
                                    double sigma, std::mt19937_64& rng) {
  if (events.size() != times.size()) throw ShapeError("events and times differ in length");
  std::vector<BceDraw> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out.push_back(draw_bce(events[i], times[i], sigma, rng));
  return out;
}

double bce_loss_from_draws(const SurvivalModel& model, const Tensor& x, std::span<const BceDraw> draws,
                           const LossConfig& cfg) {
  if (draws.empty()) throw ContractError("BCE loss needs a non-empty batch");
  std::vector<double> t;
  for (const auto& d : draws) t.push_back(d.time);
  const auto s = model.survival(t, x);
  double total = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double c = clamp_probability(s[i], cfg.epsilon);
    total += draws[i].side == Side::kMinus ? -(1.0 - cfg.bce_weight) * std::log(c)
                                           : -cfg.bce_weight * std::log(1.0 - c);
  }
  return total / static_cast<double>(draws.size());
}

double bce_survival_loss(const SurvivalModel& model, std::span<const Sample> batch, const LossConfig& cfg,
                         std::mt19937_64& rng) {
  if (batch.empty()) throw ContractError("BCE loss needs a non-empty batch");
  std::vector<BceDraw> draws;
  for (const auto& s : batch) draws.push_back(draw_bce(s.event, s.time, cfg.sigma(), rng));
  return bce_loss_from_draws(model, batch_features(batch), draws, cfg);
}

double sumo_loss(const SurvivalModel& model, std::span<const Sample> batch, double gamma, double epsilon) {
  if (batch.empty()) throw ContractError("SuMo loss needs a non-empty batch");
  std::vector<double> t;
  for (const auto& s : batch) t.push_back(s.time);
  const Tensor x = batch_features(batch);
  const auto f = model.event_density(t, x);
  const auto s = model.survival(t, x);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += batch[i].event == 1 ? -gamma * std::log(std::max(f[i], epsilon))
                                 : -std::log(std::max(s[i], epsilon));
  }
  return total / static_cast<double>(batch.size());
}

double point_bce_loss(const SurvivalModel& model, const Tensor& x, std::span<const PointTarget> points,
                      std::span<const double> weights, double log_floor) {
  if (points.size() != weights.size()) throw ShapeError("points and weights differ in length");
  std::vector<double> t;
  for (const auto& p : points) t.push_back(p.time);
  const auto cumhaz = model.cumulative_hazard(t, gather_rows(x, points));
  const auto [lo, hi] = hazard_bounds(log_floor);
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double c = std::clamp(cumhaz[i], lo, hi);
    const double y = points[i].survival;
    total -= weights[i] * (y * -c + (1.0 - y) * std::log(-std::expm1(-c)));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Graph forms

diff::Expr bce_loss_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                          const LossConfig& cfg) {
  const auto t = g.input(NeuralSurvivalModel::kTimeInput, {rows, 1});
  const auto x = g.input(NeuralSurvivalModel::kFeatureInput, {rows, model.feature_dim()});
  const auto minus = g.input(loss_inputs::kMinusMask, {rows, 1});
  const auto plus = g.input(loss_inputs::kPlusMask, {rows, 1});
  const auto s = clamped_survival(g, model.build(g, t, x, false).survival, cfg.epsilon);
  const auto pre = g.scale(g.hadamard(minus, g.log(s)), -(1.0 - cfg.bce_weight));
  const auto post = g.scale(g.hadamard(plus, g.log(g.add_scalar(g.neg(s), 1.0))), -cfg.bce_weight);
  return g.mean(g.add(pre, post));
}

void bind_bce(diff::Bindings& b, const Tensor& x, std::span<const BceDraw> draws) {
  const std::size_t rows = draws.size();
  Tensor t({rows, 1}), minus({rows, 1}), plus({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) {
    t[i] = draws[i].time;
    (draws[i].side == Side::kMinus ? minus : plus)[i] = 1.0;
  }
  b.set(NeuralSurvivalModel::kTimeInput, std::move(t));
  b.set(NeuralSurvivalModel::kFeatureInput, x);
  b.set(loss_inputs::kMinusMask, std::move(minus));
  b.set(loss_inputs::kPlusMask, std::move(plus));
}

diff::Expr sumo_loss_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                           double gamma, double epsilon) {
  const auto t = g.input(NeuralSurvivalModel::kTimeInput, {rows, 1});
  const auto x = g.input(NeuralSurvivalModel::kFeatureInput, {rows, model.feature_dim()});
  const auto e = g.input(loss_inputs::kEvents, {rows, 1});
  const SurvivalGraph sg = model.build(g, t, x, true);
  const auto log_f = g.log(g.clamp(*sg.density, epsilon));
  const auto log_s = g.log(g.clamp(sg.survival, epsilon));
  const auto censored = g.add_scalar(g.neg(e), 1.0);
  const auto terms = g.add(g.scale(g.hadamard(e, log_f), gamma), g.hadamard(censored, log_s));
  return g.neg(g.mean(terms));
}

void bind_sumo(diff::Bindings& b, const Tensor& x, std::span<const int> events,
               std::span<const double> times) {
  const std::size_t rows = times.size();
  Tensor t({rows, 1}), e({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) {
    t[i] = times[i];
    e[i] = events[i];
  }
  b.set(NeuralSurvivalModel::kTimeInput, std::move(t));
  b.set(NeuralSurvivalModel::kFeatureInput, x);
  b.set(loss_inputs::kEvents, std::move(e));
}

diff::Expr point_bce_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                           double log_floor) {
  const auto t = g.input(NeuralSurvivalModel::kTimeInput, {rows, 1});
  const auto x = g.input(NeuralSurvivalModel::kFeatureInput, {rows, model.feature_dim()});
  const auto y = g.input(loss_inputs::kTargets, {rows, 1});
  const auto w = g.input(loss_inputs::kWeights, {rows, 1});
  const auto [lo, hi] = hazard_bounds(log_floor);
  const auto cumhaz = g.clamp(model.build(g, t, x, false).cumulative_hazard, lo, hi);
  const auto alive = g.hadamard(y, g.neg(cumhaz));
  const auto dead = g.hadamard(g.add_scalar(g.neg(y), 1.0), g.log1mexp(cumhaz));
  return g.neg(g.sum(g.hadamard(w, g.add(alive, dead))));
}

void bind_points(diff::Bindings& b, const Tensor& sample_features, std::span<const PointTarget> points,
                 std::span<const double> weights) {
  if (points.size() != weights.size()) throw ShapeError("points and weights differ in length");
  const std::size_t rows = points.size();
  Tensor t({rows, 1}), y({rows, 1}), w({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) {
    t[i] = points[i].time;
    y[i] = points[i].survival;
    w[i] = weights[i];
  }
  b.set(NeuralSurvivalModel::kTimeInput, std::move(t));
  b.set(NeuralSurvivalModel::kFeatureInput, gather_rows(sample_features, points));
  b.set(loss_inputs::kTargets, std::move(y));
  b.set(loss_inputs::kWeights, std::move(w));
}

}  // namespace survnet
