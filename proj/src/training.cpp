#include "survnet/training.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <random>

namespace survnet {

namespace {

std::vector<std::string> param_names(const ParamSet& params) { return params.names(); }

Tensor gather(const Dataset& data, std::span<const std::size_t> idx) {
  Tensor x({idx.size(), data.dims()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < data.dims(); ++c) x(r, c) = data.features(idx[r], c);
  }
  return x;
}

// Loss graph over a fixed batch size, reused for every step.
class BatchLoss {
 public:
  BatchLoss(const NeuralSurvivalModel& model, const TrainConfig& cfg) : cfg_(cfg) {
    if (cfg.loss == LossKind::kBce) {
      root_ = bce_loss_graph(graph_, model, cfg.batch_size, cfg.loss_config);
    } else {
      root_ = sumo_loss_graph(graph_, model, cfg.batch_size, cfg.loss_config.gamma, cfg.loss_config.epsilon);
    }
  }

  // Draws a batch with replacement and binds it.
  diff::Bindings draw(const ParamSet& params, const Dataset& data, std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::vector<std::size_t> idx(cfg_.batch_size);
    for (auto& i : idx) i = pick(rng);
    const Tensor x = gather(data, idx);
    std::vector<int> e;
    std::vector<double> t;
    for (std::size_t i : idx) {
      e.push_back(data.events[i]);
      t.push_back(data.times[i]);
    }
    diff::Bindings b;
    params.bind(b);
    if (cfg_.loss == LossKind::kBce) {
      bind_bce(b, x, draw_bce_batch(e, t, cfg_.loss_config.sigma(), rng));
    } else {
      bind_sumo(b, x, e, t);
    }
    return b;
  }

  const diff::Graph& graph() const { return graph_; }
  diff::Expr root() const { return root_; }

 private:
  const TrainConfig& cfg_;
  diff::Graph graph_;
  diff::Expr root_;
};

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::kBce ? "bce" : "sumo"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "sumo") return LossKind::kSumo;
  throw ConfigError("unknown loss '" + name + "' (expected bce or sumo)");
}

// ---------------------------------------------------------------------------
// Adam

double global_norm(const diff::GradientMap& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.values()) s += v * v;
  }
  return std::sqrt(s);
}

StepStats adam_step(ParamSet& params, diff::GradientMap grads, AdamState& state, const AdamOptions& opts) {
  for (const auto& [name, g] : grads) {
    const Tensor& p = params.value(name);
    if (g.shape() != p.shape()) {
      throw ShapeError("gradient for '" + name + "' has shape " + g.shape().str() + ", parameter " +
                       p.shape().str());
    }
    for (double v : g.values()) {
      if (!std::isfinite(v)) throw DomainError("non-finite gradient for parameter '" + name + "'");
    }
  }
  StepStats stats;
  stats.grad_norm = global_norm(grads);
  stats.clipped_norm = stats.grad_norm;
  if (opts.clip_norm > 0.0 && stats.grad_norm > opts.clip_norm) {
    const double scale = opts.clip_norm / stats.grad_norm;
    for (auto& [name, g] : grads) {
      for (double& v : g.values()) v *= scale;
    }
    stats.clipped_norm = global_norm(grads);
  }

  ++state.step;
  const double step = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opts.beta1, step);
  const double c2 = 1.0 - std::pow(opts.beta2, step);
  for (auto& [name, g] : grads) {
    Tensor& p = params.value(name);
    auto [mit, m_new] = state.m.try_emplace(name, g.shape());
    auto [vit, v_new] = state.v.try_emplace(name, g.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= opts.learning_rate * m_hat / (std::sqrt(v_hat) + opts.epsilon);
      if (opts.weight_decay > 0.0) p[i] -= opts.learning_rate * opts.weight_decay * p[i];
    }
  }
  params.project_nonnegative();
  return stats;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (window == 0) throw ConfigError("moving-average window must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (adam.weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  loss_config.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"adam_epsilon", adam.epsilon},
          {"clip_norm", adam.clip_norm},
          {"weight_decay", adam.weight_decay},
          {"batch_size", batch_size},
          {"window", window},
          {"patience", patience},
          {"max_steps", max_steps},
          {"loss", to_string(loss)},
          {"loss_config", loss_config.to_json()},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
  c.adam.clip_norm = j.value("clip_norm", c.adam.clip_norm);
  c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.window = j.value("window", c.window);
  c.patience = j.value("patience", c.patience);
  c.max_steps = j.value("max_steps", c.max_steps);
  if (j.contains("loss")) c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  if (j.contains("loss_config")) c.loss_config = LossConfig::from_json(j.at("loss_config"));
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(),
                                             [](double x, double y) { return same_bits(x, y); });
}

}  // namespace

bool TrainHistory::operator==(const TrainHistory& o) const {
  return same_bits(train_loss, o.train_loss) && same_bits(val_loss, o.val_loss) &&
         same_bits(moving_average, o.moving_average) && stop_reason == o.stop_reason && steps == o.steps &&
         best_step == o.best_step && same_bits(best_moving_average, o.best_moving_average);
}

void TrainHistory::write_csv(std::ostream& out) const {
  out.precision(17);
  out << "step,train_loss,val_loss,moving_avg\n";
  for (std::size_t i = 0; i < train_loss.size(); ++i) {
    out << i + 1 << ',' << train_loss[i] << ',' << val_loss[i] << ',';
    if (!std::isnan(moving_average[i])) out << moving_average[i];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Training loop

TrainHistory train(NeuralSurvivalModel& model, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw ContractError("training needs non-empty training and validation sets");
  }
  if (train_set.dims() != model.feature_dim() || val_set.dims() != model.feature_dim()) {
    throw ShapeError("dataset feature width does not match the model");
  }
  TrainHistory history;
  if (cfg.max_steps == 0) return history;

  AdamOptions opts = cfg.adam;
  if (!is_cox_like(model.kind())) opts.weight_decay = 0.0;

  std::mt19937_64 train_rng(cfg.seed);
  std::mt19937_64 val_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const BatchLoss loss(model, cfg);
  ParamSet& params = model.params();
  const auto names = param_names(params);
  AdamState state;
  ParamSet best = params;

  std::deque<double> window;
  double window_sum = 0.0;
  std::size_t last_improvement = 0;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const diff::Bindings b = loss.draw(params, train_set, train_rng);
    const diff::Expr roots[] = {loss.root()};
    const diff::Evaluation ev(loss.graph(), b, roots);
    const double value = ev.value(loss.root()).item();
    if (!std::isfinite(value)) {
      history.stop_reason = "diverged";
      throw TrainingDiverged("training loss became non-finite at step " + std::to_string(step), history);
    }
    try {
      adam_step(params, ev.gradient(loss.root(), names), state, opts);
    } catch (const DomainError& e) {
      history.stop_reason = "diverged";
      throw TrainingDiverged(std::string(e.what()) + " at step " + std::to_string(step), history);
    }

    const diff::Bindings vb = loss.draw(params, val_set, val_rng);
    const double val = diff::eval_graph(loss.graph(), loss.root(), vb).item();
    if (!std::isfinite(val)) {
      history.stop_reason = "diverged";
      throw TrainingDiverged("validation loss became non-finite at step " + std::to_string(step), history);
    }

    history.train_loss.push_back(value);
    history.val_loss.push_back(val);
    history.steps = step;
    window.push_back(val);
    window_sum += val;
    if (window.size() > cfg.window) {
      window_sum -= window.front();
      window.pop_front();
    }
    double ma = std::numeric_limits<double>::quiet_NaN();
    if (window.size() == cfg.window) {
      ma = window_sum / static_cast<double>(cfg.window);
      if (std::isnan(history.best_moving_average) || ma < history.best_moving_average) {
        history.best_moving_average = ma;
        history.best_step = step;
        last_improvement = step;
        best = params;
      }
    }
    history.moving_average.push_back(ma);
    if (!std::isnan(history.best_moving_average) && step - last_improvement >= cfg.patience) {
      history.stop_reason = "patience";
      break;
    }
  }
  if (history.best_step > 0) {
    params = best;
  } else {
    history.best_step = history.steps;
  }
  return history;
}

std::vector<double> fit_points(NeuralSurvivalModel& model, const Tensor& sample_features,
                               std::span<const PointTarget> points, std::span<const double> weights,
                               std::size_t steps, const AdamOptions& opts) {
  diff::Graph g;
  const auto root = point_bce_graph(g, model, points.size());
  diff::Bindings data;
  bind_points(data, sample_features, points, weights);
  ParamSet& params = model.params();
  const auto names = param_names(params);
  AdamState state;
  std::vector<double> losses;
  const diff::Expr roots[] = {root};
  for (std::size_t step = 0; step <= steps; ++step) {
    diff::Bindings b = data;
    params.bind(b);
    const diff::Evaluation ev(g, b, roots);
    losses.push_back(ev.value(root).item());
    if (step == steps) break;
    adam_step(params, ev.gradient(root, names), state, opts);
  }
  return losses;
}

// ---------------------------------------------------------------------------
// Model selection

Selection multi_run_select(ModelKind kind, const ModelConfig& model_config, const Dataset& train_set,
                           const Dataset& val_set, const TrainConfig& cfg, std::size_t n_runs,
                           const TimeGrid& grid) {
  if (n_runs == 0) throw ConfigError("model selection needs at least one run");
  if (kind == ModelKind::kKaplanMeier) throw ConfigError("Kaplan-Meier has nothing to train");
  Selection out;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_runs; ++k) {
    RunResult run;
    run.seed = cfg.seed + k;
    TrainConfig run_cfg = cfg;
    run_cfg.seed = run.seed;
    auto model = build_model(kind, train_set.dims(), model_config, run.seed);
    auto& neural = dynamic_cast<NeuralSurvivalModel&>(*model);
    try {
      run.history = train(neural, train_set, val_set, run_cfg);
      run.validation = evaluate_all(neural, val_set, grid);
    } catch (const TrainingDiverged& e) {
      run.diverged = true;
      run.diagnostic = e.what();
      run.history = e.history();
    }
    if (!run.diverged && (!out.model || run.validation.mean > best_score)) {
      best_score = run.validation.mean;
      out.best_run = k;
      out.model = std::move(model);
    }
    out.runs.push_back(std::move(run));
  }
  if (!out.model) {
    std::string msg = "all " + std::to_string(n_runs) + " runs diverged:";
    for (const auto& r : out.runs) msg += "\n  seed " + std::to_string(r.seed) + ": " + r.diagnostic;
    throw ContractError(msg);
  }
  return out;
}

}  // namespace survnet
