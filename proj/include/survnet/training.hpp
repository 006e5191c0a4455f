#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/dataset.hpp"
#include "survnet/diff.hpp"
#include "survnet/error.hpp"
#include "survnet/losses.hpp"
#include "survnet/metrics.hpp"
#include "survnet/models.hpp"
#include "survnet/params.hpp"

namespace survnet {

enum class LossKind { kBce, kSumo };
std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;     // global norm; <= 0 disables clipping
  double weight_decay = 0.0;  // decoupled, applied to every parameter
};

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::uint64_t step = 0;
};

struct StepStats {
  double grad_norm = 0.0;     // before clipping
  double clipped_norm = 0.0;  // after clipping
};

double global_norm(const diff::GradientMap& grads);

// Clip, Adam update with bias correction, decoupled decay, projection onto the
// non-negativity constraints. Non-finite gradients throw DomainError.
StepStats adam_step(ParamSet& params, diff::GradientMap grads, AdamState& state, const AdamOptions& opts);

struct TrainConfig {
  AdamOptions adam;
  std::size_t batch_size = 8;
  std::size_t window = 512;
  std::size_t patience = 8192;
  std::size_t max_steps = 200000;
  LossKind loss = LossKind::kBce;
  LossConfig loss_config;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> moving_average;  // NaN until the window is full
  std::string stop_reason = "max_steps";
  std::size_t steps = 0;
  std::size_t best_step = 0;  // step whose parameters were kept; 0 = initial
  double best_moving_average = std::numeric_limits<double>::quiet_NaN();

  void write_csv(std::ostream& out) const;
  // Bitwise comparison, so NaN entries compare equal.
  bool operator==(const TrainHistory& other) const;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainHistory history)
      : Error(what), history_(std::move(history)) {}
  const TrainHistory& history() const { return history_; }

 private:
  TrainHistory history_;
};

// Trains in place. On return the model holds the parameters with the lowest
// validation moving average (the final ones if the window never filled).
TrainHistory train(NeuralSurvivalModel& model, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& cfg);

// Full-batch soft-target BCE fit over curve points, as in the toy task.
// Returns the loss before every step followed by the final loss.
std::vector<double> fit_points(NeuralSurvivalModel& model, const Tensor& sample_features,
                               std::span<const PointTarget> points, std::span<const double> weights,
                               std::size_t steps, const AdamOptions& opts);

struct RunResult {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string diagnostic;
  TrainHistory history;
  MetricReport validation;
};

struct Selection {
  std::unique_ptr<SurvivalModel> model;
  std::size_t best_run = 0;
  std::vector<RunResult> runs;
};

// Trains n_runs models with seeds cfg.seed + k and keeps the one with the
// highest validation mean score.
Selection multi_run_select(ModelKind kind, const ModelConfig& model_config, const Dataset& train_set,
                           const Dataset& val_set, const TrainConfig& cfg, std::size_t n_runs,
                           const TimeGrid& grid);

}  // namespace survnet
