#pragma once

// Training losses.
//
// BCE survival loss: every sample (x, e, T) contributes one draw per step.
//   e = 0            t = T,              term -(1 - w) log S(t|x)
//   e = 1, heads     t = max(0, T - |g|), term -(1 - w) log S(t|x)
//   e = 1, tails     t = T + |g|,         term -w log(1 - S(t|x))
// with g ~ N(0, sigma^2). SuMo loss: -[e gamma log f(T|x) + (1 - e) log S(T|x)].

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/dataset.hpp"
#include "survnet/diff.hpp"
#include "survnet/models.hpp"

namespace survnet {

struct LossConfig {
  double sigma_factor = 0.5;  // sigma = sigma_factor * t_max
  double bce_weight = 0.5;    // w, weight of the postmortem term
  double gamma = 1.0;
  double epsilon = 1e-7;
  double t_max = 1.0;

  double sigma() const { return sigma_factor * t_max; }
  void validate() const;
  nlohmann::json to_json() const;
  static LossConfig from_json(const nlohmann::json& j);
};

enum class Side { kMinus, kPlus };

double sample_event_time(int event, double time, double sigma, Side side, std::mt19937_64& rng);

// One BCE draw: a query time and which classifier term it feeds.
struct BceDraw {
  double time = 0.0;
  Side side = Side::kMinus;
};

// Coin flip (e = 1 only) then the half-normal offset; e = 0 consumes no randomness.
BceDraw draw_bce(int event, double time, double sigma, std::mt19937_64& rng);
std::vector<BceDraw> draw_bce_batch(std::span<const int> events, std::span<const double> times,
                                    double sigma, std::mt19937_64& rng);

// Mean BCE over given draws, from model survival values.
double bce_loss_from_draws(const SurvivalModel& model, const Tensor& x, std::span<const BceDraw> draws,
                           const LossConfig& cfg);
double bce_survival_loss(const SurvivalModel& model, std::span<const Sample> batch, const LossConfig& cfg,
                         std::mt19937_64& rng);
double sumo_loss(const SurvivalModel& model, std::span<const Sample> batch, double gamma,
                 double epsilon = 1e-7);

// Soft-target BCE over (time, survival probability) points, weighted per point.
// Evaluated in log space from Lambda, with both logs floored at log_floor.
inline constexpr double kPointLogFloor = -100.0;
struct PointTarget {
  std::size_t sample = 0;
  double time = 0.0;
  double survival = 1.0;
};
double point_bce_loss(const SurvivalModel& model, const Tensor& x, std::span<const PointTarget> points,
                      std::span<const double> weights, double log_floor = kPointLogFloor);

// Graph forms used for training. Each declares the model inputs "t", "x"
// plus the loss-specific inputs named below and returns a 1 x 1 root.
namespace loss_inputs {
inline constexpr const char* kMinusMask = "m_minus";
inline constexpr const char* kPlusMask = "m_plus";
inline constexpr const char* kEvents = "e";
inline constexpr const char* kTargets = "y";
inline constexpr const char* kWeights = "w";
}  // namespace loss_inputs

diff::Expr bce_loss_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                          const LossConfig& cfg);
void bind_bce(diff::Bindings& b, const Tensor& x, std::span<const BceDraw> draws);

diff::Expr sumo_loss_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                           double gamma, double epsilon);
void bind_sumo(diff::Bindings& b, const Tensor& x, std::span<const int> events,
               std::span<const double> times);

// Rows of x are per point here (row p holds the features of points[p].sample).
diff::Expr point_bce_graph(diff::Graph& g, const NeuralSurvivalModel& model, std::size_t rows,
                           double log_floor = kPointLogFloor);
void bind_points(diff::Bindings& b, const Tensor& sample_features, std::span<const PointTarget> points,
                 std::span<const double> weights);

}  // namespace survnet
