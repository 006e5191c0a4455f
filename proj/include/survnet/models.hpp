#pragma once

// Survival models behind a common interface exposing
//   S(t|x), Lambda(t|x) = -log S, f(t|x) = -dS/dt, lambda(t|x) = dLambda/dt.
//
// Kinds:
//   km             Kaplan-Meier, ignores x
//   sumo           S = 1 - sigmoid(M([t, Q(x)])), M a MONDE
//   sumo_plus      S = exp(-[M([t, q]) - M([0, q])]), M a MONDE
//   sumo_plusplus  S = exp(-[M+(t, q) - M+(0, q)]), M+ a MONDE+
//   cox_nn         S = exp(-exp(<a, x>) L0(t)), L0(t) = M+(t, 0) - M+(0, 0)
//   cox_deep_nn    as cox_nn with <a, x> replaced by a dense network
//   ctx_nn         S = exp(-alpha(t, x) L0(t)), alpha = exp(<omega(t, x), |x - o|>)
//                  with omega_i = beta-_i(t) if x_i < o_i else beta+_i(t)

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/diff.hpp"
#include "survnet/dual.hpp"
#include "survnet/features.hpp"
#include "survnet/kaplan_meier.hpp"
#include "survnet/monotone.hpp"
#include "survnet/params.hpp"

namespace survnet {

enum class ModelKind { kKaplanMeier, kSumo, kSumoPlus, kSumoPlusPlus, kCoxNN, kCoxDeepNN, kCtxNN };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
bool is_cox_like(ModelKind kind);
// Whether S(0|x) = 1 holds by construction.
bool guarantees_initial_condition(ModelKind kind);

struct ModelConfig {
  std::vector<std::size_t> monde_plus_widths{32, 32, 32, 32, 32};
  std::size_t hadamard_width = 64;
  std::vector<std::size_t> monde_widths{98, 98, 98, 98, 98};
  std::vector<std::size_t> feature_widths{32, 32, 32};
  // Hidden widths of the CoxDeepNN risk network; empty = {2 n, 8}.
  std::vector<std::size_t> cox_deep_widths;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

class SurvivalModel {
 public:
  virtual ~SurvivalModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t feature_dim() const = 0;

  // Batched evaluation: times.size() == x.rows(), x.cols() == feature_dim().
  virtual std::vector<double> survival(std::span<const double> times, const Tensor& x) const = 0;
  virtual std::vector<double> cumulative_hazard(std::span<const double> times,
                                                const Tensor& x) const = 0;
  virtual std::vector<double> event_density(std::span<const double> times, const Tensor& x) const = 0;
  virtual std::vector<double> hazard(std::span<const double> times, const Tensor& x) const = 0;

  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<SurvivalModel> clone() const = 0;
};

double survival(const SurvivalModel& model, double t, std::span<const double> x);
double cumulative_hazard(const SurvivalModel& model, double t, std::span<const double> x);
double event_density(const SurvivalModel& model, double t, std::span<const double> x);
double hazard(const SurvivalModel& model, double t, std::span<const double> x);

class KaplanMeierModel final : public SurvivalModel {
 public:
  explicit KaplanMeierModel(std::size_t feature_dim, KaplanMeierCurve curve = {})
      : feature_dim_(feature_dim), curve_(std::move(curve)) {}

  void fit(const Dataset& data) { curve_ = km_fit(data); }
  const KaplanMeierCurve& curve() const { return curve_; }

  ModelKind kind() const override { return ModelKind::kKaplanMeier; }
  std::size_t feature_dim() const override { return feature_dim_; }
  std::vector<double> survival(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> cumulative_hazard(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> event_density(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> hazard(std::span<const double> times, const Tensor& x) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<SurvivalModel> clone() const override;

 private:
  std::size_t feature_dim_;
  KaplanMeierCurve curve_;
};

// Graph expressions for a batch, all B x 1.
struct SurvivalGraph {
  diff::Expr survival;
  diff::Expr cumulative_hazard;
  std::optional<diff::Expr> hazard;   // dLambda/dt
  std::optional<diff::Expr> density;  // S * hazard
};

// Base of every network-parameterized model. Subclasses supply Lambda(t|x)
// and optionally its time derivative as graph expressions; inputs are the
// time column "t" (B x 1) and the feature matrix "x" (B x n).
class NeuralSurvivalModel : public SurvivalModel {
 public:
  static constexpr const char* kTimeInput = "t";
  static constexpr const char* kFeatureInput = "x";

  virtual Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                       bool with_time_derivative) const = 0;

  SurvivalGraph build(diff::Graph& g, diff::Expr t, diff::Expr x, bool with_time_derivative) const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  std::vector<double> survival(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> cumulative_hazard(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> event_density(std::span<const double> times, const Tensor& x) const override;
  std::vector<double> hazard(std::span<const double> times, const Tensor& x) const override;

 protected:
  enum class Quantity { kSurvival, kCumulativeHazard, kDensity, kHazard };
  std::vector<double> evaluate(std::span<const double> times, const Tensor& x, Quantity q) const;

  ParamSet params_;
};

// Models built from a ModelConfig and a feature dimension.
class ConfiguredModel : public NeuralSurvivalModel {
 public:
  ConfiguredModel(ModelKind kind, std::size_t feature_dim, ModelConfig config)
      : kind_(kind), feature_dim_(feature_dim), config_(std::move(config)) {}

  ModelKind kind() const override { return kind_; }
  std::size_t feature_dim() const override { return feature_dim_; }
  const ModelConfig& config() const { return config_; }
  nlohmann::json to_json() const override;

 protected:
  ModelKind kind_;
  std::size_t feature_dim_;
  ModelConfig config_;
};

class SumoModel final : public ConfiguredModel {
 public:
  SumoModel(ModelKind kind, std::size_t feature_dim, ModelConfig config, std::uint64_t seed);
  Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                               bool with_time_derivative) const override;
  std::unique_ptr<SurvivalModel> clone() const override { return std::make_unique<SumoModel>(*this); }

  const DenseLayout& feature_layout() const { return features_; }
  const monotone::MondeLayout& monde_layout() const { return monde_; }

 private:
  DenseLayout features_;
  monotone::MondeLayout monde_;
};

class SumoPlusPlusModel final : public ConfiguredModel {
 public:
  SumoPlusPlusModel(std::size_t feature_dim, ModelConfig config, std::uint64_t seed);
  Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                               bool with_time_derivative) const override;
  std::unique_ptr<SurvivalModel> clone() const override {
    return std::make_unique<SumoPlusPlusModel>(*this);
  }

  const DenseLayout& feature_layout() const { return features_; }
  const monotone::MondePlusLayout& monde_plus_layout() const { return monde_plus_; }

 private:
  DenseLayout features_;
  monotone::MondePlusLayout monde_plus_;
};

class CoxModel final : public ConfiguredModel {
 public:
  // kind is kCoxNN (linear risk) or kCoxDeepNN (dense risk network).
  CoxModel(ModelKind kind, std::size_t feature_dim, ModelConfig config, std::uint64_t seed);
  Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                               bool with_time_derivative) const override;
  std::unique_ptr<SurvivalModel> clone() const override { return std::make_unique<CoxModel>(*this); }

  const monotone::MondePlusLayout& baseline_layout() const { return baseline_; }
  static constexpr const char* kCoefficients = "cox.coef";

 private:
  monotone::MondePlusLayout baseline_;
  DenseLayout risk_;
};

struct TimeCoefficients {
  std::vector<double> omega;
  double alpha = 1.0;
  std::vector<double> beta_minus;
  std::vector<double> beta_plus;
};

class CtxModel final : public ConfiguredModel {
 public:
  CtxModel(std::size_t feature_dim, ModelConfig config, std::uint64_t seed);
  Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                               bool with_time_derivative) const override;
  std::unique_ptr<SurvivalModel> clone() const override { return std::make_unique<CtxModel>(*this); }

  // omega(t, x), alpha(t, x) and beta-(t), beta+(t).
  TimeCoefficients coefficients(double t, std::span<const double> x) const;

  const monotone::MondePlusLayout& baseline_layout() const { return baseline_; }
  const monotone::MondePlusLayout& beta_plus_layout() const { return beta_plus_; }
  const monotone::MondePlusLayout& beta_minus_layout() const { return beta_minus_; }
  static constexpr const char* kOffset = "ctx.offset";

 private:
  struct Coefficients {
    Dual omega;  // B x n
    Dual alpha;  // B x 1
    diff::Expr beta_minus;
    diff::Expr beta_plus;
  };
  Coefficients coefficient_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                 bool with_time_derivative) const;

  monotone::MondePlusLayout baseline_;
  monotone::MondePlusLayout beta_plus_;
  monotone::MondePlusLayout beta_minus_;
};

std::unique_ptr<SurvivalModel> build_model(ModelKind kind, std::size_t feature_dim,
                                           const ModelConfig& config, std::uint64_t seed);
std::unique_ptr<SurvivalModel> model_from_json(const nlohmann::json& j);

TimeCoefficients cox_time_coefficients(const SurvivalModel& model, double t,
                                       std::span<const double> x);

}  // namespace survnet
