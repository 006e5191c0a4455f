#include "survnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survnet/error.hpp"

namespace survnet {

namespace {

constexpr std::size_t kEvalChunk = 512;

std::vector<std::size_t> append(std::vector<std::size_t> widths, std::size_t last) {
  widths.push_back(last);
  return widths;
}

void check_batch(std::span<const double> times, const Tensor& x, std::size_t feature_dim) {
  if (times.size() != x.rows()) {
    throw ShapeError("batch has " + std::to_string(times.size()) + " times but " +
                     std::to_string(x.rows()) + " feature rows");
  }
  if (x.cols() != feature_dim) {
    throw ShapeError("feature width " + std::to_string(x.cols()) + ", model expects " +
                     std::to_string(feature_dim));
  }
  for (double t : times) {
    if (!(t >= 0.0)) throw DomainError("survival queries require t >= 0, got " + std::to_string(t));
  }
}

Tensor single_row(std::span<const double> x) { return Tensor::row(x); }

// Column of ones used as dt/dt.
diff::Expr unit_tangent(diff::Graph& g, std::size_t rows) { return g.constant({rows, 1}, 1.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Kinds

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kKaplanMeier: return "km";
    case ModelKind::kSumo: return "sumo";
    case ModelKind::kSumoPlus: return "sumo_plus";
    case ModelKind::kSumoPlusPlus: return "sumo_plusplus";
    case ModelKind::kCoxNN: return "cox_nn";
    case ModelKind::kCoxDeepNN: return "cox_deep_nn";
    case ModelKind::kCtxNN: return "ctx_nn";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (ModelKind k : {ModelKind::kKaplanMeier, ModelKind::kSumo, ModelKind::kSumoPlus,
                      ModelKind::kSumoPlusPlus, ModelKind::kCoxNN, ModelKind::kCoxDeepNN,
                      ModelKind::kCtxNN}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + name + "'");
}

bool is_cox_like(ModelKind kind) {
  return kind == ModelKind::kCoxNN || kind == ModelKind::kCoxDeepNN || kind == ModelKind::kCtxNN;
}

bool guarantees_initial_condition(ModelKind kind) { return kind != ModelKind::kSumo; }

nlohmann::json ModelConfig::to_json() const {
  return {{"monde_plus_widths", monde_plus_widths},
          {"hadamard_width", hadamard_width},
          {"monde_widths", monde_widths},
          {"feature_widths", feature_widths},
          {"cox_deep_widths", cox_deep_widths}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  if (j.contains("monde_plus_widths"))
    c.monde_plus_widths = j.at("monde_plus_widths").get<std::vector<std::size_t>>();
  if (j.contains("hadamard_width")) c.hadamard_width = j.at("hadamard_width").get<std::size_t>();
  if (j.contains("monde_widths")) c.monde_widths = j.at("monde_widths").get<std::vector<std::size_t>>();
  if (j.contains("feature_widths"))
    c.feature_widths = j.at("feature_widths").get<std::vector<std::size_t>>();
  if (j.contains("cox_deep_widths"))
    c.cox_deep_widths = j.at("cox_deep_widths").get<std::vector<std::size_t>>();
  return c;
}

// ---------------------------------------------------------------------------
// Scalar conveniences

double survival(const SurvivalModel& model, double t, std::span<const double> x) {
  const double ts[] = {t};
  return model.survival(ts, single_row(x))[0];
}

double cumulative_hazard(const SurvivalModel& model, double t, std::span<const double> x) {
  const double ts[] = {t};
  return model.cumulative_hazard(ts, single_row(x))[0];
}

double event_density(const SurvivalModel& model, double t, std::span<const double> x) {
  const double ts[] = {t};
  return model.event_density(ts, single_row(x))[0];
}

double hazard(const SurvivalModel& model, double t, std::span<const double> x) {
  const double ts[] = {t};
  return model.hazard(ts, single_row(x))[0];
}

// ---------------------------------------------------------------------------
// Kaplan-Meier

std::vector<double> KaplanMeierModel::survival(std::span<const double> times, const Tensor& x) const {
  check_batch(times, x, feature_dim_);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(curve_.at(t));
  return out;
}

std::vector<double> KaplanMeierModel::cumulative_hazard(std::span<const double> times,
                                                        const Tensor& x) const {
  auto s = survival(times, x);
  for (double& v : s) v = v > 0.0 ? -std::log(v) : std::numeric_limits<double>::infinity();
  return s;
}

std::vector<double> KaplanMeierModel::event_density(std::span<const double>, const Tensor&) const {
  throw UnsupportedOperation("Kaplan-Meier curves are step functions; no event density");
}

std::vector<double> KaplanMeierModel::hazard(std::span<const double>, const Tensor&) const {
  throw UnsupportedOperation("Kaplan-Meier curves are step functions; no hazard");
}

nlohmann::json KaplanMeierModel::to_json() const {
  return {{"kind", to_string(kind())}, {"feature_dim", feature_dim_}, {"curve", curve_.to_json()}};
}

std::unique_ptr<SurvivalModel> KaplanMeierModel::clone() const {
  return std::make_unique<KaplanMeierModel>(*this);
}

// ---------------------------------------------------------------------------
// Network models: shared evaluation

SurvivalGraph NeuralSurvivalModel::build(diff::Graph& g, diff::Expr t, diff::Expr x,
                                         bool with_time_derivative) const {
  const Dual cumhaz = cumulative_hazard_graph(g, t, x, with_time_derivative);
  SurvivalGraph out;
  out.cumulative_hazard = cumhaz.value;
  out.survival = g.exp(g.neg(cumhaz.value));
  if (with_time_derivative) {
    if (!cumhaz.tangent) throw ContractError("model produced no time derivative");
    out.hazard = *cumhaz.tangent;
    out.density = g.hadamard(out.survival, *cumhaz.tangent);
  }
  return out;
}

std::vector<double> NeuralSurvivalModel::evaluate(std::span<const double> times, const Tensor& x,
                                                  Quantity q) const {
  check_batch(times, x, feature_dim());
  const bool derivative = q == Quantity::kDensity || q == Quantity::kHazard;
  std::vector<double> out;
  out.reserve(times.size());
  const std::size_t n = times.size();
  const std::size_t d = feature_dim();
  for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
    const std::size_t rows = std::min(kEvalChunk, n - begin);
    diff::Graph g;
    const auto t = g.input(kTimeInput, {rows, 1});
    const auto xin = g.input(kFeatureInput, {rows, d});
    const SurvivalGraph sg = build(g, t, xin, derivative);
    diff::Expr root = sg.survival;
    switch (q) {
      case Quantity::kSurvival: root = sg.survival; break;
      case Quantity::kCumulativeHazard: root = sg.cumulative_hazard; break;
      case Quantity::kDensity: root = *sg.density; break;
      case Quantity::kHazard: root = *sg.hazard; break;
    }
    diff::Bindings b;
    params_.bind(b);
    b.set(kTimeInput, Tensor({rows, 1}, std::vector<double>(times.begin() + static_cast<long>(begin),
                                                            times.begin() + static_cast<long>(begin + rows))));
    Tensor xs({rows, d});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < d; ++c) xs(r, c) = x(begin + r, c);
    b.set(kFeatureInput, std::move(xs));
    const Tensor v = diff::eval_graph(g, root, b);
    out.insert(out.end(), v.values().begin(), v.values().end());
  }
  return out;
}

std::vector<double> NeuralSurvivalModel::survival(std::span<const double> times, const Tensor& x) const {
  return evaluate(times, x, Quantity::kSurvival);
}

std::vector<double> NeuralSurvivalModel::cumulative_hazard(std::span<const double> times,
                                                           const Tensor& x) const {
  return evaluate(times, x, Quantity::kCumulativeHazard);
}

std::vector<double> NeuralSurvivalModel::event_density(std::span<const double> times,
                                                       const Tensor& x) const {
  return evaluate(times, x, Quantity::kDensity);
}

std::vector<double> NeuralSurvivalModel::hazard(std::span<const double> times, const Tensor& x) const {
  return evaluate(times, x, Quantity::kHazard);
}

nlohmann::json ConfiguredModel::to_json() const {
  return {{"kind", to_string(kind_)},
          {"feature_dim", feature_dim_},
          {"config", config_.to_json()},
          {"params", params_.to_json()}};
}

// ---------------------------------------------------------------------------
// SuMo and SuMo+

SumoModel::SumoModel(ModelKind kind, std::size_t feature_dim, ModelConfig config, std::uint64_t seed)
    : ConfiguredModel(kind, feature_dim, std::move(config)) {
  if (kind != ModelKind::kSumo && kind != ModelKind::kSumoPlus) {
    throw ConfigError("SumoModel supports sumo and sumo_plus only");
  }
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  features_ = DenseLayout{feature_dim, config_.feature_widths, 0, BlockOrder::kReluThenNorm, "features"};
  monde_ = monotone::MondeLayout{1 + features_.output_width(), append(config_.monde_widths, 1), "monde"};
  std::mt19937_64 rng(seed);
  init_dense(features_, rng, params_);
  monotone::init_monde(monde_, rng, params_);
}

Dual SumoModel::cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                        bool with_time_derivative) const {
  const std::size_t rows = g.shape(x).rows;
  const auto q = dense_graph(g, features_, x);
  const std::size_t k = g.shape(q).cols;
  Dual z{g.concat_cols(t, q), std::nullopt};
  if (with_time_derivative) {
    Tensor dz({rows, 1 + k});
    for (std::size_t r = 0; r < rows; ++r) dz(r, 0) = 1.0;
    z.tangent = g.constant(std::move(dz));
  }
  const Dual m = monotone::monde_graph(g, monde_, z);
  if (kind_ == ModelKind::kSumo) {
    // 1 - sigmoid(m) = exp(-softplus(m))
    return dual::softplus(g, m);
  }
  const Dual z0 = dual::constant(g.concat_cols(g.constant({rows, 1}, 0.0), q));
  return dual::sub(g, m, monotone::monde_graph(g, monde_, z0));
}

// ---------------------------------------------------------------------------
// SuMo++

SumoPlusPlusModel::SumoPlusPlusModel(std::size_t feature_dim, ModelConfig config, std::uint64_t seed)
    : ConfiguredModel(ModelKind::kSumoPlusPlus, feature_dim, std::move(config)) {
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  features_ = DenseLayout{feature_dim, config_.feature_widths, 0, BlockOrder::kReluThenNorm, "features"};
  monde_plus_ = monotone::MondePlusLayout{features_.output_width(), append(config_.monde_plus_widths, 1),
                                          config_.hadamard_width, "monde_plus"};
  std::mt19937_64 rng(seed);
  init_dense(features_, rng, params_);
  monotone::init_monde_plus(monde_plus_, rng, params_);
}

Dual SumoPlusPlusModel::cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                                bool with_time_derivative) const {
  const std::size_t rows = g.shape(x).rows;
  const auto q = dense_graph(g, features_, x);
  Dual time{t, std::nullopt};
  if (with_time_derivative) time.tangent = unit_tangent(g, rows);
  const Dual at_t = monotone::monde_plus_graph(g, monde_plus_, time, q);
  const Dual at_zero =
      monotone::monde_plus_graph(g, monde_plus_, dual::constant(g.constant({rows, 1}, 0.0)), q);
  return dual::sub(g, at_t, at_zero);
}

// ---------------------------------------------------------------------------
// Cox models

CoxModel::CoxModel(ModelKind kind, std::size_t feature_dim, ModelConfig config, std::uint64_t seed)
    : ConfiguredModel(kind, feature_dim, std::move(config)) {
  if (kind != ModelKind::kCoxNN && kind != ModelKind::kCoxDeepNN) {
    throw ConfigError("CoxModel supports cox_nn and cox_deep_nn only");
  }
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  baseline_ = monotone::MondePlusLayout{1, append(config_.monde_plus_widths, 1), config_.hadamard_width,
                                        "baseline"};
  std::mt19937_64 rng(seed);
  monotone::init_monde_plus(baseline_, rng, params_);
  if (kind == ModelKind::kCoxNN) {
    params_.add(kCoefficients, Tensor({1, feature_dim}));
  } else {
    auto widths = config_.cox_deep_widths;
    if (widths.empty()) widths = {2 * feature_dim, 8};
    risk_ = DenseLayout{feature_dim, widths, 1, BlockOrder::kNormThenRelu, "risk"};
    init_dense(risk_, rng, params_);
  }
}

Dual CoxModel::cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                       bool with_time_derivative) const {
  const std::size_t rows = g.shape(x).rows;
  const auto zero_x = g.constant({rows, 1}, 0.0);
  Dual time{t, std::nullopt};
  if (with_time_derivative) time.tangent = unit_tangent(g, rows);
  const Dual baseline = dual::sub(
      g, monotone::monde_plus_graph(g, baseline_, time, zero_x),
      monotone::monde_plus_graph(g, baseline_, dual::constant(g.constant({rows, 1}, 0.0)), zero_x));

  diff::Expr risk;
  if (kind_ == ModelKind::kCoxNN) {
    risk = g.affine(x, g.input(kCoefficients, {1, feature_dim_}));
  } else {
    risk = dense_graph(g, risk_, x);
  }
  return dual::hadamard(g, dual::constant(g.exp(risk)), baseline);
}

// ---------------------------------------------------------------------------
// Time-dependent Cox

CtxModel::CtxModel(std::size_t feature_dim, ModelConfig config, std::uint64_t seed)
    : ConfiguredModel(ModelKind::kCtxNN, feature_dim, std::move(config)) {
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  baseline_ = monotone::MondePlusLayout{1, append(config_.monde_plus_widths, 1), config_.hadamard_width,
                                        "baseline"};
  beta_plus_ = monotone::MondePlusLayout{1, append(config_.monde_plus_widths, feature_dim),
                                         config_.hadamard_width, "beta_plus"};
  beta_minus_ = monotone::MondePlusLayout{1, append(config_.monde_plus_widths, feature_dim),
                                          config_.hadamard_width, "beta_minus"};
  std::mt19937_64 rng(seed);
  monotone::init_monde_plus(baseline_, rng, params_);
  monotone::init_monde_plus(beta_plus_, rng, params_);
  monotone::init_monde_plus(beta_minus_, rng, params_);
  params_.add(kOffset, Tensor({1, feature_dim}));
}

CtxModel::Coefficients CtxModel::coefficient_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                                   bool with_time_derivative) const {
  const std::size_t rows = g.shape(x).rows;
  const auto zero_x = g.constant({rows, 1}, 0.0);
  const auto zero_t = dual::constant(g.constant({rows, 1}, 0.0));
  Dual time{t, std::nullopt};
  if (with_time_derivative) time.tangent = unit_tangent(g, rows);

  const Dual plus_t = monotone::monde_plus_graph(g, beta_plus_, time, zero_x);
  const Dual plus_0 = monotone::monde_plus_graph(g, beta_plus_, zero_t, zero_x);
  const Dual minus_t = monotone::monde_plus_graph(g, beta_minus_, time, zero_x);
  const Dual minus_0 = monotone::monde_plus_graph(g, beta_minus_, zero_t, zero_x);
  const Dual beta_minus = dual::add(g, dual::sub(g, minus_t, minus_0), plus_0);
  const Dual& beta_plus = plus_t;

  const auto offset = g.input(kOffset, {1, feature_dim_});
  const auto shifted = g.sub(x, g.broadcast_rows(offset, rows));
  Dual omega{g.where_negative(shifted, beta_minus.value, beta_plus.value), std::nullopt};
  if (with_time_derivative) {
    omega.tangent = g.where_negative(shifted, *beta_minus.tangent, *beta_plus.tangent);
  }
  const Dual exponent = dual::row_sum(g, dual::hadamard(g, omega, dual::constant(g.abs(shifted))));
  return {omega, dual::exp(g, exponent), beta_minus.value, beta_plus.value};
}

Dual CtxModel::cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr x,
                                       bool with_time_derivative) const {
  const std::size_t rows = g.shape(x).rows;
  const auto zero_x = g.constant({rows, 1}, 0.0);
  Dual time{t, std::nullopt};
  if (with_time_derivative) time.tangent = unit_tangent(g, rows);
  const Dual baseline = dual::sub(
      g, monotone::monde_plus_graph(g, baseline_, time, zero_x),
      monotone::monde_plus_graph(g, baseline_, dual::constant(g.constant({rows, 1}, 0.0)), zero_x));
  const Coefficients c = coefficient_graph(g, t, x, with_time_derivative);
  return dual::hadamard(g, c.alpha, baseline);
}

TimeCoefficients CtxModel::coefficients(double t, std::span<const double> x) const {
  const double ts[] = {t};
  check_batch(ts, single_row(x), feature_dim_);
  diff::Graph g;
  const auto tin = g.input(kTimeInput, {1, 1});
  const auto xin = g.input(kFeatureInput, {1, feature_dim_});
  const Coefficients c = coefficient_graph(g, tin, xin, false);
  diff::Bindings b;
  params_.bind(b);
  b.set(kTimeInput, Tensor::scalar(t));
  b.set(kFeatureInput, Tensor::row(x));
  const diff::Expr roots[] = {c.omega.value, c.alpha.value, c.beta_minus, c.beta_plus};
  const diff::Evaluation ev(g, b, roots);
  auto vec = [&](diff::Expr e) {
    const auto v = ev.value(e).values();
    return std::vector<double>(v.begin(), v.end());
  };
  return {vec(c.omega.value), ev.value(c.alpha.value).item(), vec(c.beta_minus), vec(c.beta_plus)};
}

TimeCoefficients cox_time_coefficients(const SurvivalModel& model, double t,
                                       std::span<const double> x) {
  const auto* ctx = dynamic_cast<const CtxModel*>(&model);
  if (ctx == nullptr) {
    throw ContractError("time-dependent coefficients require a ctx_nn model, got " +
                        to_string(model.kind()));
  }
  return ctx->coefficients(t, x);
}

// ---------------------------------------------------------------------------
// Construction and serialization

std::unique_ptr<SurvivalModel> build_model(ModelKind kind, std::size_t feature_dim,
                                           const ModelConfig& config, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::kKaplanMeier: return std::make_unique<KaplanMeierModel>(feature_dim);
    case ModelKind::kSumo:
    case ModelKind::kSumoPlus: return std::make_unique<SumoModel>(kind, feature_dim, config, seed);
    case ModelKind::kSumoPlusPlus: return std::make_unique<SumoPlusPlusModel>(feature_dim, config, seed);
    case ModelKind::kCoxNN:
    case ModelKind::kCoxDeepNN: return std::make_unique<CoxModel>(kind, feature_dim, config, seed);
    case ModelKind::kCtxNN: return std::make_unique<CtxModel>(feature_dim, config, seed);
  }
  throw ConfigError("unknown model kind");
}

std::unique_ptr<SurvivalModel> model_from_json(const nlohmann::json& j) {
  const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
  const auto feature_dim = j.at("feature_dim").get<std::size_t>();
  if (kind == ModelKind::kKaplanMeier) {
    return std::make_unique<KaplanMeierModel>(feature_dim, KaplanMeierCurve::from_json(j.at("curve")));
  }
  auto model = build_model(kind, feature_dim, ModelConfig::from_json(j.at("config")), 0);
  auto& neural = dynamic_cast<NeuralSurvivalModel&>(*model);
  ParamSet loaded = ParamSet::from_json(j.at("params"));
  ParamSet& target = neural.params();
  if (loaded.size() != target.size()) throw ParseError("model file has the wrong parameter count");
  for (const Param& p : loaded.items()) {
    Param& dst = target.at(p.name);
    if (dst.value.shape() != p.value.shape()) {
      throw ParseError("parameter '" + p.name + "' has shape " + p.value.shape().str() +
                       ", expected " + dst.value.shape().str());
    }
    dst.value = p.value;
  }
  return model;
}

}  // namespace survnet
