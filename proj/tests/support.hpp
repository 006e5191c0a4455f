#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "survnet/error.hpp"
#include "survnet/models.hpp"

namespace survnet::testing {

// Lambda(t|x) = offset + rate * t, written as a network model so the graph machinery is exercised.
class ConstantHazardModel final : public NeuralSurvivalModel {
 public:
  ConstantHazardModel(std::size_t dims, double rate, double offset = 0.0)
      : dims_(dims), rate_(rate), offset_(offset) {}

  Dual cumulative_hazard_graph(diff::Graph& g, diff::Expr t, diff::Expr, bool with_td) const override {
    Dual out{g.add_scalar(g.scale(t, rate_), offset_), std::nullopt};
    if (with_td) out.tangent = g.constant(g.shape(t), rate_);
    return out;
  }
  ModelKind kind() const override { return ModelKind::kCoxNN; }
  std::size_t feature_dim() const override { return dims_; }
  nlohmann::json to_json() const override { return {{"rate", rate_}}; }
  std::unique_ptr<SurvivalModel> clone() const override {
    return std::make_unique<ConstantHazardModel>(*this);
  }

 private:
  std::size_t dims_;
  double rate_;
  double offset_;
};

// Survival given directly as a function of (t, x).
template <class F>
class FunctionModel final : public SurvivalModel {
 public:
  FunctionModel(std::size_t dims, F f) : dims_(dims), f_(f) {}

  ModelKind kind() const override { return ModelKind::kKaplanMeier; }
  std::size_t feature_dim() const override { return dims_; }
  std::vector<double> survival(std::span<const double> times, const Tensor& x) const override {
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = f_(times[i], x.row_span(i));
    return out;
  }
  std::vector<double> cumulative_hazard(std::span<const double> times, const Tensor& x) const override {
    auto s = survival(times, x);
    for (double& v : s) v = -std::log(v);
    return s;
  }
  std::vector<double> event_density(std::span<const double>, const Tensor&) const override {
    throw UnsupportedOperation("function model");
  }
  std::vector<double> hazard(std::span<const double>, const Tensor&) const override {
    throw UnsupportedOperation("function model");
  }
  nlohmann::json to_json() const override { return {}; }
  std::unique_ptr<SurvivalModel> clone() const override { return std::make_unique<FunctionModel>(*this); }

 private:
  std::size_t dims_;
  F f_;
};

template <class F>
FunctionModel<F> function_model(std::size_t dims, F f) {
  return FunctionModel<F>(dims, f);
}

inline Tensor random_tensor(Shape s, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(s);
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace survnet::testing
