#pragma once

// Monotone networks.
//
// MONDE: feed-forward stack z_{k+1} = act_k(W_k z_k) with non-negative linear
// parts, hence non-decreasing in every input coordinate.
//
// MONDE+: layers
//   z_{k+1} = H_k z_k + act_k(A_k(softplus(a_k t + b_k) o softplus(G_k z_k)) + B_k z_k + L_k z_0)
// with the linear parts of A, B, G, H and the vector a non-negative. The
// output is non-decreasing in t only; z_0 = x enters every layer through the
// unconstrained L_k. Hidden layers use tanh, the last layer the identity.
//
// Parameter names (per layer k, under the layout prefix p):
//   MONDE:  p.k.W.weight, p.k.W.bias
//   MONDE+: p.k.A.weight, p.k.B.weight, p.k.B.bias, p.k.G.weight, p.k.G.bias,
//           p.k.H.weight, p.k.H.bias, p.k.L.weight, p.k.L.bias, p.k.a, p.k.b

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/diff.hpp"
#include "survnet/dual.hpp"
#include "survnet/params.hpp"

namespace survnet::monotone {

// Initialization factors found by hyperparameter search on the toy task.
inline constexpr double kMondeWeightFactor = 4.6;
inline constexpr double kMondeBiasFactor = 6.6;
inline constexpr double kMondePlusMatrixFactor = 0.2;
inline constexpr double kMondePlusBBiasFactor = -8.5;
inline constexpr double kMondePlusGBiasFactor = 10.0;

struct MondeLayout {
  std::size_t input_width = 1;
  std::vector<std::size_t> widths;  // output width of every layer, last = output dim
  std::string prefix = "monde";

  void validate() const;
  std::string name(std::size_t layer, const char* tensor) const;
  nlohmann::json to_json() const;
  static MondeLayout from_json(const nlohmann::json& j);
};

struct MondePlusLayout {
  std::size_t input_width = 1;  // width of z_0
  std::vector<std::size_t> widths;
  std::size_t hadamard_width = 64;
  std::string prefix = "monde_plus";

  std::size_t output_width() const { return widths.back(); }
  void validate() const;
  std::string name(std::size_t layer, const char* tensor) const;
  nlohmann::json to_json() const;
  static MondePlusLayout from_json(const nlohmann::json& j);
};

struct MondeParams {
  MondeLayout layout;
  ParamSet params;
};

struct MondePlusParams {
  MondePlusLayout layout;
  ParamSet params;
};

// Weights |N(0, std 1/in)| * 4.6, biases |N(0, std 1/out)| * 6.6.
void init_monde(const MondeLayout& layout, std::mt19937_64& rng, ParamSet& into);
MondeParams init_monde(const MondeLayout& layout, std::uint64_t seed);

// PyTorch-style Kaiming-uniform draws U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// A, B, G, H weights: |draw| * 0.2. B bias: -8.5 * |draw|. G bias: 10 * |draw|.
// H bias: signed draw. A has no bias. L weight and bias: signed draws.
// a ~ U(0, 1), b = 0.
void init_monde_plus(const MondePlusLayout& layout, std::mt19937_64& rng, ParamSet& into);
MondePlusParams init_monde_plus(const MondePlusLayout& layout, std::uint64_t seed);

// All-zero parameters with the constraint flags set, for hand-built networks.
MondeParams zero_monde(const MondeLayout& layout);
MondePlusParams zero_monde_plus(const MondePlusLayout& layout);

// Graph builders. `z` may carry a tangent; `t` is a B x 1 time column.
Dual monde_graph(diff::Graph& g, const MondeLayout& layout, const Dual& z);
Dual monde_plus_graph(diff::Graph& g, const MondePlusLayout& layout, const Dual& t,
                      diff::Expr z0);

std::vector<double> monde_forward(const MondeParams& params, std::span<const double> z);
std::vector<double> monde_plus_forward(const MondePlusParams& params, double t,
                                       std::span<const double> x);

void project_nonnegative(MondeParams& params);
void project_nonnegative(MondePlusParams& params);

nlohmann::json to_json(const MondePlusParams& params);
MondePlusParams monde_plus_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MondeParams& params);
MondeParams monde_from_json(const nlohmann::json& j);

}  // namespace survnet::monotone
