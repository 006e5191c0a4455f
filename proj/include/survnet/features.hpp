#pragma once

// Dense feature networks: stacks of affine layers with ReLU and layer
// normalization, optionally ending in a linear head.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/diff.hpp"
#include "survnet/params.hpp"

namespace survnet {

inline constexpr double kLayerNormEpsilon = 1e-5;

enum class BlockOrder {
  kReluThenNorm,  // dense -> ReLU -> layer norm
  kNormThenRelu,  // dense -> layer norm -> ReLU
};

struct DenseLayout {
  std::size_t input_width = 1;
  std::vector<std::size_t> widths;  // hidden blocks
  std::size_t head_width = 0;       // 0 = no linear head
  BlockOrder order = BlockOrder::kReluThenNorm;
  std::string prefix = "features";

  std::size_t output_width() const;
  void validate() const;
  nlohmann::json to_json() const;
  static DenseLayout from_json(const nlohmann::json& j);
};

void init_dense(const DenseLayout& layout, std::mt19937_64& rng, ParamSet& into);
diff::Expr dense_graph(diff::Graph& g, const DenseLayout& layout, diff::Expr x);

// Per-row standardization with learnable gain and shift.
diff::Expr layer_norm(diff::Graph& g, diff::Expr x, diff::Expr gain, diff::Expr shift,
                      double epsilon = kLayerNormEpsilon);

}  // namespace survnet
