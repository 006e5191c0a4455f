#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/tensor.hpp"

namespace survnet {

// One right-censored observation (x, e, T): e = 1 if the event was observed
// at T, e = 0 if the subject was censored at T.
struct Sample {
  std::vector<double> x;
  int event = 0;
  double time = 0.0;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  double time_scale = 1.0;  // T_max of the normalized data, in input units

  nlohmann::json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& j);
};

struct Dataset {
  Tensor features{Shape{0, 0}};  // n x d
  std::vector<int> events;
  std::vector<double> times;
  std::vector<std::string> feature_names;
  std::optional<NormalizationStats> stats;  // set once normalized

  std::size_t size() const { return times.size(); }
  std::size_t dims() const { return features.cols(); }
  bool normalized() const { return stats.has_value(); }

  Sample sample(std::size_t i) const;
  std::vector<Sample> samples() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  static Dataset from_samples(std::span<const Sample> samples);

  // Checks e in {0,1}, T > 0, finite features, consistent sizes.
  void validate() const;

  nlohmann::json to_json() const;
  static Dataset from_json(const nlohmann::json& j);
};

}  // namespace survnet
