#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/dataset.hpp"

namespace survnet {

// Product-limit estimate: a right-continuous step function that starts at 1
// and drops only at observed event times. Constant beyond the last time.
struct KaplanMeierCurve {
  std::vector<double> times;   // distinct event times, ascending
  std::vector<double> values;  // S just after each time

  double at(double t) const;

  nlohmann::json to_json() const;
  static KaplanMeierCurve from_json(const nlohmann::json& j);
};

KaplanMeierCurve km_fit(std::span<const double> times, std::span<const int> events);
KaplanMeierCurve km_fit(std::span<const Sample> samples);
KaplanMeierCurve km_fit(const Dataset& data);

}  // namespace survnet
