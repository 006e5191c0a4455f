#include "survnet/kaplan_meier.hpp"

#include <algorithm>
#include <numeric>

#include "survnet/error.hpp"

namespace survnet {

double KaplanMeierCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

nlohmann::json KaplanMeierCurve::to_json() const { return {{"times", times}, {"values", values}}; }

KaplanMeierCurve KaplanMeierCurve::from_json(const nlohmann::json& j) {
  KaplanMeierCurve c;
  c.times = j.at("times").get<std::vector<double>>();
  c.values = j.at("values").get<std::vector<double>>();
  if (c.times.size() != c.values.size()) throw ParseError("Kaplan-Meier curve length mismatch");
  return c;
}

KaplanMeierCurve km_fit(std::span<const double> times, std::span<const int> events) {
  if (times.empty()) throw ContractError("Kaplan-Meier fit needs at least one sample");
  if (times.size() != events.size()) throw ShapeError("times and events differ in length");

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  KaplanMeierCurve curve;
  double s = 1.0;
  std::size_t at_risk = times.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    std::size_t deaths = 0, leaving = 0;
    while (i < order.size() && times[order[i]] == t) {
      deaths += events[order[i]] == 1 ? 1 : 0;
      ++leaving;
      ++i;
    }
    if (deaths > 0) {
      s *= static_cast<double>(at_risk - deaths) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.values.push_back(s);
    }
    at_risk -= leaving;
  }
  return curve;
}

KaplanMeierCurve km_fit(std::span<const Sample> samples) {
  std::vector<double> t;
  std::vector<int> e;
  for (const auto& s : samples) {
    t.push_back(s.time);
    e.push_back(s.event);
  }
  return km_fit(t, e);
}

KaplanMeierCurve km_fit(const Dataset& data) { return km_fit(data.times, data.events); }

}  // namespace survnet
