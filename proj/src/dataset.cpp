#include "survnet/dataset.hpp"

#include <cmath>

#include "survnet/error.hpp"

namespace survnet {

nlohmann::json NormalizationStats::to_json() const {
  return {{"mean", mean}, {"stddev", stddev}, {"time_scale", time_scale}};
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& j) {
  NormalizationStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  s.time_scale = j.at("time_scale").get<double>();
  return s;
}

Sample Dataset::sample(std::size_t i) const {
  const auto row = features.row_span(i);
  return Sample{{row.begin(), row.end()}, events[i], times[i]};
}

std::vector<Sample> Dataset::samples() const {
  std::vector<Sample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Tensor({indices.size(), dims()});
  out.feature_names = feature_names;
  out.stats = stats;
  out.events.reserve(indices.size());
  out.times.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= size()) throw ContractError("subset index out of range");
    for (std::size_t c = 0; c < dims(); ++c) out.features(r, c) = features(i, c);
    out.events.push_back(events[i]);
    out.times.push_back(times[i]);
  }
  return out;
}

Dataset Dataset::from_samples(std::span<const Sample> samples) {
  Dataset out;
  const std::size_t d = samples.empty() ? 0 : samples.front().x.size();
  out.features = Tensor({samples.size(), d});
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].x.size() != d) throw ShapeError("samples have differing feature lengths");
    for (std::size_t c = 0; c < d; ++c) out.features(r, c) = samples[r].x[c];
    out.events.push_back(samples[r].event);
    out.times.push_back(samples[r].time);
  }
  for (std::size_t c = 0; c < d; ++c) out.feature_names.push_back("x" + std::to_string(c));
  return out;
}

void Dataset::validate() const {
  if (events.size() != times.size() || features.rows() != times.size()) {
    throw ShapeError("dataset columns have inconsistent lengths");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (events[i] != 0 && events[i] != 1) {
      throw ParseError("row " + std::to_string(i) + ": event must be 0 or 1");
    }
    if (!(times[i] > 0.0) || !std::isfinite(times[i])) {
      throw ParseError("row " + std::to_string(i) + ": time must be positive and finite");
    }
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw ParseError("dataset contains a non-finite feature value");
  }
}

nlohmann::json Dataset::to_json() const {
  nlohmann::json j;
  j["feature_names"] = feature_names;
  j["rows"] = size();
  j["cols"] = dims();
  j["features"] = std::vector<double>(features.values().begin(), features.values().end());
  j["events"] = events;
  j["times"] = times;
  j["stats"] = stats ? stats->to_json() : nlohmann::json(nullptr);
  return j;
}

Dataset Dataset::from_json(const nlohmann::json& j) {
  Dataset d;
  d.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  d.features = Tensor({rows, cols}, j.at("features").get<std::vector<double>>());
  d.events = j.at("events").get<std::vector<int>>();
  d.times = j.at("times").get<std::vector<double>>();
  if (!j.at("stats").is_null()) d.stats = NormalizationStats::from_json(j.at("stats"));
  d.validate();
  return d;
}

}  // namespace survnet
