#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/dataset.hpp"
#include "survnet/losses.hpp"

namespace survnet {

struct CsvSchema {
  std::vector<std::string> feature_columns;  // empty = every other column
  std::string event_column = "event";
  std::string time_column = "time";

  nlohmann::json to_json() const;
  static CsvSchema from_json(const nlohmann::json& j);
};

// Comma separated with a header row. Errors name the 1-based line.
Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<input>");
Dataset load_csv(const std::string& path, const CsvSchema& schema);
void write_csv(std::ostream& out, const Dataset& data);

// Nearest-rank percentile: the value of rank ceil(q n) in ascending order.
double nearest_rank_percentile(std::vector<double> values, double q);

// Standardizes every feature column with the population standard deviation
// and divides times by their 90th percentile.
Dataset normalize(const Dataset& data);
Dataset apply_normalization(const Dataset& data, const NormalizationStats& stats);

struct SplitSpec {
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
  std::size_t n_seeds = 1000;
  std::uint64_t base_seed = 0;
  std::uint64_t chosen_seed = 0;
  double discrepancy = 0.0;
  std::array<std::vector<std::size_t>, 3> indices;  // train, validation, test

  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

// Random partition by fractions under one seed.
std::array<std::vector<std::size_t>, 3> random_split(std::size_t n, const std::array<double, 3>& fractions,
                                                     std::uint64_t seed);
// Sum over the three pairs of the sup distance between the groups' KM curves.
double km_discrepancy(const Dataset& data, const std::array<std::vector<std::size_t>, 3>& groups);
SplitSpec km_balanced_split(const Dataset& data, const std::array<double, 3>& fractions,
                            std::size_t n_seeds = 1000, std::uint64_t base_seed = 0);

struct ToyFixture {
  Tensor features;  // 6 x 32, entries in [-1, 1]
  std::vector<PointTarget> points;

  std::size_t samples() const { return features.rows(); }
  // 1 / samples() per point: the loss sums a sample's points and averages samples.
  std::vector<double> weights() const;
  std::vector<PointTarget> points_of(std::size_t sample) const;
};

ToyFixture toy_dataset();

struct WeibullSpec {
  std::size_t n = 2000;
  std::size_t dims = 4;
  double shape = 1.5;
  double effect = 1.0;
  double censor_rate = 0.3;
  std::uint64_t seed = 0;
};

// x ~ N(0, I); T ~ Weibull(shape, scale exp(<beta, x>)) with
// beta = effect * (1, -0.8, 0.6, -0.4, ...); censoring C ~ U(0, c) with c
// chosen so the expected censored fraction equals censor_rate.
Dataset synthetic_weibull(const WeibullSpec& spec);
std::vector<double> weibull_coefficients(std::size_t dims, double effect);

}  // namespace survnet
