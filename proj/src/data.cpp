#include "survnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "survnet/error.hpp"
#include "survnet/kaplan_meier.hpp"

namespace survnet {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                      : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column,
                    const std::string& source) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(source + ": row " + std::to_string(line) + ", column '" + column +
                     "': not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

nlohmann::json CsvSchema::to_json() const {
  return {{"features", feature_columns}, {"event", event_column}, {"time", time_column}};
}

CsvSchema CsvSchema::from_json(const nlohmann::json& j) {
  CsvSchema s;
  if (j.contains("features")) s.feature_columns = j.at("features").get<std::vector<std::string>>();
  s.event_column = j.value("event", s.event_column);
  s.time_column = j.value("time", s.time_column);
  return s;
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(source + ": missing header row");

  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t event_col = column(schema.event_column);
  const std::size_t time_col = column(schema.time_column);
  std::vector<std::size_t> feature_cols;
  Dataset data;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == event_col || c == time_col) continue;
      feature_cols.push_back(c);
      data.feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(column(name));
      data.feature_names.push_back(name);
    }
  }

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    const double e = parse_number(cells[event_col], line_no, schema.event_column, source);
    if (e != 0.0 && e != 1.0) {
      throw ParseError(source + ": row " + std::to_string(line_no) + ": event must be 0 or 1, got '" +
                       cells[event_col] + "'");
    }
    const double t = parse_number(cells[time_col], line_no, schema.time_column, source);
    if (!(t > 0.0)) {
      throw ParseError(source + ": row " + std::to_string(line_no) + ": time must be > 0, got '" +
                       cells[time_col] + "'");
    }
    for (std::size_t c : feature_cols) values.push_back(parse_number(cells[c], line_no, header[c], source));
    data.events.push_back(static_cast<int>(e));
    data.times.push_back(t);
  }
  data.features = Tensor({data.times.size(), feature_cols.size()}, std::move(values));
  data.validate();
  return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in, schema, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
  out.precision(17);
  for (const auto& name : data.feature_names) out << name << ',';
  out << "event,time\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < data.dims(); ++c) out << data.features(i, c) << ',';
    out << data.events[i] << ',' << data.times[i] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Normalization

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("percentile of an empty list");
  if (!(q > 0.0 && q <= 1.0)) throw ContractError("percentile fraction must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-12));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

Dataset normalize(const Dataset& data) {
  if (data.normalized()) throw ContractError("dataset is already normalized");
  if (data.size() < 2) throw ContractError("normalization needs at least 2 samples");
  NormalizationStats stats;
  const double n = static_cast<double>(data.size());
  for (std::size_t c = 0; c < data.dims(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) mean += data.features(i, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double d = data.features(i, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) {
      const std::string name = c < data.feature_names.size() ? data.feature_names[c] : std::to_string(c);
      throw DomainError("feature column '" + name + "' has zero variance");
    }
    stats.mean.push_back(mean);
    stats.stddev.push_back(sd);
  }
  stats.time_scale = nearest_rank_percentile(data.times, 0.9);
  return apply_normalization(data, stats);
}

Dataset apply_normalization(const Dataset& data, const NormalizationStats& stats) {
  if (data.normalized()) throw ContractError("dataset is already normalized");
  if (stats.mean.size() != data.dims() || stats.stddev.size() != data.dims()) {
    throw ShapeError("normalization stats do not match the feature count");
  }
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c = 0; c < out.dims(); ++c) {
      out.features(i, c) = (data.features(i, c) - stats.mean[c]) / stats.stddev[c];
    }
    out.times[i] = data.times[i] / stats.time_scale;
  }
  out.stats = stats;
  return out;
}

// ---------------------------------------------------------------------------
// Splits

nlohmann::json SplitSpec::to_json() const {
  return {{"fractions", fractions},   {"n_seeds", n_seeds},
          {"base_seed", base_seed},   {"chosen_seed", chosen_seed},
          {"discrepancy", discrepancy}, {"train", indices[0]},
          {"validation", indices[1]}, {"test", indices[2]}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.fractions = j.at("fractions").get<std::array<double, 3>>();
  s.n_seeds = j.at("n_seeds").get<std::size_t>();
  s.base_seed = j.at("base_seed").get<std::uint64_t>();
  s.chosen_seed = j.at("chosen_seed").get<std::uint64_t>();
  s.discrepancy = j.at("discrepancy").get<double>();
  s.indices[0] = j.at("train").get<std::vector<std::size_t>>();
  s.indices[1] = j.at("validation").get<std::vector<std::size_t>>();
  s.indices[2] = j.at("test").get<std::vector<std::size_t>>();
  return s;
}

std::array<std::vector<std::size_t>, 3> random_split(std::size_t n, const std::array<double, 3>& fractions,
                                                     std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ContractError("split of " + std::to_string(n) + " samples leaves a part empty");
  }
  std::array<std::vector<std::size_t>, 3> out;
  out[0].assign(order.begin(), order.begin() + static_cast<long>(n_train));
  out[1].assign(order.begin() + static_cast<long>(n_train), order.begin() + static_cast<long>(n_train + n_val));
  out[2].assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  return out;
}

double km_discrepancy(const Dataset& data, const std::array<std::vector<std::size_t>, 3>& groups) {
  std::array<KaplanMeierCurve, 3> curves;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> t;
    std::vector<int> e;
    for (std::size_t i : groups[k]) {
      t.push_back(data.times[i]);
      e.push_back(data.events[i]);
    }
    curves[k] = km_fit(t, e);
  }
  std::vector<double> grid;
  for (const auto& c : curves) grid.insert(grid.end(), c.times.begin(), c.times.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double total = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      double sup = 0.0;
      for (double t : grid) sup = std::max(sup, std::abs(curves[a].at(t) - curves[b].at(t)));
      total += sup;
    }
  }
  return total;
}

SplitSpec km_balanced_split(const Dataset& data, const std::array<double, 3>& fractions, std::size_t n_seeds,
                            std::uint64_t base_seed) {
  if (n_seeds == 0) throw ConfigError("split needs at least one candidate seed");
  SplitSpec best;
  best.fractions = fractions;
  best.n_seeds = n_seeds;
  best.base_seed = base_seed;
  best.discrepancy = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_seeds; ++k) {
    const std::uint64_t seed = base_seed + k;
    auto groups = random_split(data.size(), fractions, seed);
    const double d = km_discrepancy(data, groups);
    if (d < best.discrepancy) {
      best.discrepancy = d;
      best.chosen_seed = seed;
      best.indices = std::move(groups);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Toy fixture

std::vector<double> ToyFixture::weights() const {
  return std::vector<double>(points.size(), 1.0 / static_cast<double>(samples()));
}

std::vector<PointTarget> ToyFixture::points_of(std::size_t sample) const {
  std::vector<PointTarget> out;
  for (const auto& p : points) {
    if (p.sample == sample) out.push_back(p);
  }
  return out;
}

ToyFixture toy_dataset() {
  // (time, survival) targets; sample 1 drops sharply then plateaus, sample 2
  // plateaus then drops sharply, sample 5 is a staircase.
  static const std::vector<std::vector<std::pair<double, double>>> curves{
      {{0.30, 0.90}, {0.90, 0.60}},
      {{0.10, 0.30}, {0.50, 0.25}, {0.90, 0.20}},
      {{0.20, 0.95}, {0.50, 0.90}, {0.70, 0.85}, {0.80, 0.10}},
      {{0.10, 0.80}, {0.30, 0.75}, {0.50, 0.40}, {0.70, 0.35}, {0.95, 0.30}},
      {{0.10, 0.90}, {0.25, 0.75}, {0.40, 0.60}, {0.55, 0.45}, {0.70, 0.30}, {0.85, 0.15}},
      {{0.05, 1.00}, {0.20, 0.70}, {0.30, 0.68}, {0.45, 0.66}, {0.55, 0.20}, {0.75, 0.18}, {1.00, 0.05}},
  };
  ToyFixture fx;
  fx.features = Tensor({curves.size(), 32});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : fx.features.values()) v = u(rng);
  for (std::size_t s = 0; s < curves.size(); ++s) {
    for (const auto& [t, p] : curves[s]) fx.points.push_back({s, t, p});
  }
  return fx;
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<double> weibull_coefficients(std::size_t dims, double effect) {
  std::vector<double> beta(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    const double magnitude = std::max(0.2, 1.0 - 0.2 * static_cast<double>(i));
    beta[i] = effect * (i % 2 == 0 ? magnitude : -magnitude);
  }
  return beta;
}

Dataset synthetic_weibull(const WeibullSpec& spec) {
  if (spec.n == 0) throw ConfigError("synthetic data needs n >= 1");
  if (!(spec.shape > 0.0)) throw ConfigError("Weibull shape must be positive");
  if (spec.dims == 0) throw ConfigError("synthetic data needs at least one feature");
  if (!(spec.censor_rate >= 0.0 && spec.censor_rate < 1.0)) throw ConfigError("censor rate must lie in [0, 1)");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto beta = weibull_coefficients(spec.dims, spec.effect);

  Dataset data;
  data.features = Tensor({spec.n, spec.dims});
  std::vector<double> event_time(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double eta = 0.0;
    for (std::size_t c = 0; c < spec.dims; ++c) {
      data.features(i, c) = normal(rng);
      eta += beta[c] * data.features(i, c);
    }
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    event_time[i] = std::exp(eta) * std::pow(-std::log(u), 1.0 / spec.shape);
  }
  for (std::size_t c = 0; c < spec.dims; ++c) data.feature_names.push_back("x" + std::to_string(c));

  if (spec.censor_rate == 0.0) {
    data.times = event_time;
    data.events.assign(spec.n, 1);
  } else {
    // With C ~ U(0, c): P(C < T_i) = min(T_i, c) / c, decreasing in c.
    auto censored_fraction = [&](double c) {
      double s = 0.0;
      for (double t : event_time) s += std::min(t, c) / c;
      return s / static_cast<double>(spec.n);
    };
    double lo = 1e-12, hi = *std::max_element(event_time.begin(), event_time.end());
    while (censored_fraction(hi) > spec.censor_rate) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (censored_fraction(mid) > spec.censor_rate ? lo : hi) = mid;
    }
    std::uniform_real_distribution<double> censor(0.0, hi);
    for (std::size_t i = 0; i < spec.n; ++i) {
      double c = censor(rng);
      while (c <= 0.0) c = censor(rng);
      const bool observed = event_time[i] <= c;
      data.times.push_back(observed ? event_time[i] : c);
      data.events.push_back(observed ? 1 : 0);
    }
  }
  data.validate();
  return data;
}

}  // namespace survnet
