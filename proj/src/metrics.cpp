#include "survnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survnet/error.hpp"

namespace survnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

bool has_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int l : labels) (l == 1 ? pos : neg) = true;
  return pos && neg;
}

void check_lengths(std::span<const double> p, std::span<const int> labels) {
  if (p.size() != labels.size()) {
    throw ShapeError("probabilities and labels differ in length (" + std::to_string(p.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
}

// Fenwick tree over value ranks.
class CountTree {
 public:
  explicit CountTree(std::size_t n) : tree_(n + 1, 0.0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += 1.0;
  }
  // Number of inserted ranks < rank.
  double below(std::size_t rank) const {
    double s = 0.0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<double> tree_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Grid

void TimeGrid::validate() const {
  if (points < 2) throw ConfigError("time grid needs at least 2 points");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("time grid needs T_max > 0");
}

std::vector<double> TimeGrid::times() const {
  validate();
  std::vector<double> out(points);
  for (std::size_t j = 0; j < points; ++j) {
    out[j] = t_max * static_cast<double>(j) / static_cast<double>(points - 1);
  }
  out.back() = t_max;
  return out;
}

std::vector<double> TimeGrid::weights() const {
  validate();
  const double h = 1.0 / static_cast<double>(points - 1);
  std::vector<double> w(points, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

nlohmann::json TimeGrid::to_json() const { return {{"t_max", t_max}, {"points", points}}; }

TimeGrid TimeGrid::from_json(const nlohmann::json& j) {
  TimeGrid g{j.at("t_max").get<double>(), j.at("points").get<std::size_t>()};
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Labels and counts

Inclusion labels_at(std::span<const int> events, std::span<const double> times, double t) {
  if (events.size() != times.size()) throw ShapeError("events and times differ in length");
  Inclusion out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t) {
      out.index.push_back(i);
      out.label.push_back(0);
    } else if (events[i] == 1) {
      out.index.push_back(i);
      out.label.push_back(1);
    }
  }
  return out;
}

Inclusion labels_at(std::span<const Sample> samples, double t) {
  std::vector<int> e;
  std::vector<double> T;
  for (const auto& s : samples) {
    e.push_back(s.event);
    T.push_back(s.time);
  }
  return labels_at(e, T, t);
}

SoftConfusion soft_confusion(std::span<const double> p, std::span<const int> labels) {
  check_lengths(p, labels);
  SoftConfusion c;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double l = labels[k];
    c.tp += p[k] * l;
    c.fp += p[k] * (1.0 - l);
    c.fn += (1.0 - p[k]) * l;
    c.tn += (1.0 - p[k]) * (1.0 - l);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scores

std::string Score::name() const {
  switch (kind) {
    case ScoreKind::kAccuracy: return "accuracy";
    case ScoreKind::kBalancedAccuracy: return "balanced_accuracy";
    case ScoreKind::kAuprc: return "auprc";
    case ScoreKind::kAuroc: return "auroc";
    case ScoreKind::kFBeta: {
      if (beta == 0.5) return "f0.5";
      if (beta == 1.0) return "f1";
      if (beta == 2.0) return "f2";
      nlohmann::json b = beta;
      return "f" + b.dump();
    }
    case ScoreKind::kPrecision: return "precision";
    case ScoreKind::kSensitivity: return "sensitivity";
    case ScoreKind::kSpecificity: return "specificity";
    case ScoreKind::kYouden: return "youden";
    case ScoreKind::kInvertedBrier: return "inverted_brier";
  }
  return "?";
}

const std::vector<Score>& report_scores() {
  static const std::vector<Score> scores{
      {ScoreKind::kAccuracy},    {ScoreKind::kBalancedAccuracy}, {ScoreKind::kAuprc},
      {ScoreKind::kAuroc},       {ScoreKind::kFBeta, 0.5},       {ScoreKind::kFBeta, 1.0},
      {ScoreKind::kFBeta, 2.0},  {ScoreKind::kPrecision},        {ScoreKind::kSensitivity},
      {ScoreKind::kSpecificity}, {ScoreKind::kYouden},           {ScoreKind::kInvertedBrier},
  };
  return scores;
}

Score parse_score(const std::string& name) {
  for (const auto& s : report_scores()) {
    if (s.name() == name) return s;
  }
  if (name.size() > 1 && name[0] == 'f') {
    try {
      std::size_t used = 0;
      const double beta = std::stod(name.substr(1), &used);
      if (used == name.size() - 1 && beta > 0.0) return {ScoreKind::kFBeta, beta};
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown score '" + name + "'");
}

double f_beta(const SoftConfusion& c, double beta) {
  const double b2 = beta * beta;
  return safe_ratio((1.0 + b2) * c.tp, (1.0 + b2) * c.tp + b2 * c.fn + c.fp);
}

double classifier_score(const SoftConfusion& c, ScoreKind kind, double beta) {
  const double sens = safe_ratio(c.tp, c.tp + c.fn);
  const double spec = safe_ratio(c.tn, c.tn + c.fp);
  switch (kind) {
    case ScoreKind::kAccuracy: return safe_ratio(c.tp + c.tn, c.total());
    case ScoreKind::kBalancedAccuracy: return 0.5 * (sens + spec);
    case ScoreKind::kPrecision: return safe_ratio(c.tp, c.tp + c.fp);
    case ScoreKind::kSensitivity: return sens;
    case ScoreKind::kSpecificity: return spec;
    case ScoreKind::kFBeta: return f_beta(c, beta);
    case ScoreKind::kYouden: return sens + spec - 1.0;
    default: break;
  }
  throw ConfigError("score is not computed from a confusion matrix");
}

AucScores auc_scores(std::span<const double> p, std::span<const int> labels) {
  check_lengths(p, labels);
  if (!has_both_classes(labels)) return {};
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  double positives = 0.0;
  for (int l : labels) positives += l;
  const double negatives = static_cast<double>(n) - positives;

  // Mann-Whitney with mid-ranks.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && p[order[j]] == p[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank_sum += labels[order[k]] * mid;
    i = j;
  }
  AucScores out;
  out.auroc = (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);

  // Average precision, thresholds descending, tied scores as one step.
  double tp = 0.0, seen = 0.0, ap = 0.0;
  for (std::size_t i = n; i > 0;) {
    std::size_t j = i;
    double group_tp = 0.0;
    while (j > 0 && p[order[j - 1]] == p[order[i - 1]]) {
      group_tp += labels[order[j - 1]];
      --j;
    }
    tp += group_tp;
    seen += static_cast<double>(i - j);
    ap += (group_tp / positives) * (tp / seen);
    i = j;
  }
  out.auprc = ap;
  return out;
}

double brier(std::span<const double> p, std::span<const int> labels) {
  check_lengths(p, labels);
  if (p.empty()) return kNaN;
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k] - labels[k];
    s += d * d;
  }
  return s / static_cast<double>(p.size());
}

double score_at(std::span<const double> p, std::span<const int> labels, const Score& score) {
  check_lengths(p, labels);
  if (!has_both_classes(labels)) return kNaN;
  switch (score.kind) {
    case ScoreKind::kAuroc: return auc_scores(p, labels).auroc;
    case ScoreKind::kAuprc: return auc_scores(p, labels).auprc;
    case ScoreKind::kInvertedBrier: return brier(p, labels);
    default: return classifier_score(soft_confusion(p, labels), score.kind, score.beta);
  }
}

// ---------------------------------------------------------------------------
// Integration

Tensor survival_matrix(const SurvivalModel& model, const Tensor& x, const TimeGrid& grid) {
  const auto ts = grid.times();
  const std::size_t n = x.rows(), g = ts.size();
  Tensor rows({n * g, x.cols()});
  std::vector<double> t(n * g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      t[i * g + j] = ts[j];
      for (std::size_t c = 0; c < x.cols(); ++c) rows(i * g + j, c) = x(i, c);
    }
  }
  return Tensor({n, g}, model.survival(t, rows));
}

ScoreCurve score_curve(const Tensor& survival, std::span<const int> events, std::span<const double> times,
                       const TimeGrid& grid, const Score& score) {
  ScoreCurve curve{score.name(), grid.times(), {}};
  if (survival.rows() != times.size() || survival.cols() != curve.times.size()) {
    throw ShapeError("survival matrix is " + survival.shape().str() + ", expected " +
                     std::to_string(times.size()) + "x" + std::to_string(curve.times.size()));
  }
  std::vector<double> p;
  for (std::size_t j = 0; j < curve.times.size(); ++j) {
    const Inclusion inc = labels_at(events, times, curve.times[j]);
    p.clear();
    for (std::size_t i : inc.index) p.push_back(1.0 - survival(i, j));
    curve.values.push_back(score_at(p, inc.label, score));
  }
  return curve;
}

double integrate_curve(const ScoreCurve& curve, const TimeGrid& grid) {
  const auto w = grid.weights();
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (std::isnan(curve.values[j])) continue;
    num += w[j] * curve.values[j];
    den += w[j];
  }
  if (den == 0.0) throw ContractError("score '" + curve.name + "' is undefined at every grid time");
  const double v = num / den;
  return curve.name == "inverted_brier" ? 1.0 - v : v;
}

double integrated_score(const SurvivalModel& model, const Dataset& data, const Score& score,
                        const TimeGrid& grid) {
  const Tensor s = survival_matrix(model, data.features, grid);
  return integrate_curve(score_curve(s, data.events, data.times, grid, score), grid);
}

std::vector<double> rmst(const Tensor& survival, const TimeGrid& grid) {
  const auto w = grid.weights();
  if (survival.cols() != w.size()) throw ShapeError("survival matrix does not match the grid");
  std::vector<double> out(survival.rows(), 0.0);
  for (std::size_t i = 0; i < survival.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * survival(i, j);
    out[i] = acc * grid.t_max;
  }
  return out;
}

double concordance(std::span<const double> risk_rmst, std::span<const int> events,
                   std::span<const double> times) {
  const std::size_t n = times.size();
  if (risk_rmst.size() != n || events.size() != n) throw ShapeError("concordance inputs differ in length");

  // Compress RMST values to ranks so exact ties stay ties.
  std::vector<double> sorted(risk_rmst.begin(), risk_rmst.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), risk_rmst[i]) -
                                       sorted.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });

  CountTree tree(sorted.size());
  double inserted = 0.0, comparable = 0.0, credit = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && times[order[j]] == times[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t a = order[k];
      if (events[a] != 1) continue;
      const double below_or_equal = tree.below(rank[a] + 1);
      const double equal = below_or_equal - tree.below(rank[a]);
      comparable += inserted;
      credit += (inserted - below_or_equal) + 0.5 * equal;
    }
    for (std::size_t k = i; k < j; ++k) tree.add(rank[order[k]]);
    inserted += static_cast<double>(j - i);
    i = j;
  }
  if (comparable == 0.0) throw ContractError("no comparable pairs for concordance");
  return credit / comparable;
}

double concordance_rmst(const SurvivalModel& model, const Dataset& data, const TimeGrid& grid) {
  return concordance(rmst(survival_matrix(model, data.features, grid), grid), data.events, data.times);
}

// ---------------------------------------------------------------------------
// Reports

double MetricReport::score(const std::string& name) const {
  if (name == "concordance") return concordance;
  for (const auto& [k, v] : scores) {
    if (k == name) return v;
  }
  throw ContractError("report has no score '" + name + "'");
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [k, v] : scores) s[k] = v;
  return {{"scores", s}, {"concordance", concordance}, {"mean", mean}, {"min", min}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  const auto& s = j.at("scores");
  for (const auto& score : report_scores()) {
    const std::string name = score.name();
    if (!s.contains(name)) throw ParseError("metric report lacks score '" + name + "'");
    r.scores.emplace_back(name, s.at(name).get<double>());
  }
  r.concordance = j.at("concordance").get<double>();
  r.mean = j.at("mean").get<double>();
  r.min = j.at("min").get<double>();
  return r;
}

std::vector<ScoreCurve> all_curves(const Tensor& survival, std::span<const int> events,
                                   std::span<const double> times, const TimeGrid& grid) {
  std::vector<ScoreCurve> out;
  for (const auto& score : report_scores()) out.push_back(score_curve(survival, events, times, grid, score));
  return out;
}

MetricReport evaluate_matrix(const Tensor& survival, std::span<const int> events,
                             std::span<const double> times, const TimeGrid& grid) {
  MetricReport r;
  double sum = 0.0, lo = std::numeric_limits<double>::infinity();
  for (const auto& curve : all_curves(survival, events, times, grid)) {
    const double v = integrate_curve(curve, grid);
    r.scores.emplace_back(curve.name, v);
    sum += v;
    lo = std::min(lo, v);
  }
  r.concordance = concordance(rmst(survival, grid), events, times);
  sum += r.concordance;
  lo = std::min(lo, r.concordance);
  r.mean = sum / static_cast<double>(r.scores.size() + 1);
  r.min = lo;
  return r;
}

MetricReport evaluate_all(const SurvivalModel& model, const Dataset& data, const TimeGrid& grid) {
  return evaluate_matrix(survival_matrix(model, data.features, grid), data.events, data.times, grid);
}

}  // namespace survnet
