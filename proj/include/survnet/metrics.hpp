#pragma once

// Time-integrated classifier scores. At time t every sample is a binary
// classification case: label 1 (dead) if T <= t with e = 1, label 0 (alive)
// if T > t, excluded if censored at or before t. The prediction is the death
// probability p = 1 - S(t|x). Scores use soft confusion counts and are
// averaged over [0, T_max] by the trapezoid rule.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/dataset.hpp"
#include "survnet/models.hpp"

namespace survnet {

inline constexpr std::size_t kDefaultGridSize = 65;

struct TimeGrid {
  double t_max = 1.0;
  std::size_t points = kDefaultGridSize;

  void validate() const;
  std::vector<double> times() const;
  // Trapezoid weights summing to 1.
  std::vector<double> weights() const;
  nlohmann::json to_json() const;
  static TimeGrid from_json(const nlohmann::json& j);
};

struct Inclusion {
  std::vector<std::size_t> index;
  std::vector<int> label;
};

Inclusion labels_at(std::span<const int> events, std::span<const double> times, double t);
Inclusion labels_at(std::span<const Sample> samples, double t);

struct SoftConfusion {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tn = 0.0;
  double total() const { return tp + fp + fn + tn; }
};

SoftConfusion soft_confusion(std::span<const double> p, std::span<const int> labels);

enum class ScoreKind {
  kAccuracy,
  kBalancedAccuracy,
  kAuprc,
  kAuroc,
  kFBeta,
  kPrecision,
  kSensitivity,
  kSpecificity,
  kYouden,
  kInvertedBrier,
};

struct Score {
  ScoreKind kind;
  double beta = 1.0;  // F-beta only
  std::string name() const;
};

// Scores in report order: accuracy, balanced_accuracy, auprc, auroc, f0.5, f1,
// f2, precision, sensitivity, specificity, youden, inverted_brier.
const std::vector<Score>& report_scores();
Score parse_score(const std::string& name);

// Confusion-based kinds only; degenerate denominators give 0.
double classifier_score(const SoftConfusion& c, ScoreKind kind, double beta = 1.0);
double f_beta(const SoftConfusion& c, double beta);

struct AucScores {
  double auroc = std::numeric_limits<double>::quiet_NaN();
  double auprc = std::numeric_limits<double>::quiet_NaN();
};
// NaN for single-class or empty labels.
AucScores auc_scores(std::span<const double> p, std::span<const int> labels);
double brier(std::span<const double> p, std::span<const int> labels);

// Score of one kind at one time; NaN when that time point is skipped
// (fewer than one sample of either class). Brier is returned un-inverted.
double score_at(std::span<const double> p, std::span<const int> labels, const Score& score);

// S(t_j | x_i) for all samples (rows) and grid times (columns).
Tensor survival_matrix(const SurvivalModel& model, const Tensor& x, const TimeGrid& grid);

struct ScoreCurve {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;  // NaN where skipped
};

ScoreCurve score_curve(const Tensor& survival, std::span<const int> events, std::span<const double> times,
                       const TimeGrid& grid, const Score& score);
double integrate_curve(const ScoreCurve& curve, const TimeGrid& grid);

double integrated_score(const SurvivalModel& model, const Dataset& data, const Score& score,
                        const TimeGrid& grid);

// Restricted mean survival time by the trapezoid rule over the grid.
std::vector<double> rmst(const Tensor& survival, const TimeGrid& grid);
// Pairs (i, j) with T_i < T_j and e_i = 1; concordant if RMST_i < RMST_j,
// ties count one half.
double concordance(std::span<const double> risk_rmst, std::span<const int> events,
                   std::span<const double> times);
double concordance_rmst(const SurvivalModel& model, const Dataset& data, const TimeGrid& grid);

struct MetricReport {
  std::vector<std::pair<std::string, double>> scores;  // report_scores() order
  double concordance = 0.0;
  double mean = 0.0;
  double min = 0.0;

  double score(const std::string& name) const;
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  bool operator==(const MetricReport&) const = default;
};

MetricReport evaluate_all(const SurvivalModel& model, const Dataset& data, const TimeGrid& grid);
// Same report from a precomputed survival matrix.
MetricReport evaluate_matrix(const Tensor& survival, std::span<const int> events,
                             std::span<const double> times, const TimeGrid& grid);
std::vector<ScoreCurve> all_curves(const Tensor& survival, std::span<const int> events,
                                   std::span<const double> times, const TimeGrid& grid);

}  // namespace survnet
