#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"
#include "survnet/data.hpp"
#include "survnet/error.hpp"
#include "survnet/metrics.hpp"

using namespace survnet;

namespace {

// Area under the ROC polyline traced by sweeping the threshold over all distinct scores.
double roc_sweep(const std::vector<double>& p, const std::vector<int>& l) {
  std::vector<double> th(p.begin(), p.end());
  th.push_back(std::numeric_limits<double>::infinity());
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double pos = 0, neg = 0;
  for (int v : l) (v ? pos : neg) += 1;
  double area = 0, px = 0, py = 0;
  for (double c : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] >= c) (l[i] ? tp : fp) += 1;
    }
    const double x = fp / neg, y = tp / pos;
    area += (x - px) * (y + py) / 2;
    px = x;
    py = y;
  }
  return area;
}

Dataset make_data(std::vector<int> e, std::vector<double> t, std::size_t dims = 1) {
  Dataset d;
  d.features = Tensor({t.size(), dims});
  d.events = std::move(e);
  d.times = std::move(t);
  return d;
}

// Feature 0 carries the true event time; S(t|x) = 1 before it.
auto oracle_model() {
  return testing::function_model(1, [](double t, std::span<const double> x) { return t < x[0] ? 1.0 : 0.0; });
}

}  // namespace

TEST_CASE("labels_at examples") {
  const std::vector<int> e{1, 0, 1};
  const std::vector<double> t{1, 2, 3};
  const auto inc = labels_at(e, t, 2.5);
  CHECK(inc.index == std::vector<std::size_t>{0, 2});
  CHECK(inc.label == std::vector<int>{1, 0});

  const auto zero = labels_at(e, t, 0.0);
  CHECK(zero.index.size() == 3);
  for (int v : zero.label) CHECK(v == 0);

  const std::vector<int> cens{0, 0, 0};
  CHECK(labels_at(cens, t, 10.0).index.empty());
}

TEST_CASE("soft_confusion examples") {
  const auto a = soft_confusion(std::vector<double>{1, 0}, std::vector<int>{1, 0});
  CHECK(a.tp == 1);
  CHECK(a.tn == 1);
  CHECK(a.fp == 0);
  CHECK(a.fn == 0);
  const auto b = soft_confusion(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0});
  CHECK(b.tp == 0.5);
  CHECK(b.fp == 0.5);
  CHECK(b.fn == 0.5);
  CHECK(b.tn == 0.5);
  const auto c = soft_confusion(std::vector<double>{1, 1, 0, 0, 1}, std::vector<int>{1, 1, 0, 0, 1});
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK_THROWS_AS(soft_confusion(std::vector<double>{1}, std::vector<int>{1, 0}), ShapeError);
}

TEST_CASE("classifier_score examples") {
  const SoftConfusion perfect{3, 0, 0, 2};
  CHECK(classifier_score(perfect, ScoreKind::kAccuracy) == 1.0);
  CHECK(classifier_score(perfect, ScoreKind::kYouden) == 1.0);
  const SoftConfusion half{0.5, 0.5, 0.5, 0.5};
  CHECK(classifier_score(half, ScoreKind::kSensitivity) == 0.5);
  CHECK(classifier_score(half, ScoreKind::kSpecificity) == 0.5);
  CHECK(classifier_score(half, ScoreKind::kYouden) == 0.0);
  CHECK(f_beta(half, 1.0) == 0.5);
  const SoftConfusion empty{0, 0, 0, 4};
  CHECK(classifier_score(empty, ScoreKind::kPrecision) == 0.0);
  CHECK(classifier_score(empty, ScoreKind::kSensitivity) == 0.0);
  CHECK_THROWS(classifier_score(half, ScoreKind::kAuroc));
  CHECK_THROWS(parse_score("kappa"));
}

TEST_CASE("auc_scores examples") {
  CHECK(auc_scores(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}).auroc == 1.0);
  CHECK(auc_scores(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}).auroc == 0.5);
  CHECK(auc_scores(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}).auroc == 0.0);
  CHECK(std::isnan(auc_scores(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}).auroc));
  CHECK(std::isnan(auc_scores(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 0}).auprc));
  // Two positives ranked first and third: precision 1 then 2/3.
  CHECK(auc_scores(std::vector<double>{0.9, 0.8, 0.7}, std::vector<int>{1, 0, 1}).auprc ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("brier examples") {
  CHECK(brier(std::vector<double>{1, 0}, std::vector<int>{1, 0}) == 0.0);
  CHECK(brier(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.25);
  CHECK(brier(std::vector<double>{0.8}, std::vector<int>{1}) == doctest::Approx(0.04).epsilon(1e-14));
}

TEST_CASE("AUROC equals the threshold sweep on every label vector up to length 8") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> level(0, 4);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> l(n);
      for (std::size_t i = 0; i < n; ++i) l[i] = (mask >> i) & 1;
      const int pos = static_cast<int>(std::count(l.begin(), l.end(), 1));
      if (pos == 0 || pos == static_cast<int>(n)) continue;
      // Coarse levels so ties occur.
      std::vector<double> p(n);
      for (double& v : p) v = level(rng) / 4.0;
      CHECK(std::abs(auc_scores(p, l).auroc - roc_sweep(p, l)) <= 1e-12);
    }
  }
}

TEST_CASE("integrated_score examples") {
  const TimeGrid grid{1.0, 65};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.5);
  std::vector<double> t(40);
  for (double& v : t) v = u(rng);
  Dataset d = make_data(std::vector<int>(40, 1), t);
  for (std::size_t i = 0; i < 40; ++i) d.features(i, 0) = t[i];

  const auto oracle = oracle_model();
  for (const char* s : {"accuracy", "f1", "sensitivity", "specificity"}) {
    CAPTURE(s);
    CHECK(integrated_score(oracle, d, parse_score(s), grid) >= 1.0 - 1.0 / 65.0);
  }

  std::vector<int> e(40);
  for (std::size_t i = 0; i < 40; ++i) e[i] = i % 3 == 0 ? 0 : 1;
  Dataset cens = make_data(e, t);
  KaplanMeierModel km(1, km_fit(cens));
  CHECK(std::abs(integrated_score(km, cens, parse_score("balanced_accuracy"), grid) - 0.5) <= 0.02);

  auto one = testing::function_model(1, [](double, std::span<const double>) { return 1.0; });
  CHECK(integrated_score(one, cens, parse_score("sensitivity"), grid) == 0.0);

  Dataset all_cens = make_data(std::vector<int>(5, 0), {0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK_THROWS_AS(integrated_score(one, all_cens, parse_score("auroc"), grid), ContractError);
}

TEST_CASE("integrated scores are invariant under sample reordering") {
  std::mt19937_64 rng(9);
  const Dataset d = normalize(synthetic_weibull({120, 2, 1.5, 1.0, 0.3, 4}));
  auto m = testing::function_model(2, [](double t, std::span<const double> x) {
    return std::exp(-t * std::exp(0.7 * x[0] - 0.3 * x[1]));
  });
  std::vector<std::size_t> perm(d.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  const Dataset shuffled = d.subset(perm);
  const TimeGrid grid{1.0, 33};
  for (const auto& s : report_scores()) {
    CAPTURE(s.name());
    CHECK(integrated_score(m, d, s, grid) == doctest::Approx(integrated_score(m, shuffled, s, grid)).epsilon(1e-12));
  }
}

TEST_CASE("Youden is sensitivity plus specificity minus one") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const SoftConfusion c{u(rng), u(rng), u(rng), u(rng)};
    CHECK(classifier_score(c, ScoreKind::kYouden) ==
          classifier_score(c, ScoreKind::kSensitivity) + classifier_score(c, ScoreKind::kSpecificity) - 1.0);
    CHECK(c.total() == doctest::Approx(c.tp + c.fp + c.fn + c.tn));
  }
}

TEST_CASE("concordance examples") {
  const TimeGrid grid{1.0, 65};
  const std::vector<double> t{0.1, 0.3, 0.5, 0.7, 0.9};
  Dataset d = make_data(std::vector<int>(5, 1), t);
  KaplanMeierModel km(1, km_fit(d));
  CHECK(concordance_rmst(km, d, grid) == 0.5);

  // Larger feature, longer predicted survival; features ordered opposite to the times.
  for (std::size_t i = 0; i < 5; ++i) d.features(i, 0) = 1.0 - t[i];
  auto reversed = testing::function_model(1, [](double tt, std::span<const double> x) {
    return std::exp(-tt / (0.1 + x[0]));
  });
  CHECK(concordance_rmst(reversed, d, grid) == 0.0);

  const std::vector<double> r{1, 2};
  CHECK_THROWS_AS(concordance(r, std::vector<int>{0, 0}, std::vector<double>{1, 2}), ContractError);
}

TEST_CASE("concordance equals pair enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coarse(0, 5);
  std::bernoulli_distribution ev(0.7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 19;
    std::vector<double> risk(n), t(n);
    std::vector<int> e(n);
    for (std::size_t i = 0; i < n; ++i) {
      risk[i] = coarse(rng);
      t[i] = coarse(rng);
      e[i] = ev(rng);
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!(t[i] < t[j] && e[i] == 1)) continue;
        den += 1;
        num += risk[i] < risk[j] ? 1.0 : risk[i] == risk[j] ? 0.5 : 0.0;
      }
    }
    if (den == 0) {
      CHECK_THROWS_AS(concordance(risk, e, t), ContractError);
    } else {
      CHECK(std::abs(concordance(risk, e, t) - num / den) <= 1e-12);
    }
  }
}

TEST_CASE("rmst by the trapezoid rule") {
  const TimeGrid grid{2.0, 3};
  Tensor s = Tensor::matrix({{1.0, 0.5, 0.0}});
  CHECK(rmst(s, grid)[0] == doctest::Approx(0.5 * 1.5 + 0.5 * 0.5).epsilon(1e-15));
}

TEST_CASE("evaluate_all") {
  const TimeGrid grid{1.0, 65};
  std::vector<double> t;
  for (int i = 1; i <= 30; ++i) t.push_back(i / 31.0);
  Dataset d = make_data(std::vector<int>(30, 1), t);
  for (std::size_t i = 0; i < t.size(); ++i) d.features(i, 0) = t[i];
  const auto oracle = oracle_model();
  const MetricReport r = evaluate_all(oracle, d, grid);
  CHECK(r.scores.size() == 12);
  CHECK(r.mean >= 0.98);
  CHECK(r.concordance == 1.0);

  double total = r.concordance, lo = r.concordance;
  for (const auto& [name, v] : r.scores) {
    total += v;
    lo = std::min(lo, v);
  }
  CHECK(r.mean == doctest::Approx(total / 13.0).epsilon(1e-15));
  CHECK(r.min == lo);
  CHECK(MetricReport::from_json(nlohmann::json::parse(r.to_json().dump())) == r);

  const Dataset syn = normalize(synthetic_weibull({600, 3, 1.5, 1.0, 0.3, 2}));
  KaplanMeierModel km(3, km_fit(syn));
  const MetricReport k = evaluate_all(km, syn, grid);
  CHECK(k.concordance == 0.5);
  CHECK(k.mean >= 0.40);
  CHECK(k.mean <= 0.55);
}

TEST_CASE("TimeGrid") {
  const TimeGrid g{2.0, 5};
  const auto t = g.times();
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 2.0);
  double w = 0;
  for (double v : g.weights()) w += v;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS((TimeGrid{1.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((TimeGrid{0.0, 5}.validate()), ConfigError);
}
