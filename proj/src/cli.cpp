#include "survnet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <sstream>

#include "survnet/data.hpp"
#include "survnet/error.hpp"
#include "survnet/kaplan_meier.hpp"
#include "survnet/metrics.hpp"
#include "survnet/models.hpp"
#include "survnet/training.hpp"

namespace survnet {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::uint64_t seed = 0;
  std::size_t grid_size = kDefaultGridSize;
  std::string config;
};

struct DataOptions {
  std::string path;
  std::vector<std::string> features;
  std::string event = "event";
  std::string time = "time";

  CsvSchema schema() const { return {features, event, time}; }
};

void add_common(CLI::App* app, CommonOptions& c) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--grid-size", c.grid_size, "Number of evaluation grid points")->check(CLI::Range(2, 100000));
  app->add_option("--config", c.config, "JSON file with option values")->check(CLI::ExistingFile);
}

void add_data(CLI::App* app, DataOptions& d) {
  app->add_option("--data", d.path, "CSV dataset (required)");
  app->add_option("--features", d.features, "Feature columns (default: all others)")->delimiter(',');
  app->add_option("--event-col", d.event, "Event column");
  app->add_option("--time-col", d.time, "Time column");
}

std::string option_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + option_value(e);
    return s;
  }
  return v.dump();
}

// Values from --config fill options that were not given on the command line.
void apply_config(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = app->get_option("--" + name);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("config file '" + path + "': unknown option '" + key + "'");
    }
    if (opt->count() > 0) continue;
    if (value.is_array() && opt->get_delimiter() == '\0') {
      for (const auto& e : value) opt->add_result(option_value(e));
    } else {
      opt->add_result(option_value(value));
    }
    opt->run_callback();
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string curve_csv(const std::vector<double>& t, const std::vector<double>& v, const char* column) {
  std::string s = std::string("t,") + column + "\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    s += format_double(t[i]) + "," + (std::isnan(v[i]) ? std::string() : format_double(v[i])) + "\n";
  }
  return s;
}

struct Series {
  std::string label;
  std::vector<double> t;
  std::vector<double> s;
  bool markers = false;
};

std::string svg_plot(const std::string& title, const std::vector<Series>& series, double t_max) {
  const double w = 480, h = 320, left = 50, right = 20, top = 30, bottom = 40;
  auto px = [&](double t) { return left + (w - left - right) * t / t_max; };
  auto py = [&](double s) { return top + (h - top - bottom) * (1.0 - s); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << w - right << "\" y2=\"" << py(0)
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left << "\" y2=\"" << py(1)
    << "\" stroke=\"black\"/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(tick) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
      << tick << "</text>\n";
    o << "<text x=\"" << px(tick * t_max) << "\" y=\"" << py(0) + 14
      << "\" text-anchor=\"middle\" font-size=\"10\">" << tick * t_max << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 6];
    if (s.markers) {
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        o << "<circle cx=\"" << px(s.t[i]) << "\" cy=\"" << py(s.s[i]) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.t.size(); ++i) o << px(s.t[i]) << ',' << py(std::clamp(s.s[i], 0.0, 1.0)) << ' ';
      o << "\"/>\n";
    }
    o << "<text x=\"" << w - right - 4 << "\" y=\"" << top + 12 * (k + 1) << "\" text-anchor=\"end\" font-size=\"10\" fill=\""
      << color << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::array<double, 3> parse_fractions(const std::vector<double>& f) {
  if (f.size() != 3) throw ConfigError("--fractions needs three values (train, validation, test)");
  return {f[0], f[1], f[2]};
}

const DatasetPreset& find_preset(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& p : dataset_presets()) {
    if (lower == p.name) return p;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::size_t part_index(const std::string& part) {
  if (part == "train") return 0;
  if (part == "validation") return 1;
  if (part == "test") return 2;
  throw ConfigError("unknown split part '" + part + "' (train, validation, test or all)");
}

struct LoadedModel {
  std::unique_ptr<SurvivalModel> model;
  std::optional<NormalizationStats> stats;
};

LoadedModel load_model_file(const std::string& path) {
  const auto j = read_json(path);
  LoadedModel out;
  try {
    out.model = model_from_json(j.at("model"));
    if (j.contains("normalization") && !j.at("normalization").is_null()) {
      out.stats = NormalizationStats::from_json(j.at("normalization"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file '" + path + "': " + e.what());
  }
  return out;
}

std::vector<double> grid_survival(const SurvivalModel& model, std::span<const double> x,
                                  const std::vector<double>& times) {
  Tensor rows({times.size(), x.size()});
  for (std::size_t r = 0; r < times.size(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) rows(r, c) = x[c];
  }
  return model.survival(times, rows);
}

// ---------------------------------------------------------------------------
// Subcommands

struct TrainOptions {
  DataOptions data;
  std::string model = "sumo_plusplus";
  std::string loss = "bce";
  std::string preset;
  std::optional<double> sigma_factor, bce_weight, gamma, weight_decay;
  double lr = 1e-3;
  double clip = 1.0;
  std::size_t batch_size = 8;
  std::size_t window = 512;
  std::size_t patience = 8192;
  std::size_t max_steps = 200000;
  std::size_t runs = 5;
  std::size_t split_seeds = 1000;
  std::vector<double> fractions{0.6, 0.2, 0.2};
  std::string split;
  std::string out;
};

int cmd_train(const TrainOptions& o, const CommonOptions& c, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  const Dataset data = normalize(load_csv(o.data.path, o.data.schema()));
  const SplitSpec split = o.split.empty()
                              ? km_balanced_split(data, parse_fractions(o.fractions), o.split_seeds, c.seed)
                              : SplitSpec::from_json(read_json(o.split));
  const Dataset train_set = data.subset(split.indices[0]);
  const Dataset val_set = data.subset(split.indices[1]);
  const TimeGrid grid{1.0, c.grid_size};

  TrainConfig cfg;
  cfg.loss = parse_loss_kind(o.loss);
  if (!o.preset.empty()) {
    const auto& p = find_preset(o.preset);
    cfg.loss_config.gamma = p.gamma;
    cfg.loss_config.bce_weight = p.bce_weight;
    cfg.loss_config.sigma_factor = p.sigma_factor;
    cfg.adam.weight_decay = cfg.loss == LossKind::kBce ? p.weight_decay_bce : p.weight_decay_sumo;
  }
  if (o.sigma_factor) cfg.loss_config.sigma_factor = *o.sigma_factor;
  if (o.bce_weight) cfg.loss_config.bce_weight = *o.bce_weight;
  if (o.gamma) cfg.loss_config.gamma = *o.gamma;
  if (o.weight_decay) cfg.adam.weight_decay = *o.weight_decay;
  cfg.adam.learning_rate = o.lr;
  cfg.adam.clip_norm = o.clip;
  cfg.batch_size = o.batch_size;
  cfg.window = o.window;
  cfg.patience = o.patience;
  cfg.max_steps = o.max_steps;
  cfg.seed = c.seed;
  cfg.validate();

  fs::create_directories(o.out);
  std::unique_ptr<SurvivalModel> model;
  MetricReport report;
  nlohmann::json runs = nlohmann::json::array();
  if (kind == ModelKind::kKaplanMeier) {
    auto km = std::make_unique<KaplanMeierModel>(data.dims());
    km->fit(train_set);
    report = evaluate_all(*km, val_set, grid);
    model = std::move(km);
  } else {
    Selection sel = multi_run_select(kind, ModelConfig{}, train_set, val_set, cfg, o.runs, grid);
    for (const auto& r : sel.runs) {
      runs.push_back({{"seed", r.seed},
                      {"diverged", r.diverged},
                      {"diagnostic", r.diagnostic},
                      {"steps", r.history.steps},
                      {"stop_reason", r.history.stop_reason},
                      {"validation_mean", r.diverged ? nlohmann::json(nullptr) : nlohmann::json(r.validation.mean)}});
    }
    const auto& best = sel.runs[sel.best_run];
    report = best.validation;
    std::ostringstream hist;
    best.history.write_csv(hist);
    write_file_atomic((fs::path(o.out) / "history.csv").string(), hist.str());
    model = std::move(sel.model);
  }

  nlohmann::json model_file = {{"model", model->to_json()},
                               {"normalization", data.stats->to_json()},
                               {"schema", o.data.schema().to_json()}};
  write_file_atomic((fs::path(o.out) / "model.json").string(), model_file.dump());
  write_file_atomic((fs::path(o.out) / "split.json").string(), split.to_json().dump(1));
  write_file_atomic((fs::path(o.out) / "validation_report.json").string(), report.to_json().dump(1));
  nlohmann::json resolved = {{"model", o.model}, {"train", cfg.to_json()}, {"grid", grid.to_json()},
                             {"runs", runs}};
  write_file_atomic((fs::path(o.out) / "run.json").string(), resolved.dump(1));
  out << "validation mean " << format_double(report.mean) << ", concordance "
      << format_double(report.concordance) << "\n";
  return 0;
}

struct EvaluateOptions {
  std::string model;
  DataOptions data;
  std::string split;
  std::string part = "all";
  std::string out;
  std::string curves;
};

int cmd_evaluate(const EvaluateOptions& o, const CommonOptions& c, std::ostream& out) {
  LoadedModel lm = load_model_file(o.model);
  Dataset data = load_csv(o.data.path, o.data.schema());
  if (lm.stats) data = apply_normalization(data, *lm.stats);
  if (o.part != "all") {
    if (o.split.empty()) throw ConfigError("--part requires --split");
    data = data.subset(SplitSpec::from_json(read_json(o.split)).indices[part_index(o.part)]);
  }
  const TimeGrid grid{1.0, c.grid_size};
  const Tensor survival = survival_matrix(*lm.model, data.features, grid);
  const MetricReport report = evaluate_matrix(survival, data.events, data.times, grid);
  if (!o.curves.empty()) {
    fs::create_directories(o.curves);
    for (const auto& curve : all_curves(survival, data.events, data.times, grid)) {
      write_file_atomic((fs::path(o.curves) / (curve.name + ".csv")).string(),
                        curve_csv(curve.times, curve.values, "score"));
    }
  }
  const std::string text = report.to_json().dump(1) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    write_file_atomic(o.out, text);
  }
  return 0;
}

struct SplitOptions {
  DataOptions data;
  std::vector<double> fractions{0.6, 0.2, 0.2};
  std::size_t split_seeds = 1000;
  std::string out;
};

int cmd_split(const SplitOptions& o, const CommonOptions& c, std::ostream& out) {
  const Dataset data = load_csv(o.data.path, o.data.schema());
  const SplitSpec split = km_balanced_split(data, parse_fractions(o.fractions), o.split_seeds, c.seed);
  fs::create_directories(o.out);
  write_file_atomic((fs::path(o.out) / "split.json").string(), split.to_json().dump(1));
  const char* names[] = {"train", "validation", "test"};
  for (std::size_t k = 0; k < 3; ++k) {
    std::string s;
    for (std::size_t i : split.indices[k]) s += std::to_string(i) + "\n";
    write_file_atomic((fs::path(o.out) / (std::string(names[k]) + ".txt")).string(), s);
  }
  out << "seed " << split.chosen_seed << ", discrepancy " << format_double(split.discrepancy) << "\n";
  return 0;
}

struct KmOptions {
  DataOptions data;
  std::string out;
};

int cmd_km(const KmOptions& o, const CommonOptions&, std::ostream& out) {
  const Dataset data = load_csv(o.data.path, o.data.schema());
  const KaplanMeierCurve curve = km_fit(data);
  std::vector<double> t{0.0}, s{1.0};
  t.insert(t.end(), curve.times.begin(), curve.times.end());
  s.insert(s.end(), curve.values.begin(), curve.values.end());
  const std::string text = curve_csv(t, s, "S");
  if (o.out.empty()) {
    out << text;
  } else {
    write_file_atomic(o.out, text);
  }
  return 0;
}

struct ToyOptions {
  std::size_t steps = 512;
  std::size_t repeats = 1;
  double lr = 1e-3;
  std::string out = "toy_out";
};

int cmd_toy(const ToyOptions& o, const CommonOptions& c, std::ostream& out) {
  if (o.repeats == 0) throw ConfigError("--repeats must be at least 1");
  const ToyFixture fx = toy_dataset();
  const auto weights = fx.weights();
  AdamOptions opts;
  opts.learning_rate = o.lr;
  opts.clip_norm = 0.0;
  const TimeGrid grid{1.0, c.grid_size};
  const auto times = grid.times();
  fs::create_directories(o.out);

  std::string losses = "model,repeat,seed,initial_loss,final_loss\n";
  nlohmann::json summary = nlohmann::json::object();
  for (ModelKind kind : {ModelKind::kSumo, ModelKind::kSumoPlus, ModelKind::kSumoPlusPlus}) {
    const std::string name = to_string(kind);
    std::vector<double> finals;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      const std::uint64_t seed = c.seed + r;
      auto model = build_model(kind, fx.features.cols(), ModelConfig{}, seed);
      auto& neural = dynamic_cast<NeuralSurvivalModel&>(*model);
      const auto trace = fit_points(neural, fx.features, fx.points, weights, o.steps, opts);
      finals.push_back(trace.back());
      losses += name + "," + std::to_string(r) + "," + std::to_string(seed) + "," + format_double(trace.front()) +
                "," + format_double(trace.back()) + "\n";
      if (r != 0) continue;

      nlohmann::json initial = nlohmann::json::array();
      std::vector<Series> plot;
      for (std::size_t k = 0; k < fx.samples(); ++k) {
        const auto x = fx.features.row_span(k);
        const auto s = grid_survival(*model, x, times);
        initial.push_back(s.front());
        write_file_atomic((fs::path(o.out) / (name + "_sample" + std::to_string(k) + ".csv")).string(),
                          curve_csv(times, s, "S"));
        plot.push_back({"sample " + std::to_string(k), times, s, false});
      }
      for (std::size_t k = 0; k < fx.samples(); ++k) {
        Series pts{"", {}, {}, true};
        for (const auto& p : fx.points_of(k)) {
          pts.t.push_back(p.time);
          pts.s.push_back(p.survival);
        }
        plot.push_back(pts);
      }
      write_file_atomic((fs::path(o.out) / (name + ".svg")).string(), svg_plot(name, plot, 1.0));
      summary[name]["final_loss"] = trace.back();
      summary[name]["initial_survival"] = initial;
    }
    std::vector<double> sorted = finals;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    summary[name]["median_final_loss"] = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    summary[name]["final_losses"] = finals;
    out << name << " final loss " << format_double(finals.front()) << "\n";
  }
  write_file_atomic((fs::path(o.out) / "final_losses.csv").string(), losses);
  write_file_atomic((fs::path(o.out) / "summary.json").string(), summary.dump(1));
  return 0;
}

struct CurvesOptions {
  std::string model;
  DataOptions data;
  std::vector<std::size_t> samples{0};
  std::string out = "curves_out";
};

int cmd_curves(const CurvesOptions& o, const CommonOptions& c, std::ostream& out) {
  LoadedModel lm = load_model_file(o.model);
  Dataset data = load_csv(o.data.path, o.data.schema());
  if (lm.stats) data = apply_normalization(data, *lm.stats);
  const TimeGrid grid{1.0, c.grid_size};
  const auto times = grid.times();
  for (std::size_t i : o.samples) {
    if (i >= data.size()) throw ContractError("sample index " + std::to_string(i) + " is out of range");
  }
  fs::create_directories(o.out);
  std::vector<Series> plot;
  for (std::size_t i : o.samples) {
    const auto s = grid_survival(*lm.model, data.features.row_span(i), times);
    write_file_atomic((fs::path(o.out) / ("sample" + std::to_string(i) + ".csv")).string(),
                      curve_csv(times, s, "S"));
    plot.push_back({"sample " + std::to_string(i), times, s, false});
  }
  write_file_atomic((fs::path(o.out) / "curves.svg").string(),
                    svg_plot(to_string(lm.model->kind()), plot, 1.0));
  out << "wrote " << o.samples.size() << " curves to " << o.out << "\n";
  return 0;
}

}  // namespace

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets{
      {"gbsg2", 2.70, 0.71, 0.82, 0.005, 0.020},  {"recur", 0.87, 0.85, 0.96, 0.001, 0.001},
      {"nki", 5.47, 0.97, 0.98, 0.0, 0.0},        {"lymph", 3.44, 0.86, 0.79, 0.004, 0.002},
      {"covid", 2.49, 0.92, 0.71, 0.0, 0.002},    {"clocks", 9.39, 0.91, 0.26, 0.0, 0.0},
      {"california", 0.89, 0.53, 0.50, 0.009, 0.005},
  };
  return presets;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp + "'");
    f << content;
    f.flush();
    if (!f) throw Error("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monotone neural survival models: training, evaluation and data tools", "survnet"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonOptions common;

  TrainOptions train_o;
  auto* train_cmd = app.add_subcommand("train", "Fit a model on a CSV dataset");
  add_common(train_cmd, common);
  add_data(train_cmd, train_o.data);
  train_cmd->add_option("--model", train_o.model, "km, sumo, sumo_plus, sumo_plusplus, cox_nn, cox_deep_nn, ctx_nn");
  train_cmd->add_option("--loss", train_o.loss, "bce or sumo");
  train_cmd->add_option("--preset", train_o.preset, "Dataset hyperparameter preset");
  train_cmd->add_option("--sigma-factor", train_o.sigma_factor);
  train_cmd->add_option("--bce-weight", train_o.bce_weight);
  train_cmd->add_option("--gamma", train_o.gamma);
  train_cmd->add_option("--weight-decay", train_o.weight_decay, "Applied to Cox-like models only");
  train_cmd->add_option("--lr", train_o.lr);
  train_cmd->add_option("--clip", train_o.clip);
  train_cmd->add_option("--batch-size", train_o.batch_size);
  train_cmd->add_option("--window", train_o.window);
  train_cmd->add_option("--patience", train_o.patience);
  train_cmd->add_option("--max-steps", train_o.max_steps);
  train_cmd->add_option("--runs", train_o.runs, "Training runs for model selection");
  train_cmd->add_option("--split-seeds", train_o.split_seeds);
  train_cmd->add_option("--fractions", train_o.fractions)->delimiter(',')->expected(3);
  train_cmd->add_option("--split", train_o.split, "Existing split.json");
  train_cmd->add_option("--out", train_o.out, "Output directory (required)");

  EvaluateOptions eval_o;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on a CSV dataset");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--model", eval_o.model, "model.json from train (required)");
  add_data(eval_cmd, eval_o.data);
  eval_cmd->add_option("--split", eval_o.split);
  eval_cmd->add_option("--part", eval_o.part, "train, validation, test or all");
  eval_cmd->add_option("--out", eval_o.out, "Report path (default: stdout)");
  eval_cmd->add_option("--curves", eval_o.curves, "Directory for per-score curve CSVs");

  SplitOptions split_o;
  auto* split_cmd = app.add_subcommand("split", "Kaplan-Meier balanced train/validation/test split");
  add_common(split_cmd, common);
  add_data(split_cmd, split_o.data);
  split_cmd->add_option("--fractions", split_o.fractions)->delimiter(',')->expected(3);
  split_cmd->add_option("--split-seeds", split_o.split_seeds);
  split_cmd->add_option("--out", split_o.out, "Output directory (required)");

  KmOptions km_o;
  auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier curve of a CSV dataset");
  add_common(km_cmd, common);
  add_data(km_cmd, km_o.data);
  km_cmd->add_option("--out", km_o.out, "CSV path (default: stdout)");

  ToyOptions toy_o;
  auto* toy_cmd = app.add_subcommand("toy", "Fit SuMo, SuMo+ and SuMo++ to the toy curves");
  add_common(toy_cmd, common);
  toy_cmd->add_option("--steps", toy_o.steps);
  toy_cmd->add_option("--repeats", toy_o.repeats);
  toy_cmd->add_option("--lr", toy_o.lr);
  toy_cmd->add_option("--out", toy_o.out);

  CurvesOptions curves_o;
  auto* curves_cmd = app.add_subcommand("curves", "Export S(t|x) of selected samples");
  add_common(curves_cmd, common);
  curves_cmd->add_option("--model", curves_o.model, "model.json from train (required)");
  add_data(curves_cmd, curves_o.data);
  curves_cmd->add_option("--samples", curves_o.samples)->delimiter(',');
  curves_cmd->add_option("--out", curves_o.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    apply_config(cmd, common.config);
    const std::map<CLI::App*, std::vector<std::string>> required{
        {train_cmd, {"--data", "--out"}}, {eval_cmd, {"--model", "--data"}}, {split_cmd, {"--data", "--out"}},
        {km_cmd, {"--data"}},             {curves_cmd, {"--model", "--data"}}};
    for (const char* name : {"--data", "--model", "--split"}) {
      CLI::Option* opt = cmd->get_option_no_throw(name);
      if (opt == nullptr || opt->count() == 0) continue;
      const std::string path = opt->as<std::string>();
      if (!fs::is_regular_file(path)) {
        err << "error: " << name << ": file does not exist: " << path << "\n\n" << cmd->help();
        return 2;
      }
    }
    if (auto it = required.find(cmd); it != required.end()) {
      for (const auto& name : it->second) {
        if (cmd->get_option(name)->count() == 0) {
          err << "error: " << name << " is required\n\n" << cmd->help();
          return 2;
        }
      }
    }
    if (cmd == train_cmd) return cmd_train(train_o, common, out);
    if (cmd == eval_cmd) return cmd_evaluate(eval_o, common, out);
    if (cmd == split_cmd) return cmd_split(split_o, common, out);
    if (cmd == km_cmd) return cmd_km(km_o, common, out);
    if (cmd == toy_cmd) return cmd_toy(toy_o, common, out);
    if (cmd == curves_cmd) return cmd_curves(curves_o, common, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace survnet
