#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "covreg/diagnostics.hpp"
#include "covreg/errors.hpp"
#include "covreg/experiments.hpp"
#include "covreg/model_io.hpp"
#include "covreg/pipeline.hpp"

namespace {

using namespace covreg;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kPipelineError = 3;
constexpr int kSuitabilityError = 4;

struct CommonOptions {
  std::vector<std::string> data;
  std::string target = "y";
  std::string generator = "rf";
  double alpha = 0.49;
  double gamma = 0.90;
  int l_max = 3;
  int tree_size = 8;
  int max_rules = 4000;
  int n_trees = 300;
  double learning_rate = 0.1;
  double subsample = 0.5;
  int mtry = 0;
  std::optional<double> sigma2;
  std::uint64_t seed = 0;
  std::string model;
  std::string out;
  std::string fallback = "zero";
  bool sum_coverage_stop = false;
  int runs = 0;
  Eigen::Index test_size = 10000;
  std::string config_path;
};

// key=value lines, same keys as the long flags; values never override an
// explicitly passed flag.
void apply_config_file(const CLI::App* cmd, CommonOptions& o, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config: expected key=value at line " + std::to_string(line_no));
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const std::string flag = "--" + key;
    if (cmd->get_option_no_throw(flag) == nullptr) {
      throw InputError("config: unknown key '" + key + "' at line " + std::to_string(line_no));
    }
    if (cmd->count(flag) > 0) continue;  // flags win

    try {
      if (key == "generator") o.generator = value;
      else if (key == "target") o.target = value;
      else if (key == "alpha") o.alpha = std::stod(value);
      else if (key == "gamma") o.gamma = std::stod(value);
      else if (key == "l-max") o.l_max = std::stoi(value);
      else if (key == "tree-size") o.tree_size = std::stoi(value);
      else if (key == "max-rules") o.max_rules = std::stoi(value);
      else if (key == "n-trees") o.n_trees = std::stoi(value);
      else if (key == "learning-rate") o.learning_rate = std::stod(value);
      else if (key == "subsample") o.subsample = std::stod(value);
      else if (key == "mtry") o.mtry = std::stoi(value);
      else if (key == "sigma2") o.sigma2 = std::stod(value);
      else if (key == "seed") o.seed = std::stoull(value);
      else if (key == "fallback") o.fallback = value;
      else if (key == "runs") o.runs = std::stoi(value);
      else if (key == "test-size") o.test_size = std::stoll(value);
      else throw InputError("config: key '" + key + "' is not configurable");
    } catch (const std::invalid_argument&) {
      throw InputError("config: bad value '" + value + "' for key '" + key + "'");
    }
  }
}

void add_pipeline_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path,
                  "Config file with the same keys as the flags; flags win");
  cmd->add_option("--generator", o.generator, "Rule generator: rf, gb or sgb")
      ->check(CLI::IsMember({"rf", "gb", "sgb"}));
  cmd->add_option("--alpha", o.alpha, "Coverage exponent in (0, 1/2)");
  cmd->add_option("--gamma", o.gamma, "Selection overlap rate in (0,1)");
  cmd->add_option("--l-max", o.l_max, "Maximum rule length");
  cmd->add_option("--tree-size", o.tree_size, "Maximum leaves per tree");
  cmd->add_option("--max-rules", o.max_rules, "Cap on generated rules");
  cmd->add_option("--n-trees", o.n_trees, "Trees grown by the generator");
  cmd->add_option("--learning-rate", o.learning_rate, "Shrinkage for gb/sgb");
  cmd->add_option("--subsample", o.subsample, "Row fraction per tree for sgb");
  cmd->add_option("--mtry", o.mtry, "Features tried per split for rf (0 = ceil(d/3))");
  cmd->add_option("--sigma2", o.sigma2,
                  "Known noise variance; skips the min-rule-variance estimate");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--fallback", o.fallback, "Prediction on unpopulated cells: zero or mean")
      ->check(CLI::IsMember({"zero", "mean"}));
  cmd->add_flag("--sum-coverage-stop", o.sum_coverage_stop,
                "Stop selection on the literal coverage-sum test instead of the union");
}

PipelineConfig pipeline_config(const CommonOptions& o) {
  PipelineConfig cfg;
  cfg.generator.method = tree_method_from_string(o.generator);
  cfg.generator.tree_size = o.tree_size;
  cfg.generator.max_rules = o.max_rules;
  cfg.generator.n_trees = o.n_trees;
  cfg.generator.learning_rate = o.learning_rate;
  cfg.generator.subsample = o.subsample;
  cfg.generator.mtry = o.mtry;
  cfg.generator.seed = o.seed;
  cfg.alpha = o.alpha;
  cfg.l_max = o.l_max;
  cfg.gamma = o.gamma;
  cfg.sigma2_override = o.sigma2;
  cfg.fallback = o.fallback == "mean" ? Fallback::kGlobalMean : Fallback::kZero;
  cfg.sum_coverage_stop = o.sum_coverage_stop;
  return cfg;
}

std::string default_sibling(const std::string& base, const char* suffix) {
  return base + suffix;
}

int cmd_fit(const CommonOptions& o) {
  if (o.data.empty()) throw InputError("fit: --data is required");
  if (o.model.empty()) throw InputError("fit: --model output path is required");
  const Dataset train = load_csv(o.data.front(), o.target);
  const FitOutcome outcome = fit_pipeline(train, pipeline_config(o));

  save_model(outcome.model, o.model);
  const std::string diag_path =
      o.out.empty() ? default_sibling(o.model, ".diagnostics.json") : o.out;
  write_json(significance_report(outcome.classified, train.feature_names), diag_path);

  const Covering& cov = outcome.model.estimator.covering();
  const std::vector<Rule> rules = cov.rule_list();
  std::cout << "rules generated:   " << outcome.n_rules_generated << '\n'
            << "rules selected:    " << cov.rules.size() << '\n'
            << "interpretability:  " << interpretability_index(rules) << '\n'
            << "union coverage:    " << cov.union_coverage << '\n'
            << "sigma2_hat:        " << outcome.model.meta.sigma2_hat << '\n'
            << "model written to:  " << o.model << '\n'
            << "diagnostics:       " << diag_path << '\n';
  return kOk;
}

Eigen::MatrixXd load_feature_csv(const std::string& path, const FittedModel& model) {
  // The feature file may carry the target column too (e.g. the training
  // file); all model features must be present in the model's order.
  std::ifstream probe(path);
  if (!probe) throw InputError("csv: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(probe, header)) throw InputError("csv: empty file '" + path + "'");
  probe.close();

  std::vector<std::string> header_names;
  {
    std::istringstream ss(header);
    std::string field;
    while (std::getline(ss, field, ',')) {
      while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
      while (!field.empty() && field.front() == ' ') field.erase(field.begin());
      header_names.push_back(field);
    }
  }
  std::vector<std::string> expected = model.meta.feature_names;
  std::vector<std::string> present;
  for (const std::string& h : header_names) {
    if (std::find(expected.begin(), expected.end(), h) != expected.end()) present.push_back(h);
  }
  if (present != expected) {
    throw InputError("predict: feature columns do not match the model schema (need " +
                     std::to_string(expected.size()) + " features in training order)");
  }

  // Reuse the strict loader by treating the last model feature as pivot: load
  // with a synthetic pass keeps the code simple; parse directly instead.
  std::ifstream in(path);
  std::getline(in, header);
  std::vector<Eigen::Index> col_map;  // header position -> model feature index or -1
  for (const std::string& h : header_names) {
    const auto it = std::find(expected.begin(), expected.end(), h);
    col_map.push_back(it == expected.end() ? -1 : it - expected.begin());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row_no;
    std::istringstream ss(line);
    std::string field;
    std::vector<double> row(expected.size(), 0.0);
    std::size_t col = 0;
    while (std::getline(ss, field, ',')) {
      if (col >= col_map.size()) break;
      if (col_map[col] >= 0) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
          throw InputError("predict: non-numeric value at data row " + std::to_string(row_no) +
                           ", column '" + header_names[col] + "'");
        }
        row[static_cast<std::size_t>(col_map[col])] = value;
      }
      ++col;
    }
    if (col != header_names.size()) {
      throw InputError("predict: data row " + std::to_string(row_no) + " has " +
                       std::to_string(col) + " fields, expected " +
                       std::to_string(header_names.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("predict: no data rows in '" + path + "'");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(expected.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return X;
}

int cmd_predict(const CommonOptions& o) {
  if (o.model.empty()) throw InputError("predict: --model is required");
  if (o.data.empty()) throw InputError("predict: --data is required");
  const FittedModel model = load_model(o.model);
  const Eigen::MatrixXd X = load_feature_csv(o.data.front(), model);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw InputError("predict: cannot write '" + o.out + "'");
    out = &file;
  }
  (*out) << "prediction\n";
  char buf[64];
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double p = model.estimator.predict(X.row(i));
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p);
    out->write(buf, ptr - buf);
    (*out) << '\n';
  }
  return kOk;
}

int cmd_explain(const CommonOptions& o) {
  if (o.model.empty()) throw InputError("explain: --model is required");
  const FittedModel model = load_model(o.model);

  std::optional<Dataset> train;
  if (!o.data.empty()) train = load_csv(o.data.front(), o.target);

  const ExplainReport report =
      explain_report(model.estimator.covering(), model.meta.feature_names,
                     model.estimator.train_stats().mean, train ? &*train : nullptr);
  std::cout << format_explain_table(report);
  if (!o.out.empty()) write_json(explain_to_json(report), o.out);
  return kOk;
}

int cmd_diagnose(const CommonOptions& o, bool soft_fail) {
  if (o.model.empty()) throw InputError("diagnose: --model is required");
  if (o.data.empty()) throw InputError("diagnose: --data (training file) is required");
  const FittedModel model = load_model(o.model);
  const Dataset train = load_csv(o.data.front(), o.target);

  const SuitabilityReport report = diagnose(model, train);
  std::cout << format_suitability(report);
  if (!o.out.empty()) write_json(suitability_to_json(report), o.out);
  if (!report.all_pass && !soft_fail) return kSuitabilityError;
  return kOk;
}

int cmd_bench_synthetic(const CommonOptions& o, Eigen::Index n, Eigen::Index d,
                        const std::string& csv_path) {
  SyntheticStudyConfig cfg;
  cfg.runs = o.runs > 0 ? o.runs : 10;
  cfg.n = n;
  cfg.d = d;
  cfg.test_size = o.test_size;
  cfg.seed = o.seed;
  cfg.pipeline = pipeline_config(o);

  const StudyReport report = run_synthetic_study(cfg);
  std::cout << format_study_table("synthetic study", report);
  if (!o.out.empty()) write_json(study_to_json(report), o.out);
  if (!csv_path.empty()) write_runs_csv(report, csv_path);
  return kOk;
}

int cmd_bench_real(const CommonOptions& o, const std::vector<std::string>& generators) {
  if (o.data.empty()) throw InputError("bench-real: --data is required (repeatable)");
  std::vector<std::pair<std::string, Dataset>> datasets;
  for (const std::string& path : o.data) {
    datasets.emplace_back(std::filesystem::path(path).stem().string(), load_csv(path, o.target));
  }
  RealStudyConfig cfg;
  cfg.executions = o.runs > 0 ? o.runs : 20;
  cfg.seed = o.seed;
  cfg.pipeline = pipeline_config(o);

  std::vector<TreeMethod> methods;
  for (const std::string& g : generators) methods.push_back(tree_method_from_string(g));

  const auto reports = run_real_study(datasets, cfg, methods);
  nlohmann::json all;
  for (const auto& [key, report] : reports) {
    std::cout << format_study_table(key, report) << '\n';
    all[key] = study_to_json(report);
  }
  if (!o.out.empty()) write_json(all, o.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable covering-based regression"};
  app.require_subcommand(1);

  CommonOptions o;
  bool soft_fail = false;
  Eigen::Index synth_n = 5000;
  Eigen::Index synth_d = 100;
  std::string runs_csv;
  std::vector<std::string> generators{"rf", "gb", "sgb"};

  auto* fit = app.add_subcommand("fit", "Fit a covering model on a CSV training file");
  fit->add_option("--data", o.data, "Training CSV")->required();
  fit->add_option("--target", o.target, "Target column name");
  fit->add_option("--model", o.model, "Output model JSON path")->required();
  fit->add_option("--out", o.out, "Significance diagnostics JSON path");
  add_pipeline_flags(fit, o);

  auto* predict = app.add_subcommand("predict", "Predict with a saved model");
  predict->add_option("--model", o.model, "Model JSON")->required();
  predict->add_option("--data", o.data, "Feature CSV (schema must match)")->required();
  predict->add_option("--out", o.out, "Predictions CSV (stdout when omitted)");

  auto* explain = app.add_subcommand("explain", "Print the selected-rule table");
  explain->add_option("--model", o.model, "Model JSON")->required();
  explain->add_option("--data", o.data, "Training CSV for the variable summary block");
  explain->add_option("--target", o.target, "Target column name");
  explain->add_option("--out", o.out, "Explain report JSON path");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Check suitability conditions empirically");
  diagnose_cmd->add_option("--model", o.model, "Model JSON")->required();
  diagnose_cmd->add_option("--data", o.data, "Training CSV")->required();
  diagnose_cmd->add_option("--target", o.target, "Target column name");
  diagnose_cmd->add_option("--out", o.out, "Suitability report JSON path");
  diagnose_cmd->add_flag("--soft-fail", soft_fail, "Exit 0 even when a check fails");

  auto* bench_syn = app.add_subcommand("bench-synthetic", "Monte-Carlo study on synthetic data");
  bench_syn->add_option("--runs", o.runs, "Number of simulations (default 10)");
  bench_syn->add_option("--n", synth_n, "Training sample size");
  bench_syn->add_option("--d", synth_d, "Feature dimension (>= 8)");
  bench_syn->add_option("--test-size", o.test_size, "Test points per run");
  bench_syn->add_option("--out", o.out, "Aggregate report JSON path");
  bench_syn->add_option("--runs-csv", runs_csv, "Per-run CSV path");
  add_pipeline_flags(bench_syn, o);

  auto* bench_real = app.add_subcommand("bench-real", "Repeated-split study on CSV datasets");
  bench_real->add_option("--data", o.data, "Dataset CSV (repeatable)")->required();
  bench_real->add_option("--target", o.target, "Target column name");
  bench_real->add_option("--runs", o.runs, "Executions per dataset (default 20)");
  bench_real->add_option("--generators", generators, "Subset of rf gb sgb");
  bench_real->add_option("--out", o.out, "Aggregate report JSON path");
  add_pipeline_flags(bench_real, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!o.config_path.empty()) {
      apply_config_file(app.get_subcommands().front(), o, o.config_path);
    }
    if (fit->parsed()) return cmd_fit(o);
    if (predict->parsed()) return cmd_predict(o);
    if (explain->parsed()) return cmd_explain(o);
    if (diagnose_cmd->parsed()) return cmd_diagnose(o, soft_fail);
    if (bench_syn->parsed()) return cmd_bench_synthetic(o, synth_n, synth_d, runs_csv);
    if (bench_real->parsed()) return cmd_bench_real(o, generators);
  } catch (const covreg::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const covreg::PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << '\n';
    return kPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPipelineError;
  }
  return kOk;
}
