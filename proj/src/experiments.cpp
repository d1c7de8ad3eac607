#include "covreg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "covreg/errors.hpp"
#include "covreg/parallel.hpp"

namespace covreg {

double normalized_mse(const Predictor& predict, const Dataset& test) {
  const TargetStats stats = target_stats(test);
  if (stats.variance <= 0.0) throw InputError("mse: test target variance is zero");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const double err = test.target[i] - predict(test.features.row(i));
    sum += err * err;
  }
  return sum / static_cast<double>(test.n()) / stats.variance;
}

double normalized_mse_star(const Predictor& predict, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (X.rows() != truth.size()) throw InputError("mse*: truth length mismatch");
  const double mean = truth.mean();
  const double var = (truth.array() - mean).square().sum() / static_cast<double>(truth.size());
  if (var <= 0.0) throw InputError("mse*: truth variance is zero");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double err = truth[i] - predict(X.row(i));
    sum += err * err;
  }
  return sum / static_cast<double>(X.rows()) / var;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  const auto n = static_cast<double>(values.size());
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());

  double sum = 0.0;
  for (const double v : values) sum += v;
  a.mean = sum / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / n);
  a.min = sorted.front();
  a.max = sorted.back();

  const auto quantile = [&](double p) {
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
  };
  a.q25 = quantile(0.25);
  a.q50 = quantile(0.50);
  a.q75 = quantile(0.75);
  return a;
}

namespace {

RunReport evaluate_run(const FitOutcome& outcome, const Dataset& test,
                       const Eigen::VectorXd* test_truth, std::uint64_t seed) {
  const CoveringEstimator& est = outcome.model.estimator;
  const Covering& covering = est.covering();

  RunReport report;
  report.seed = seed;
  report.nb_rules = covering.rules.size();
  const std::vector<Rule> rules = covering.rule_list();
  report.interpretability = interpretability_index(rules);
  report.coverage = covering.union_coverage;
  report.sigma2_hat = outcome.model.meta.sigma2_hat;

  const Predictor predictor = [&est](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return est.predict(x);
  };
  report.mse = normalized_mse(predictor, test);
  if (test_truth != nullptr) {
    report.mse_star = normalized_mse_star(predictor, test.features, *test_truth);
  }

  report.variable_occurrence.assign(static_cast<std::size_t>(outcome.model.meta.d), false);
  for (const Rule& r : rules) {
    for (const auto& [feature, iv] : r.conditions()) {
      report.variable_occurrence[static_cast<std::size_t>(feature)] = true;
    }
  }

  const double n_real = static_cast<double>(outcome.model.meta.n);
  const double floor_cov = std::pow(n_real, -outcome.model.meta.alpha);
  report.h1_pass = true;
  for (const SelectedRule& r : covering.rules) {
    if (!(r.stats.coverage > floor_cov)) report.h1_pass = false;
  }
  report.cardinality_pass =
      static_cast<double>(covering.rules.size()) <=
      std::pow(n_real, outcome.model.meta.alpha) / (1.0 - outcome.model.meta.gamma);
  return report;
}

}  // namespace

StudyReport finalize_study(std::vector<RunReport> runs, Eigen::Index d) {
  StudyReport report;
  report.variable_frequency.assign(static_cast<std::size_t>(d), 0.0);
  std::vector<double> nb, inter, cov, mse, mse_star;
  for (const RunReport& r : runs) {
    nb.push_back(static_cast<double>(r.nb_rules));
    inter.push_back(static_cast<double>(r.interpretability));
    cov.push_back(r.coverage);
    mse.push_back(r.mse);
    if (r.mse_star.has_value()) mse_star.push_back(*r.mse_star);
    for (std::size_t j = 0; j < r.variable_occurrence.size() && j < report.variable_frequency.size();
         ++j) {
      report.variable_frequency[j] += r.variable_occurrence[j] ? 1.0 : 0.0;
    }
  }
  if (!runs.empty()) {
    for (double& f : report.variable_frequency) f /= static_cast<double>(runs.size());
  }
  report.metrics["nb_rules"] = aggregate(nb);
  report.metrics["interpretability"] = aggregate(inter);
  report.metrics["coverage"] = aggregate(cov);
  report.metrics["mse"] = aggregate(mse);
  if (!mse_star.empty()) report.metrics["mse_star"] = aggregate(mse_star);
  report.runs = std::move(runs);
  return report;
}

StudyReport run_synthetic_study(const SyntheticStudyConfig& cfg) {
  if (cfg.runs < 1) throw InputError("study: runs must be >= 1");
  std::vector<RunReport> runs(static_cast<std::size_t>(cfg.runs));
  parallel_for(static_cast<std::size_t>(cfg.runs), [&](std::size_t k) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t train_seed = derive_seed(cfg.seed, 2 * k);
    const std::uint64_t test_seed = derive_seed(cfg.seed, 2 * k + 1);

    SyntheticSample train = friedman_synthetic(cfg.n, cfg.d, train_seed);
    SyntheticSample test = friedman_synthetic(cfg.test_size, cfg.d, test_seed, train.noise_sd);

    PipelineConfig pipe = cfg.pipeline;
    pipe.generator.seed = derive_seed(train_seed, 0xC0FFEE);
    const FitOutcome outcome = fit_pipeline(train.data, pipe);
    runs[k] = evaluate_run(outcome, test.data, &test.truth, train_seed);
    runs[k].timing_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return finalize_study(std::move(runs), cfg.d);
}

std::map<std::string, StudyReport> run_real_study(
    const std::vector<std::pair<std::string, Dataset>>& datasets, const RealStudyConfig& cfg,
    const std::vector<TreeMethod>& methods) {
  if (cfg.executions < 1) throw InputError("study: executions must be >= 1");
  std::map<std::string, StudyReport> out;
  for (const auto& [name, ds] : datasets) {
    for (const TreeMethod method : methods) {
      std::vector<RunReport> runs(static_cast<std::size_t>(cfg.executions));
      parallel_for(static_cast<std::size_t>(cfg.executions), [&, &ds = ds](std::size_t k) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t split_seed = derive_seed(cfg.seed, k);
        const auto [train, test] = train_test_split(ds, cfg.train_fraction, split_seed);

        PipelineConfig pipe = cfg.pipeline;
        pipe.generator.method = method;
        pipe.generator.seed = derive_seed(split_seed, 0xC0FFEE);
        const FitOutcome outcome = fit_pipeline(train, pipe);
        runs[k] = evaluate_run(outcome, test, nullptr, split_seed);
        runs[k].timing_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      out[name + "/" + to_string(method)] = finalize_study(std::move(runs), ds.d());
    }
  }
  return out;
}

namespace {

nlohmann::json aggregate_to_json(const Aggregate& a) {
  return nlohmann::json{{"mean", a.mean}, {"std", a.std}, {"min", a.min}, {"25%", a.q25},
                        {"50%", a.q50},   {"75%", a.q75}, {"max", a.max}};
}

}  // namespace

nlohmann::json study_to_json(const StudyReport& report) {
  nlohmann::json metrics;
  for (const auto& [name, agg] : report.metrics) metrics[name] = aggregate_to_json(agg);
  nlohmann::json runs = nlohmann::json::array();
  for (const RunReport& r : report.runs) {
    nlohmann::json run{{"seed", r.seed},
                       {"nb_rules", r.nb_rules},
                       {"interpretability", r.interpretability},
                       {"coverage", r.coverage},
                       {"mse", r.mse},
                       {"sigma2_hat", r.sigma2_hat},
                       {"h1_pass", r.h1_pass},
                       {"cardinality_pass", r.cardinality_pass},
                       {"timing_seconds", r.timing_seconds}};
    run["mse_star"] = r.mse_star.has_value() ? nlohmann::json(*r.mse_star) : nlohmann::json(nullptr);
    nlohmann::json occ = nlohmann::json::array();
    for (std::size_t j = 0; j < r.variable_occurrence.size(); ++j) {
      if (r.variable_occurrence[j]) occ.push_back(j);
    }
    run["variables_used"] = occ;
    runs.push_back(std::move(run));
  }
  return nlohmann::json{{"metrics", metrics},
                        {"variable_frequency", report.variable_frequency},
                        {"runs", runs}};
}

std::string format_study_table(const std::string& title, const StudyReport& report) {
  static const char* kRows[] = {"mean", "std", "min", "25%", "50%", "75%", "max"};
  static const char* kCols[] = {"nb_rules", "interpretability", "coverage", "mse", "mse_star"};

  std::ostringstream out;
  out << title << " (" << report.runs.size() << " runs)\n";
  out << std::left << std::setw(8) << "";
  for (const char* c : kCols) {
    if (report.metrics.count(c)) out << std::right << std::setw(18) << c;
  }
  out << '\n';
  const auto field = [](const Aggregate& a, int row) {
    switch (row) {
      case 0: return a.mean;
      case 1: return a.std;
      case 2: return a.min;
      case 3: return a.q25;
      case 4: return a.q50;
      case 5: return a.q75;
      default: return a.max;
    }
  };
  for (int i = 0; i < 7; ++i) {
    out << std::left << std::setw(8) << kRows[i];
    for (const char* c : kCols) {
      const auto it = report.metrics.find(c);
      if (it == report.metrics.end()) continue;
      out << std::right << std::setw(18) << std::fixed << std::setprecision(4)
          << field(it->second, i);
    }
    out << '\n';
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

void write_runs_csv(const StudyReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "run,seed,nb_rules,interpretability,coverage,mse,mse_star,sigma2_hat\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < report.runs.size(); ++k) {
    const RunReport& r = report.runs[k];
    out << k << ',' << r.seed << ',' << r.nb_rules << ',' << r.interpretability << ','
        << r.coverage << ',' << r.mse << ',';
    if (r.mse_star.has_value()) out << *r.mse_star;
    out << ',' << r.sigma2_hat << '\n';
  }
}

namespace {

std::string format_bound(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string conditions_text(const Rule& rule, const std::vector<std::string>& names) {
  std::ostringstream s;
  bool first = true;
  for (const auto& [feature, iv] : rule.conditions()) {
    if (!first) s << "  AND  ";
    first = false;
    s << names.at(static_cast<std::size_t>(feature)) << " in [";
    if (std::isinf(iv.lo)) {
      s << "-inf";
    } else {
      s << format_bound(iv.lo);
    }
    s << ", ";
    if (std::isinf(iv.hi)) {
      s << "+inf";
    } else {
      s << format_bound(iv.hi);
    }
    s << "]";
  }
  if (first) s << "(all space)";
  return s.str();
}

}  // namespace

ExplainReport explain_report(const Covering& covering,
                             const std::vector<std::string>& feature_names, double target_mean,
                             const Dataset* train) {
  ExplainReport report;
  report.all_significant = true;
  std::vector<bool> used(feature_names.size(), false);

  int index = 1;
  for (const SelectedRule& r : covering.rules) {
    ExplainRow row;
    row.label = "R" + std::to_string(index++);
    row.conditions = conditions_text(r.rule, feature_names);
    row.tag = r.tag;
    if (r.tag == RuleTag::kInsignificant) report.all_significant = false;
    row.coverage = r.stats.coverage;
    row.prediction = r.stats.cond_mean.value_or(0.0);
    row.std_dev = r.stats.cond_var.has_value() ? std::sqrt(*r.stats.cond_var) : 0.0;
    row.delta = target_mean != 0.0 ? (row.prediction - target_mean) / std::abs(target_mean) : 0.0;
    report.rows.push_back(std::move(row));
    for (const auto& [feature, iv] : r.rule.conditions()) {
      used[static_cast<std::size_t>(feature)] = true;
    }
  }

  if (train != nullptr) {
    const auto column_summary = [](const std::string& name, const Eigen::VectorXd& col) {
      std::vector<double> values(col.data(), col.data() + col.size());
      return VariableSummary{name, aggregate(values)};
    };
    report.variables.push_back(column_summary("Y", train->target));
    for (std::size_t j = 0; j < used.size(); ++j) {
      if (used[j]) {
        report.variables.push_back(
            column_summary(feature_names[j], train->features.col(static_cast<Eigen::Index>(j))));
      }
    }
  }
  return report;
}

nlohmann::json explain_to_json(const ExplainReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ExplainRow& r : report.rows) {
    rows.push_back({{"rule", r.label},
                    {"conditions", r.conditions},
                    {"tag", r.tag == RuleTag::kSignificant ? "significant" : "insignificant"},
                    {"coverage", r.coverage},
                    {"prediction", r.prediction},
                    {"std", r.std_dev},
                    {"delta", r.delta}});
  }
  nlohmann::json vars = nlohmann::json::array();
  for (const VariableSummary& v : report.variables) {
    vars.push_back({{"name", v.name}, {"summary", aggregate_to_json(v.stats)}});
  }
  return nlohmann::json{{"rules", rows},
                        {"all_significant", report.all_significant},
                        {"variables", vars}};
}

std::string format_explain_table(const ExplainReport& report) {
  std::ostringstream out;
  std::size_t cond_width = 10;
  for (const ExplainRow& r : report.rows) cond_width = std::max(cond_width, r.conditions.size());
  cond_width = std::min<std::size_t>(cond_width, 60);

  out << std::left << std::setw(6) << "Rule" << std::setw(static_cast<int>(cond_width) + 2)
      << "Conditions" << std::right << std::setw(10) << "Coverage" << std::setw(12) << "Prediction"
      << std::setw(9) << "Std" << std::setw(8) << "Delta" << '\n';
  for (const ExplainRow& r : report.rows) {
    out << std::left << std::setw(6) << r.label << std::setw(static_cast<int>(cond_width) + 2)
        << r.conditions << std::right << std::fixed << std::setprecision(2) << std::setw(10)
        << r.coverage << std::setw(12) << r.prediction << std::setw(9) << r.std_dev
        << std::setprecision(1) << std::setw(8) << r.delta << '\n';
    out.unsetf(std::ios::fixed);
  }
  if (report.all_significant) out << "All rules are significant.\n";

  if (!report.variables.empty()) {
    out << '\n'
        << std::left << std::setw(12) << "" << std::right;
    for (const VariableSummary& v : report.variables) out << std::setw(12) << v.name;
    out << '\n';
    static const char* kRows[] = {"mean", "std", "min", "25%", "50%", "75%", "max"};
    for (int i = 0; i < 7; ++i) {
      out << std::left << std::setw(12) << kRows[i] << std::right << std::fixed
          << std::setprecision(2);
      for (const VariableSummary& v : report.variables) {
        const Aggregate& a = v.stats;
        const double vals[] = {a.mean, a.std, a.min, a.q25, a.q50, a.q75, a.max};
        out << std::setw(12) << vals[i];
      }
      out << '\n';
      out.unsetf(std::ios::fixed);
    }
  }
  return out.str();
}

}  // namespace covreg
