#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covreg/pipeline.hpp"

namespace covreg {

using Predictor = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

// Mean squared prediction error on the test rows divided by the empirical
// (population) variance of the test target.
double normalized_mse(const Predictor& predict, const Dataset& test);

// Same ratio against the noiseless surface: mean of (truth - prediction)^2
// over Var(truth).
double normalized_mse_star(const Predictor& predict, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& truth);

struct RunReport {
  std::uint64_t seed = 0;
  std::size_t nb_rules = 0;
  int interpretability = 0;
  double coverage = 0.0;  // union coverage on the training sample
  double mse = 0.0;
  std::optional<double> mse_star;
  double sigma2_hat = 0.0;
  std::vector<bool> variable_occurrence;  // feature appears in >= 1 selected rule
  bool h1_pass = false;                   // strict coverage condition on every rule
  bool cardinality_pass = false;          // #C_n <= n^alpha / (1 - gamma)
  double timing_seconds = 0.0;
};

struct Aggregate {
  double mean = 0.0, std = 0.0, min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

struct StudyReport {
  std::vector<RunReport> runs;
  std::map<std::string, Aggregate> metrics;  // nb_rules, interpretability, coverage, mse, mse_star
  std::vector<double> variable_frequency;    // share of runs touching each feature
};

// Recomputes the aggregate block from the stored per-run reports.
StudyReport finalize_study(std::vector<RunReport> runs, Eigen::Index d);

struct SyntheticStudyConfig {
  int runs = 10;
  Eigen::Index n = 5000;
  Eigen::Index d = 100;
  Eigen::Index test_size = 10000;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
};

// Fresh train and test draws per run (test reuses the train noise level),
// full pipeline, normalized MSE and MSE* plus variable occurrences.
StudyReport run_synthetic_study(const SyntheticStudyConfig& cfg);

struct RealStudyConfig {
  int executions = 20;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
};

// Seeded splits, one study per (dataset, generator method).
std::map<std::string, StudyReport> run_real_study(
    const std::vector<std::pair<std::string, Dataset>>& datasets, const RealStudyConfig& cfg,
    const std::vector<TreeMethod>& methods);

nlohmann::json study_to_json(const StudyReport& report);
std::string format_study_table(const std::string& title, const StudyReport& report);
void write_runs_csv(const StudyReport& report, const std::filesystem::path& path);

struct ExplainRow {
  std::string label;  // R1, R2, ...
  std::string conditions;
  RuleTag tag = RuleTag::kSignificant;
  double coverage = 0.0;
  double prediction = 0.0;  // rule conditional mean
  double std_dev = 0.0;     // sqrt of conditional variance
  double delta = 0.0;       // (cond_mean - E_n[Y]) / |E_n[Y]|, full precision
};

struct VariableSummary {
  std::string name;
  Aggregate stats;
};

struct ExplainReport {
  std::vector<ExplainRow> rows;
  bool all_significant = false;
  std::vector<VariableSummary> variables;  // target first, then used features
};

// Per-rule summary table; the variable
// block needs the training data and is skipped when absent.
ExplainReport explain_report(const Covering& covering,
                             const std::vector<std::string>& feature_names, double target_mean,
                             const Dataset* train = nullptr);

nlohmann::json explain_to_json(const ExplainReport& report);
std::string format_explain_table(const ExplainReport& report);

}  // namespace covreg
