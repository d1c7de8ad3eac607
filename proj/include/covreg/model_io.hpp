#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "covreg/estimator.hpp"
#include "covreg/generators.hpp"
#include "covreg/significance.hpp"

namespace covreg {

// Interchange format for a single rule: array of {feature, lo, hi} objects,
// +-inf encoded as null bounds.
nlohmann::json rule_to_json(const Rule& rule, const std::vector<std::string>& feature_names);
Rule rule_from_json(const nlohmann::json& conditions,
                    const std::vector<std::string>& feature_names);

nlohmann::json stats_to_json(const RuleStats& stats);
RuleStats stats_from_json(const nlohmann::json& j);

nlohmann::json covering_to_json(const Covering& covering,
                                const std::vector<std::string>& feature_names);
Covering covering_from_json(const nlohmann::json& j, const std::vector<std::string>& feature_names);

struct ModelMetadata {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  double alpha = 0.49;
  double gamma = 0.90;
  int l_max = 3;
  double sigma2_hat = 0.0;
  double beta_n = 0.0;
  double epsilon_n = 0.0;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  Fallback fallback = Fallback::kZero;
  std::vector<std::string> feature_names;
  std::size_t n_rules_generated = 0;
};

struct FittedModel {
  ModelMetadata meta;
  CoveringEstimator estimator;
};

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

// Byte-stable: sorted keys, fixed indentation, shortest round-trip doubles.
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

// Per-rule significance diagnostics: {conditions, coverage, mean, var,
// class in {S, I, discarded}, reason}.
nlohmann::json significance_report(const ClassifiedRules& classified,
                                   const std::vector<std::string>& feature_names);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace covreg
