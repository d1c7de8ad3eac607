#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "covreg/dataset.hpp"
#include "covreg/rules.hpp"

namespace covreg {

struct SignificanceConfig {
  double alpha = 0.49;  // in (0, 1/2)
  int l_max = 3;
  double beta_n = 0.0;     // n^(alpha/2 - 1/4)
  double epsilon_n = 0.0;  // beta_n * s_n unless overridden
  double sigma2_hat = 0.0;
};

// Derives beta_n and epsilon_n from the sample size and the target's
// empirical standard deviation.
SignificanceConfig make_significance_config(double alpha, int l_max, Eigen::Index n,
                                            double target_std, double sigma2_hat);

enum class DiscardReason { kCoverage, kLength, kNeither };

struct ScoredRule {
  Rule rule;
  RuleStats stats;
  RowMask mask;
};

struct FilterResult {
  std::vector<ScoredRule> kept;
  std::vector<std::pair<ScoredRule, DiscardReason>> discarded;
};

// Keeps rules with Q_n(r) > n^(-alpha) (strict) and length <= l_max.
FilterResult coverage_filter(const std::vector<Rule>& rules, const Dataset& ds, double alpha,
                             int l_max);

// Minimum conditional variance over rules with support >= 2. Throws
// PipelineError telling the caller to supply sigma2 externally when no rule
// qualifies.
double estimate_noise_variance(const std::vector<ScoredRule>& rules);

enum class RuleClass { kSignificant, kInsignificant, kNeither };

// The two tests of the suitability definition:
//   significant:    beta_n * |E_n[Y|r] - E_n[Y]| >= sqrt((V_n(Y|r) - sigma2)+)
//   insignificant:  not significant and epsilon_n >= sqrt((V_n(Y|r) - sigma2)+)
RuleClass classify_one(const RuleStats& stats, double global_mean, const SignificanceConfig& cfg);

struct ClassifiedRules {
  std::vector<ScoredRule> significant;    // S_n, input order preserved
  std::vector<ScoredRule> insignificant;  // I_n, input order preserved
  std::vector<std::pair<ScoredRule, DiscardReason>> discarded;
};

ClassifiedRules classify_rules(FilterResult filtered, const Dataset& ds,
                               const SignificanceConfig& cfg);

}  // namespace covreg
