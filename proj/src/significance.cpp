#include "covreg/significance.hpp"

#include <cmath>

#include "covreg/errors.hpp"

namespace covreg {

SignificanceConfig make_significance_config(double alpha, int l_max, Eigen::Index n,
                                            double target_std, double sigma2_hat) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("significance: alpha must lie in (0, 1/2)");
  if (l_max < 1) throw InputError("significance: l_max must be >= 1");
  if (sigma2_hat < 0.0) throw InputError("significance: sigma2 must be >= 0");
  SignificanceConfig cfg;
  cfg.alpha = alpha;
  cfg.l_max = l_max;
  cfg.beta_n = std::pow(static_cast<double>(n), alpha / 2.0 - 0.25);
  cfg.epsilon_n = cfg.beta_n * target_std;
  cfg.sigma2_hat = sigma2_hat;
  return cfg;
}

FilterResult coverage_filter(const std::vector<Rule>& rules, const Dataset& ds, double alpha,
                             int l_max) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("significance: alpha must lie in (0, 1/2)");
  const double threshold = std::pow(static_cast<double>(ds.n()), -alpha);

  FilterResult result;
  for (const Rule& rule : rules) {
    ScoredRule scored;
    scored.rule = rule;
    scored.mask = support_mask(rule, ds.features);
    scored.stats = rule_stats(scored.mask, ds.target);
    if (rule.length() > l_max) {
      result.discarded.emplace_back(std::move(scored), DiscardReason::kLength);
    } else if (!(scored.stats.coverage > threshold)) {
      result.discarded.emplace_back(std::move(scored), DiscardReason::kCoverage);
    } else {
      result.kept.push_back(std::move(scored));
    }
  }
  return result;
}

double estimate_noise_variance(const std::vector<ScoredRule>& rules) {
  bool found = false;
  double min_var = 0.0;
  for (const ScoredRule& r : rules) {
    if (r.stats.support_count < 2 || !r.stats.cond_var.has_value()) continue;
    if (!found || *r.stats.cond_var < min_var) {
      min_var = *r.stats.cond_var;
      found = true;
    }
  }
  if (!found) {
    throw PipelineError(
        "noise variance: no rule with support >= 2 after filtering; "
        "supply sigma2 externally");
  }
  return min_var;
}

RuleClass classify_one(const RuleStats& stats, double global_mean, const SignificanceConfig& cfg) {
  if (!stats.cond_mean.has_value() || !stats.cond_var.has_value()) return RuleClass::kNeither;
  const double excess = std::sqrt(std::max(*stats.cond_var - cfg.sigma2_hat, 0.0));
  if (cfg.beta_n * std::abs(*stats.cond_mean - global_mean) >= excess) {
    return RuleClass::kSignificant;
  }
  if (cfg.epsilon_n >= excess) return RuleClass::kInsignificant;
  return RuleClass::kNeither;
}

ClassifiedRules classify_rules(FilterResult filtered, const Dataset& ds,
                               const SignificanceConfig& cfg) {
  const double global_mean = ds.target.mean();
  ClassifiedRules out;
  out.discarded = std::move(filtered.discarded);
  for (ScoredRule& scored : filtered.kept) {
    switch (classify_one(scored.stats, global_mean, cfg)) {
      case RuleClass::kSignificant:
        out.significant.push_back(std::move(scored));
        break;
      case RuleClass::kInsignificant:
        out.insignificant.push_back(std::move(scored));
        break;
      case RuleClass::kNeither:
        out.discarded.emplace_back(std::move(scored), DiscardReason::kNeither);
        break;
    }
  }
  return out;
}

}  // namespace covreg
