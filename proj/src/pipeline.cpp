#include "covreg/pipeline.hpp"

#include "covreg/errors.hpp"
#include "covreg/selection.hpp"

namespace covreg {

FitOutcome fit_pipeline(const Dataset& train, const PipelineConfig& cfg) {
  cfg.generator.validate();
  if (cfg.l_max > train.d()) {
    throw InputError("pipeline: l_max exceeds the number of features");
  }

  std::vector<Rule> generated = generate_rules(train, cfg.generator);
  if (generated.empty()) throw PipelineError("pipeline: rule generation produced no rules");
  const std::size_t n_generated = generated.size();

  FilterResult filtered = coverage_filter(generated, train, cfg.alpha, cfg.l_max);
  if (filtered.kept.empty()) {
    throw PipelineError("pipeline: no rule satisfies the coverage and length conditions");
  }

  const double sigma2 = cfg.sigma2_override.has_value()
                            ? *cfg.sigma2_override
                            : estimate_noise_variance(filtered.kept);

  const TargetStats stats = target_stats(train);
  const SignificanceConfig sig_cfg =
      make_significance_config(cfg.alpha, cfg.l_max, train.n(), stats.std, sigma2);

  ClassifiedRules classified = classify_rules(std::move(filtered), train, sig_cfg);

  SelectionConfig sel_cfg;
  sel_cfg.gamma = cfg.gamma;
  sel_cfg.sum_coverage_stop = cfg.sum_coverage_stop;
  Covering covering = select_covering(classified, train, sel_cfg);

  FitOutcome outcome;
  outcome.model.estimator = CoveringEstimator::fit(std::move(covering), train, cfg.fallback);
  outcome.model.meta.n = train.n();
  outcome.model.meta.d = train.d();
  outcome.model.meta.alpha = cfg.alpha;
  outcome.model.meta.gamma = cfg.gamma;
  outcome.model.meta.l_max = cfg.l_max;
  outcome.model.meta.sigma2_hat = sigma2;
  outcome.model.meta.beta_n = sig_cfg.beta_n;
  outcome.model.meta.epsilon_n = sig_cfg.epsilon_n;
  outcome.model.meta.seed = cfg.generator.seed;
  outcome.model.meta.generator = cfg.generator;
  outcome.model.meta.fallback = cfg.fallback;
  outcome.model.meta.feature_names = train.feature_names;
  outcome.model.meta.n_rules_generated = n_generated;
  outcome.classified = std::move(classified);
  outcome.significance = sig_cfg;
  outcome.n_rules_generated = n_generated;
  return outcome;
}

}  // namespace covreg
