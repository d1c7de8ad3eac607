#pragma once

#include <optional>

#include "covreg/model_io.hpp"

namespace covreg {

struct PipelineConfig {
  GeneratorConfig generator;
  double alpha = 0.49;  // 1/2 - 1/100
  int l_max = 3;
  double gamma = 0.90;
  std::optional<double> sigma2_override;  // bypasses the min-variance estimate
  Fallback fallback = Fallback::kZero;
  bool sum_coverage_stop = false;
};

struct FitOutcome {
  FittedModel model;
  ClassifiedRules classified;  // for the diagnostics report
  SignificanceConfig significance;
  std::size_t n_rules_generated = 0;
};

// Rule generation, coverage/length filtering, noise-variance plug-in,
// significance split, greedy selection, cell-mean fit.
FitOutcome fit_pipeline(const Dataset& train, const PipelineConfig& cfg);

}  // namespace covreg
