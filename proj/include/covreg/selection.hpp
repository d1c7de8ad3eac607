#pragma once

#include <vector>

#include "covreg/dataset.hpp"
#include "covreg/significance.hpp"

namespace covreg {

struct SelectionConfig {
  double gamma = 0.90;  // in (0,1)
  // Literal pseudo-code loop test sums the coverages of the selected rules;
  // the default measures the union instead.
  bool sum_coverage_stop = false;
};

enum class RuleTag { kSignificant, kInsignificant };

struct SelectedRule {
  Rule rule;
  RuleTag tag = RuleTag::kSignificant;
  RuleStats stats;
  int acceptance_index = 0;
  double coverage_at_acceptance = 0.0;  // union coverage right after acceptance
};

struct Covering {
  std::vector<SelectedRule> rules;  // acceptance order; significant first
  double union_coverage = 0.0;      // Q_n of the union on the training sample

  std::vector<Rule> rule_list() const;
};

// Greedy quasi-covering extraction: significant rules by decreasing
// coverage, then insignificant rules by increasing conditional variance; a
// candidate is accepted iff its overlap with the current union is at most
// gamma times its own coverage. Stops once the union covers every training
// row (exact row counting).
Covering select_covering(const ClassifiedRules& classified, const Dataset& ds,
                         const SelectionConfig& cfg);

struct Redundancy {
  int max_redundancy = 0;  // M(C)
  int min_redundancy = 0;  // m(C), over training points inside the union
};

Redundancy redundancy_stats(const Covering& covering, const Dataset& ds);

}  // namespace covreg
