#include "covreg/selection.hpp"

#include <algorithm>

#include "covreg/errors.hpp"

namespace covreg {

std::vector<Rule> Covering::rule_list() const {
  std::vector<Rule> out;
  out.reserve(rules.size());
  for (const SelectedRule& r : rules) out.push_back(r.rule);
  return out;
}

namespace {

// Coverage argmax / variance argmin with canonical rule order as tiebreak.
std::size_t pick_max_coverage(const std::vector<const ScoredRule*>& pool) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < pool.size(); ++k) {
    const auto a = pool[k]->stats.support_count;
    const auto b = pool[best]->stats.support_count;
    if (a > b || (a == b && rule_less(pool[k]->rule, pool[best]->rule))) best = k;
  }
  return best;
}

std::size_t pick_min_variance(const std::vector<const ScoredRule*>& pool) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < pool.size(); ++k) {
    const double a = pool[k]->stats.cond_var.value();
    const double b = pool[best]->stats.cond_var.value();
    if (a < b || (a == b && rule_less(pool[k]->rule, pool[best]->rule))) best = k;
  }
  return best;
}

}  // namespace

Covering select_covering(const ClassifiedRules& classified, const Dataset& ds,
                         const SelectionConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw InputError("selection: gamma must lie in (0,1)");
  if (classified.significant.empty() && classified.insignificant.empty()) {
    throw PipelineError("selection: both the significant and insignificant sets are empty");
  }
  const auto n = static_cast<std::size_t>(ds.n());

  Covering covering;
  RowMask union_mask(n);
  std::size_t covered = 0;
  std::size_t coverage_sum = 0;  // sum of selected rules' support counts

  const auto stop = [&] {
    return cfg.sum_coverage_stop ? coverage_sum >= n : covered >= n;
  };

  const auto try_accept = [&](const ScoredRule& candidate, RuleTag tag) {
    const std::size_t own = candidate.stats.support_count;
    const std::size_t overlap = union_mask.overlap_count(candidate.mask);
    if (static_cast<double>(overlap) > cfg.gamma * static_cast<double>(own)) return;
    union_mask.unite(candidate.mask);
    covered = union_mask.count();
    coverage_sum += own;
    SelectedRule sel;
    sel.rule = candidate.rule;
    sel.tag = tag;
    sel.stats = candidate.stats;
    sel.acceptance_index = static_cast<int>(covering.rules.size());
    sel.coverage_at_acceptance = static_cast<double>(covered) / static_cast<double>(n);
    covering.rules.push_back(std::move(sel));
  };

  std::vector<const ScoredRule*> pool;
  pool.reserve(classified.significant.size());
  for (const ScoredRule& r : classified.significant) pool.push_back(&r);
  while (!stop() && !pool.empty()) {
    const std::size_t k = pick_max_coverage(pool);
    try_accept(*pool[k], RuleTag::kSignificant);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }

  pool.clear();
  for (const ScoredRule& r : classified.insignificant) pool.push_back(&r);
  while (!stop() && !pool.empty()) {
    const std::size_t k = pick_min_variance(pool);
    try_accept(*pool[k], RuleTag::kInsignificant);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }

  covering.union_coverage = static_cast<double>(covered) / static_cast<double>(n);
  return covering;
}

Redundancy redundancy_stats(const Covering& covering, const Dataset& ds) {
  if (covering.rules.empty()) throw InputError("redundancy: empty covering");
  std::vector<RowMask> masks;
  masks.reserve(covering.rules.size());
  for (const SelectedRule& r : covering.rules) masks.push_back(support_mask(r.rule, ds.features));

  Redundancy red;
  bool seen = false;
  for (std::size_t i = 0; i < static_cast<std::size_t>(ds.n()); ++i) {
    int active = 0;
    for (const RowMask& m : masks) active += m.test(i);
    if (active == 0) continue;
    if (!seen) {
      red.max_redundancy = red.min_redundancy = active;
      seen = true;
    } else {
      red.max_redundancy = std::max(red.max_redundancy, active);
      red.min_redundancy = std::min(red.min_redundancy, active);
    }
  }
  if (!seen) throw PipelineError("redundancy: no training point inside the covering union");
  return red;
}

}  // namespace covreg
