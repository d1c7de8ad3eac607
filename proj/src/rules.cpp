#include "covreg/rules.hpp"

#include <algorithm>

#include "covreg/errors.hpp"

namespace covreg {

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  const Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.lo > r.hi) return std::nullopt;
  return r;
}

Rule& Rule::constrain(int feature, Interval iv) {
  if (iv.lo > iv.hi) throw InputError("rule: interval with lo > hi");
  auto it = std::lower_bound(conditions_.begin(), conditions_.end(), feature,
                             [](const auto& c, int f) { return c.first < f; });
  if (it != conditions_.end() && it->first == feature) {
    const auto tightened = intersect(it->second, iv);
    if (!tightened) throw InputError("rule: constraint empties the interval");
    it->second = *tightened;
  } else {
    conditions_.insert(it, {feature, iv});
  }
  return *this;
}

bool Rule::contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  for (const auto& [feature, iv] : conditions_) {
    if (feature >= x.size()) throw InputError("rule: feature index out of range");
    if (!iv.contains(x[feature])) return false;
  }
  return true;
}

int Rule::max_feature_index() const {
  return conditions_.empty() ? -1 : conditions_.back().first;
}

bool rule_less(const Rule& a, const Rule& b) {
  const auto& ca = a.conditions();
  const auto& cb = b.conditions();
  const std::size_t m = std::min(ca.size(), cb.size());
  for (std::size_t k = 0; k < m; ++k) {
    if (ca[k].first != cb[k].first) return ca[k].first < cb[k].first;
    if (ca[k].second.lo != cb[k].second.lo) return ca[k].second.lo < cb[k].second.lo;
    if (ca[k].second.hi != cb[k].second.hi) return ca[k].second.hi < cb[k].second.hi;
  }
  return ca.size() < cb.size();
}

std::optional<Rule> rule_intersect(const Rule& a, const Rule& b) {
  Rule out = a;
  for (const auto& [feature, iv] : b.conditions()) {
    auto found = std::find_if(out.conditions().begin(), out.conditions().end(),
                              [f = feature](const auto& c) { return c.first == f; });
    if (found == out.conditions().end()) {
      out.constrain(feature, iv);
    } else {
      const auto tightened = intersect(found->second, iv);
      if (!tightened) return std::nullopt;
      out.constrain(feature, *tightened);
    }
  }
  return out;
}

int interpretability_index(std::span<const Rule> rules) {
  int total = 0;
  for (const Rule& r : rules) total += r.length();
  return total;
}

RowMask support_mask(const Rule& rule, const Eigen::Ref<const Eigen::MatrixXd>& features) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (rule.max_feature_index() >= features.cols()) {
    throw InputError("rule: feature index out of range for dataset");
  }
  RowMask mask(n);
  if (rule.empty()) {
    for (std::size_t i = 0; i < n; ++i) mask.set(i);
    return mask;
  }
  // One vectorised pass per condition, narrowing an alive array.
  Eigen::Array<bool, Eigen::Dynamic, 1> alive =
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(features.rows(), true);
  for (const auto& [feature, iv] : rule.conditions()) {
    const auto col = features.col(feature).array();
    alive = alive && (col >= iv.lo) && (col <= iv.hi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[static_cast<Eigen::Index>(i)]) mask.set(i);
  }
  return mask;
}

RuleStats rule_stats(const RowMask& mask, const Eigen::Ref<const Eigen::VectorXd>& target) {
  RuleStats stats;
  const std::size_t n = mask.size();
  stats.support_count = mask.count();
  stats.coverage = static_cast<double>(stats.support_count) / static_cast<double>(n);
  if (stats.support_count == 0) return stats;

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.test(i)) sum += target[static_cast<Eigen::Index>(i)];
  }
  const double mean = sum / static_cast<double>(stats.support_count);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.test(i)) {
      const double dev = target[static_cast<Eigen::Index>(i)] - mean;
      ss += dev * dev;
    }
  }
  stats.cond_mean = mean;
  stats.cond_var = ss / static_cast<double>(stats.support_count);
  return stats;
}

RuleStats rule_stats(const Rule& rule, const Dataset& ds) {
  return rule_stats(support_mask(rule, ds.features), ds.target);
}

}  // namespace covreg
