#pragma once

#include <Eigen/Core>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "covreg/dataset.hpp"

namespace covreg {

// Closed interval; missing bounds are +-inf sentinels.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool is_full() const {
    return lo == -std::numeric_limits<double>::infinity() &&
           hi == std::numeric_limits<double>::infinity();
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

std::optional<Interval> intersect(const Interval& a, const Interval& b);

// Smallest double strictly above t; converts an open tree threshold into a
// closed bound.
inline double after(double t) { return std::nextafter(t, std::numeric_limits<double>::infinity()); }
inline double before(double t) { return std::nextafter(t, -std::numeric_limits<double>::infinity()); }

// A hyperrectangle condition: conjunction of per-feature intervals kept
// sorted by feature index. The empty map is the all-space rule.
class Rule {
 public:
  Rule() = default;

  // Intersects with any interval already stored for the feature.
  Rule& constrain(int feature, Interval iv);

  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int length() const { return static_cast<int>(conditions_.size()); }
  bool empty() const { return conditions_.empty(); }
  const std::vector<std::pair<int, Interval>>& conditions() const { return conditions_; }
  int max_feature_index() const;

  friend bool operator==(const Rule&, const Rule&) = default;

 private:
  std::vector<std::pair<int, Interval>> conditions_;
};

// Canonical order: lexicographic over the (feature, lo, hi) sequence.
bool rule_less(const Rule& a, const Rule& b);

// Per-dimension intersection; nullopt marks the empty set.
std::optional<Rule> rule_intersect(const Rule& a, const Rule& b);

// Sum of rule lengths; the lower the simpler the collection.
int interpretability_index(std::span<const Rule> rules);

// Row membership packed 64 rows per word.
class RowMask {
 public:
  RowMask() = default;
  explicit RowMask(std::size_t n) : size_(n), blocks_((n + 63) / 64, 0) {}

  void set(std::size_t i) { blocks_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (blocks_[i >> 6] >> (i & 63)) & 1u; }
  std::size_t size() const { return size_; }

  std::size_t count() const {
    std::size_t c = 0;
    for (const std::uint64_t b : blocks_) c += static_cast<std::size_t>(std::popcount(b));
    return c;
  }
  std::size_t overlap_count(const RowMask& other) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      c += static_cast<std::size_t>(std::popcount(blocks_[k] & other.blocks_[k]));
    }
    return c;
  }
  void unite(const RowMask& other) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) blocks_[k] |= other.blocks_[k];
  }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> blocks_;
};

RowMask support_mask(const Rule& rule, const Eigen::Ref<const Eigen::MatrixXd>& features);

struct RuleStats {
  double coverage = 0.0;  // Q_n(r)
  std::optional<double> cond_mean;
  std::optional<double> cond_var;  // population convention
  std::size_t support_count = 0;
};

RuleStats rule_stats(const RowMask& mask, const Eigen::Ref<const Eigen::VectorXd>& target);
RuleStats rule_stats(const Rule& rule, const Dataset& ds);

}  // namespace covreg
