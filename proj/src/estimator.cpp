#include "covreg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "covreg/errors.hpp"
#include "covreg/rng.hpp"

namespace covreg {

std::string BitSignature::to_string() const {
  std::string s(size_, '0');
  for (std::size_t j = 0; j < size_; ++j) {
    if (test(j)) s[j] = '1';
  }
  return s;
}

BitSignature BitSignature::from_string(const std::string& s) {
  BitSignature sig(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] == '1') {
      sig.set(j);
    } else if (s[j] != '0') {
      throw InputError("signature: expected a string of 0/1 characters");
    }
  }
  return sig;
}

std::size_t BitSignature::Hash::operator()(const BitSignature& s) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size_;
  for (const std::uint64_t b : s.blocks_) h = splitmix64(h ^ b);
  return static_cast<std::size_t>(h);
}

BitSignature activation_signature(const Covering& covering,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  BitSignature sig(covering.rules.size());
  for (std::size_t j = 0; j < covering.rules.size(); ++j) {
    if (covering.rules[j].rule.contains(x)) sig.set(j);
  }
  return sig;
}

CoveringEstimator CoveringEstimator::fit(Covering covering, const Dataset& ds, Fallback fallback) {
  if (covering.rules.empty()) throw PipelineError("estimator: empty covering");

  CoveringEstimator est;
  est.train_stats_ = target_stats(ds);
  est.fallback_ = fallback;
  est.fallback_value_ = (fallback == Fallback::kGlobalMean) ? est.train_stats_.mean : 0.0;

  // Row masks once per rule, then signatures row by row.
  std::vector<RowMask> masks;
  masks.reserve(covering.rules.size());
  for (const SelectedRule& r : covering.rules) masks.push_back(support_mask(r.rule, ds.features));

  struct Accum {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::unordered_map<BitSignature, Accum, BitSignature::Hash> groups;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    BitSignature sig(covering.rules.size());
    bool inside = false;
    for (std::size_t j = 0; j < masks.size(); ++j) {
      if (masks[j].test(static_cast<std::size_t>(i))) {
        sig.set(j);
        inside = true;
      }
    }
    if (!inside) continue;  // outside the union: convention handles it
    Accum& acc = groups[sig];
    acc.sum += ds.target[i];
    acc.count += 1;
  }
  for (const auto& [sig, acc] : groups) {
    est.cells_.emplace(sig, Cell{acc.sum / static_cast<double>(acc.count), acc.count});
  }
  est.covering_ = std::move(covering);
  return est;
}

double CoveringEstimator::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const BitSignature sig = activation_signature(covering_, x);
  if (!sig.any()) return fallback_value_;
  const auto it = cells_.find(sig);
  return it == cells_.end() ? fallback_value_ : it->second.mean;
}

Eigen::VectorXd CoveringEstimator::predict_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i));
  return out;
}

CoveringEstimator CoveringEstimator::from_parts(Covering covering, CellTable cells,
                                                TargetStats stats, Fallback fallback) {
  CoveringEstimator est;
  est.covering_ = std::move(covering);
  est.cells_ = std::move(cells);
  est.train_stats_ = stats;
  est.fallback_ = fallback;
  est.fallback_value_ = (fallback == Fallback::kGlobalMean) ? stats.mean : 0.0;
  return est;
}

namespace {

// Representative coordinates meeting every arrangement cell of the rules'
// interval endpoints in one dimension: each finite endpoint, midpoints
// between consecutive ones, and one probe beyond each extreme.
std::vector<double> representatives(const std::vector<Rule>& rules, int dim) {
  std::set<double> cuts;
  for (const Rule& r : rules) {
    for (const auto& [feature, iv] : r.conditions()) {
      if (feature != dim) continue;
      if (std::isfinite(iv.lo)) cuts.insert(iv.lo);
      if (std::isfinite(iv.hi)) cuts.insert(iv.hi);
    }
  }
  if (cuts.empty()) return {0.0};
  std::vector<double> sorted(cuts.begin(), cuts.end());
  std::vector<double> reps;
  reps.push_back(sorted.front() - 1.0);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    reps.push_back(sorted[k]);
    if (k + 1 < sorted.size()) {
      const double mid = 0.5 * (sorted[k] + sorted[k + 1]);
      if (mid > sorted[k] && mid < sorted[k + 1]) reps.push_back(mid);
    }
  }
  reps.push_back(sorted.back() + 1.0);
  return reps;
}

}  // namespace

std::vector<PartitionCell> enumerate_partition_bruteforce(const std::vector<Rule>& rules, int d) {
  if (rules.size() > 12) throw InputError("partition: too many rules for subset enumeration");
  if (d < 1) throw InputError("partition: d must be >= 1");
  for (const Rule& r : rules) {
    if (r.max_feature_index() >= d) throw InputError("partition: rule exceeds dimension");
  }

  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) {
    axes.push_back(representatives(rules, j));
    total *= axes.back().size();
    if (total > 20'000'000) throw InputError("partition: probe grid too large");
  }

  std::map<std::string, PartitionCell> found;  // keyed for deterministic order
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Eigen::RowVectorXd point(d);
  for (;;) {
    for (int j = 0; j < d; ++j) point[j] = axes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    BitSignature sig(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (rules[r].contains(point)) sig.set(r);
    }
    found.try_emplace(sig.to_string(), PartitionCell{sig, point});

    int j = 0;
    for (; j < d; ++j) {
      auto& k = idx[static_cast<std::size_t>(j)];
      if (++k < axes[static_cast<std::size_t>(j)].size()) break;
      k = 0;
    }
    if (j == d) break;
  }

  std::vector<PartitionCell> cells;
  cells.reserve(found.size());
  for (auto& [key, cell] : found) cells.push_back(std::move(cell));
  return cells;
}

std::pair<int, int> covering_vs_partition_cardinality_check(int d) {
  if (d < 1) throw InputError("cardinality check: d must be >= 1");
  const double inf = std::numeric_limits<double>::infinity();

  // The (2d+1)-element hyperrectangle partition containing [0,1]^d: for each
  // dimension a below-slab and an above-slab over the prefix box, then the
  // unit box itself. Open sides become closed via one-ulp nudges.
  std::vector<Rule> partition;
  for (int i = 0; i < d; ++i) {
    Rule below, above;
    for (int j = 0; j < i; ++j) {
      below.constrain(j, Interval{0.0, 1.0});
      above.constrain(j, Interval{0.0, 1.0});
    }
    below.constrain(i, Interval{-inf, before(0.0)});
    above.constrain(i, Interval{after(1.0), inf});
    partition.push_back(below);
    partition.push_back(above);
  }
  Rule unit_box;
  for (int j = 0; j < d; ++j) unit_box.constrain(j, Interval{0.0, 1.0});
  partition.push_back(unit_box);

  // Probe grid: around the critical boundaries in every dimension.
  const std::vector<double> probes = {-1.0, before(0.0), 0.0, 0.5, 1.0, after(1.0), 2.0};
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Eigen::RowVectorXd point(d);
  for (;;) {
    for (int j = 0; j < d; ++j) point[j] = probes[idx[static_cast<std::size_t>(j)]];
    int members = 0;
    for (const Rule& r : partition) members += r.contains(point);
    if (members != 1) {
      throw PipelineError("cardinality check: witness partition not a partition at a probe");
    }
    int j = 0;
    for (; j < d; ++j) {
      auto& k = idx[static_cast<std::size_t>(j)];
      if (++k < probes.size()) break;
      k = 0;
    }
    if (j == d) break;
  }

  // Two-element covering {[0,1]^d, R^d}: the pattern intersecting both rules
  // subtracts nothing, so the cell is exactly the unit box.
  const Rule whole_space;
  const std::vector<Rule> covering{unit_box, whole_space};
  const auto cells = enumerate_partition_bruteforce(covering, d);
  bool unit_cell_found = false;
  for (const PartitionCell& cell : cells) {
    if (cell.pattern.test(0) && cell.pattern.test(1)) {
      unit_cell_found = true;
      if (!unit_box.contains(cell.witness)) {
        throw PipelineError("cardinality check: witness left the unit box");
      }
    }
  }
  if (!unit_cell_found) {
    throw PipelineError("cardinality check: [0,1]^d is not a cell of the covering partition");
  }
  const auto intersection = rule_intersect(unit_box, whole_space);
  if (!intersection || !(*intersection == unit_box)) {
    throw PipelineError("cardinality check: unit box intersection mismatch");
  }

  return {2 * d + 1, 2};
}

}  // namespace covreg
