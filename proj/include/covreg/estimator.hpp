#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "covreg/dataset.hpp"
#include "covreg/rules.hpp"
#include "covreg/selection.hpp"

namespace covreg {

// Packed activation bit vector; bit j answers "x inside rule j" in covering
// order. Two points share a partition cell iff their signatures are equal.
class BitSignature {
 public:
  BitSignature() = default;
  explicit BitSignature(std::size_t bits) : size_(bits), blocks_((bits + 63) / 64, 0) {}

  void set(std::size_t j) { blocks_[j >> 6] |= (std::uint64_t{1} << (j & 63)); }
  bool test(std::size_t j) const { return (blocks_[j >> 6] >> (j & 63)) & 1u; }
  std::size_t size() const { return size_; }
  bool any() const {
    for (const auto b : blocks_) {
      if (b != 0) return true;
    }
    return false;
  }

  std::string to_string() const;  // '0'/'1' chars, bit 0 first
  static BitSignature from_string(const std::string& s);

  friend bool operator==(const BitSignature&, const BitSignature&) = default;

  struct Hash {
    std::size_t operator()(const BitSignature& s) const;
  };

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> blocks_;
};

BitSignature activation_signature(const Covering& covering,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x);

enum class Fallback { kZero, kGlobalMean };

struct Cell {
  double mean = 0.0;
  std::size_t count = 0;
};

// Piecewise-constant predictor on the partition induced by the covering:
// each populated activation signature maps to its training mean; signatures
// never observed in training (including the all-zero one) fall back to the
// configured convention value.
class CoveringEstimator {
 public:
  using CellTable = std::unordered_map<BitSignature, Cell, BitSignature::Hash>;

  CoveringEstimator() = default;  // empty shell, filled by fit/from_parts

  static CoveringEstimator fit(Covering covering, const Dataset& ds,
                               Fallback fallback = Fallback::kZero);

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  const Covering& covering() const { return covering_; }
  const CellTable& cells() const { return cells_; }
  const TargetStats& train_stats() const { return train_stats_; }
  Fallback fallback() const { return fallback_; }
  double fallback_value() const { return fallback_value_; }

  // Used by the model loader; trusts its arguments.
  static CoveringEstimator from_parts(Covering covering, CellTable cells, TargetStats stats,
                                      Fallback fallback);

 private:
  Covering covering_;
  CellTable cells_;
  TargetStats train_stats_;
  Fallback fallback_ = Fallback::kZero;
  double fallback_value_ = 0.0;
};

struct PartitionCell {
  BitSignature pattern;          // subset of rules intersected (rest subtracted)
  Eigen::RowVectorXd witness;    // a point inside the cell
};

// All nonempty cells of the partition generated by the rules, by exhaustive
// subset semantics over the arrangement of interval endpoints. Exact: every
// cell of the arrangement contains one representative probe. Includes the
// all-zero pattern when the rules do not cover the whole space.
std::vector<PartitionCell> enumerate_partition_bruteforce(const std::vector<Rule>& rules, int d);

// Witness construction: a hyperrectangle partition containing [0,1]^d needs
// 2d+1 elements, while the covering {[0,1]^d, R^d} induces it with 2.
// Verifies both on probe grids and returns (2d+1, 2).
std::pair<int, int> covering_vs_partition_cardinality_check(int d);

}  // namespace covreg
