#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "covreg/dataset.hpp"
#include "covreg/rng.hpp"
#include "covreg/rules.hpp"

namespace covreg {

enum class TreeMethod { kRf, kGb, kSgb };

std::string to_string(TreeMethod m);
TreeMethod tree_method_from_string(const std::string& s);

struct GeneratorConfig {
  TreeMethod method = TreeMethod::kRf;
  int tree_size = 8;    // max leaves per tree
  int max_rules = 4000; // cap on distinct harvested rules
  int n_trees = 300;
  double learning_rate = 0.1;  // GB / SGB
  double subsample = 0.5;      // SGB row fraction
  int mtry = 0;                // RF; 0 means ceil(d/3)
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean of the node's fitting sample
  Rule path_rule;      // conjunction accumulated from the root
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int leaf_count() const;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // Path rules of all nodes and leaves in breadth-first order, root excluded.
  std::vector<Rule> harvest_rules() const;
};

// Greedy variance-reduction CART, best-first growth limited by leaf count.
// rows may contain duplicates (bootstrap resamples). mtry <= 0 means all
// features; otherwise each split draws that many candidates.
Tree fit_cart_tree(const Eigen::Ref<const Eigen::MatrixXd>& features,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const std::vector<Eigen::Index>& rows, int max_leaves, int mtry, Rng& rng);

Tree fit_cart_tree(const Dataset& ds, int max_leaves, int mtry, Rng& rng);

// Trees in build order per the configured method. When gb_train_mse is
// non-null and the method boosts, it receives the training MSE after each
// tree.
std::vector<Tree> grow_forest(const Dataset& ds, const GeneratorConfig& cfg,
                              std::vector<double>* gb_train_mse = nullptr);

// Every node and leaf of every tree as a rule: root excluded, duplicates
// removed, rules without support on the full training sample dropped,
// harvesting stopped at max_rules.
std::vector<Rule> generate_rules(const Dataset& ds, const GeneratorConfig& cfg);

}  // namespace covreg
