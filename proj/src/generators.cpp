#include "covreg/generators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "covreg/errors.hpp"
#include "covreg/parallel.hpp"

namespace covreg {

std::string to_string(TreeMethod m) {
  switch (m) {
    case TreeMethod::kRf: return "rf";
    case TreeMethod::kGb: return "gb";
    case TreeMethod::kSgb: return "sgb";
  }
  return "rf";
}

TreeMethod tree_method_from_string(const std::string& s) {
  if (s == "rf") return TreeMethod::kRf;
  if (s == "gb") return TreeMethod::kGb;
  if (s == "sgb") return TreeMethod::kSgb;
  throw InputError("generator: unknown method '" + s + "' (expected rf, gb or sgb)");
}

void GeneratorConfig::validate() const {
  if (tree_size < 2) throw InputError("generator: tree_size must be >= 2");
  if (max_rules < 1) throw InputError("generator: max_rules must be >= 1");
  if (n_trees < 1) throw InputError("generator: n_trees must be >= 1");
  if (learning_rate <= 0.0) throw InputError("generator: learning_rate must be > 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw InputError("generator: subsample in (0,1]");
  if (mtry < 0) throw InputError("generator: mtry must be >= 0");
}

int Tree::leaf_count() const {
  int c = 0;
  for (const TreeNode& n : nodes) c += (n.feature < 0);
  return c;
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = (x[n.feature] <= n.threshold) ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

std::vector<Rule> Tree::harvest_rules() const {
  std::vector<Rule> out;
  std::deque<int> queue;
  const TreeNode& root = nodes[0];
  if (root.feature >= 0) {
    queue.push_back(root.left);
    queue.push_back(root.right);
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    out.push_back(n.path_rule);
    if (n.feature >= 0) {
      queue.push_back(n.left);
      queue.push_back(n.right);
    }
  }
  return out;
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool found() const { return feature >= 0; }
};

struct OpenLeaf {
  int node = -1;
  std::vector<Eigen::Index> rows;
  SplitCandidate best;
};

// Best SSE-reduction split over the given candidate features. Thresholds are
// midpoints between consecutive distinct values; ties resolved toward the
// lowest feature index, then the smallest threshold, by scan order.
SplitCandidate best_split(const Eigen::Ref<const Eigen::MatrixXd>& features,
                          const Eigen::Ref<const Eigen::VectorXd>& y,
                          const std::vector<Eigen::Index>& rows,
                          const std::vector<int>& candidate_features) {
  SplitCandidate best;
  const auto m = rows.size();
  if (m < 2) return best;

  double total = 0.0;
  double ymin = y[rows[0]], ymax = y[rows[0]];
  for (const Eigen::Index r : rows) {
    total += y[r];
    ymin = std::min(ymin, y[r]);
    ymax = std::max(ymax, y[r]);
  }
  if (!(ymin < ymax)) return best;  // constant target: nothing to gain
  const double base = total * total / static_cast<double>(m);

  std::vector<std::pair<double, double>> xy(m);
  for (const int f : candidate_features) {
    for (std::size_t k = 0; k < m; ++k) {
      xy[k] = {features(rows[k], f), y[rows[k]]};
    }
    std::sort(xy.begin(), xy.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      left_sum += xy[k].second;
      if (!(xy[k].first < xy[k + 1].first)) continue;
      double threshold = 0.5 * (xy[k].first + xy[k + 1].first);
      if (!(threshold < xy[k + 1].first)) threshold = xy[k].first;
      const auto n_left = static_cast<double>(k + 1);
      const auto n_right = static_cast<double>(m - k - 1);
      const double right_sum = total - left_sum;
      const double gain =
          left_sum * left_sum / n_left + right_sum * right_sum / n_right - base;
      if (gain > best.gain) {
        best = {gain, f, threshold};
      }
    }
  }
  return best;
}

std::vector<int> draw_features(int d, int mtry, Rng& rng) {
  if (mtry <= 0 || mtry >= d) {
    std::vector<int> all(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) all[static_cast<std::size_t>(j)] = j;
    return all;
  }
  std::vector<int> chosen = rng.sample_without_replacement(mtry, d);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

Tree fit_cart_tree(const Eigen::Ref<const Eigen::MatrixXd>& features,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const std::vector<Eigen::Index>& rows, int max_leaves, int mtry, Rng& rng) {
  if (rows.size() < 2) throw InputError("cart: need at least 2 rows");
  if (max_leaves < 2) throw InputError("cart: max_leaves must be >= 2");
  const int d = static_cast<int>(features.cols());

  Tree tree;
  tree.nodes.push_back(TreeNode{});
  {
    double sum = 0.0;
    for (const Eigen::Index r : rows) sum += y[r];
    tree.nodes[0].value = sum / static_cast<double>(rows.size());
  }

  std::vector<OpenLeaf> open;
  open.push_back({0, rows, best_split(features, y, rows, draw_features(d, mtry, rng))});

  int leaves = 1;
  while (leaves < max_leaves) {
    int pick = -1;
    for (std::size_t k = 0; k < open.size(); ++k) {
      if (!open[k].best.found()) continue;
      if (pick < 0 || open[k].best.gain > open[static_cast<std::size_t>(pick)].best.gain) {
        pick = static_cast<int>(k);
      }
    }
    if (pick < 0) break;  // no improving split anywhere

    OpenLeaf leaf = std::move(open[static_cast<std::size_t>(pick)]);
    open.erase(open.begin() + pick);

    std::vector<Eigen::Index> left_rows, right_rows;
    double left_sum = 0.0, right_sum = 0.0;
    for (const Eigen::Index r : leaf.rows) {
      if (features(r, leaf.best.feature) <= leaf.best.threshold) {
        left_rows.push_back(r);
        left_sum += y[r];
      } else {
        right_rows.push_back(r);
        right_sum += y[r];
      }
    }

    TreeNode& parent = tree.nodes[static_cast<std::size_t>(leaf.node)];
    parent.feature = leaf.best.feature;
    parent.threshold = leaf.best.threshold;
    const Rule parent_rule = parent.path_rule;

    TreeNode left_node;
    left_node.value = left_sum / static_cast<double>(left_rows.size());
    left_node.path_rule = Rule(parent_rule).constrain(
        leaf.best.feature, Interval{-std::numeric_limits<double>::infinity(), leaf.best.threshold});
    TreeNode right_node;
    right_node.value = right_sum / static_cast<double>(right_rows.size());
    right_node.path_rule = Rule(parent_rule).constrain(
        leaf.best.feature, Interval{after(leaf.best.threshold), std::numeric_limits<double>::infinity()});

    const int left_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(std::move(left_node));
    const int right_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(std::move(right_node));
    tree.nodes[static_cast<std::size_t>(leaf.node)].left = left_index;
    tree.nodes[static_cast<std::size_t>(leaf.node)].right = right_index;

    open.push_back({left_index, std::move(left_rows), SplitCandidate{}});
    open.back().best = best_split(features, y, open.back().rows, draw_features(d, mtry, rng));
    open.push_back({right_index, std::move(right_rows), SplitCandidate{}});
    open.back().best = best_split(features, y, open.back().rows, draw_features(d, mtry, rng));

    ++leaves;
  }
  return tree;
}

Tree fit_cart_tree(const Dataset& ds, int max_leaves, int mtry, Rng& rng) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return fit_cart_tree(ds.features, ds.target, rows, max_leaves, mtry, rng);
}

namespace {

std::vector<Eigen::Index> bootstrap_rows(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = static_cast<Eigen::Index>(rng.next_below(static_cast<std::size_t>(n)));
  return rows;
}

std::vector<Eigen::Index> subsample_rows(Eigen::Index n, double fraction, Rng& rng) {
  const auto take = std::max<Eigen::Index>(
      2, static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n))));
  std::vector<int> picked =
      rng.sample_without_replacement(static_cast<int>(std::min(take, n)), static_cast<int>(n));
  std::vector<Eigen::Index> rows(picked.begin(), picked.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

std::vector<Tree> grow_forest(const Dataset& ds, const GeneratorConfig& cfg,
                              std::vector<double>* gb_train_mse) {
  cfg.validate();
  const Eigen::Index n = ds.n();
  const int d = static_cast<int>(ds.d());
  std::vector<Tree> trees(static_cast<std::size_t>(cfg.n_trees));

  if (cfg.method == TreeMethod::kRf) {
    const int mtry = cfg.mtry > 0 ? cfg.mtry : static_cast<int>(std::ceil(d / 3.0));
    parallel_for(static_cast<std::size_t>(cfg.n_trees), [&](std::size_t t) {
      Rng rng(derive_seed(cfg.seed, t));
      const std::vector<Eigen::Index> rows = bootstrap_rows(n, rng);
      trees[t] = fit_cart_tree(ds.features, ds.target, rows, cfg.tree_size, mtry, rng);
    });
    return trees;
  }

  // GB / SGB: sequential trees on residuals with shrinkage, initial model is
  // the global target mean.
  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, ds.target.mean());
  std::vector<Eigen::Index> all_rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;

  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd residual = ds.target - fitted;
    const std::vector<Eigen::Index> rows = (cfg.method == TreeMethod::kSgb)
                                               ? subsample_rows(n, cfg.subsample, rng)
                                               : all_rows;
    Tree tree = fit_cart_tree(ds.features, residual, rows, cfg.tree_size, 0, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      fitted[i] += cfg.learning_rate * tree.predict(ds.features.row(i));
    }
    trees[static_cast<std::size_t>(t)] = std::move(tree);
    if (gb_train_mse != nullptr) {
      gb_train_mse->push_back((ds.target - fitted).squaredNorm() / static_cast<double>(n));
    }
  }
  return trees;
}

std::vector<Rule> generate_rules(const Dataset& ds, const GeneratorConfig& cfg) {
  const std::vector<Tree> trees = grow_forest(ds, cfg);

  std::vector<Rule> out;
  std::set<Rule, decltype(&rule_less)> seen(&rule_less);
  for (const Tree& tree : trees) {
    if (static_cast<int>(out.size()) >= cfg.max_rules) break;
    for (Rule& rule : tree.harvest_rules()) {
      if (static_cast<int>(out.size()) >= cfg.max_rules) break;
      if (!seen.insert(rule).second) continue;
      if (support_mask(rule, ds.features).count() == 0) continue;  // resample artifact
      out.push_back(std::move(rule));
    }
  }
  return out;
}

}  // namespace covreg
