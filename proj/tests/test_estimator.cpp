#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "covreg/errors.hpp"
#include "covreg/estimator.hpp"
#include "covreg/model_io.hpp"
#include "covreg/rng.hpp"

using namespace covreg;

namespace {

Rule box2(double x0, double x1, double y0, double y1) {
  Rule r;
  r.constrain(0, {x0, x1}).constrain(1, {y0, y1});
  return r;
}

Covering covering_of(const std::vector<Rule>& rules) {
  Covering c;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    c.rules.push_back({rules[k], RuleTag::kSignificant, RuleStats{}, static_cast<int>(k), 0.0});
  }
  return c;
}

// The five-rectangle covering of the unit square with 11 cells inside the
// union and a depth-3 overlap.
std::vector<Rule> five_rect_layout() {
  return {box2(0.0, 0.8, 0.2, 1.0), box2(0.0, 1.0, 0.0, 0.9), box2(0.9, 1.0, 0.2, 0.4),
          box2(0.3, 0.6, 0.0, 0.2), box2(0.6, 1.0, 0.4, 1.0)};
}

Dataset grid_dataset2d(int steps, std::uint64_t seed = 5) {
  const int n = steps * steps;
  Eigen::MatrixXd f(n, 2);
  Eigen::VectorXd y(n);
  Rng rng(seed);
  int i = 0;
  for (int a = 0; a < steps; ++a) {
    for (int b = 0; b < steps; ++b, ++i) {
      f(i, 0) = static_cast<double>(a) / (steps - 1);
      f(i, 1) = static_cast<double>(b) / (steps - 1);
      y(i) = rng.next_normal(f(i, 0) * 2.0, 0.1);
    }
  }
  return make_dataset(f, y, {"x", "y"});
}

Rule random_grid_rule(Rng& rng, int d) {
  Rule r;
  bool any = false;
  while (!any) {
    for (int j = 0; j < d; ++j) {
      if (rng.next_unit() < 0.45) continue;
      const int a = static_cast<int>(rng.next_below(11));
      const int b = static_cast<int>(rng.next_below(11));
      if (a == b) continue;
      r.constrain(j, {std::min(a, b) / 10.0, std::max(a, b) / 10.0});
      any = true;
    }
  }
  return r;
}

double training_risk(const CoveringEstimator& est, const Dataset& ds,
                     const BitSignature* perturbed, double amount) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const BitSignature sig = activation_signature(est.covering(), ds.features.row(i));
    double pred;
    if (!sig.any()) {
      pred = est.fallback_value();
    } else {
      const auto it = est.cells().find(sig);
      pred = it == est.cells().end() ? est.fallback_value() : it->second.mean;
    }
    if (perturbed != nullptr && sig == *perturbed) pred += amount;
    const double err = pred - ds.target[i];
    sum += err * err;
  }
  return sum / static_cast<double>(ds.n());
}

}  // namespace

TEST_SUITE_BEGIN("estimator");

TEST_CASE("activation signature of the three-rule layout") {
  Rule r1, r2, r3;
  r1.constrain(0, {0.0, 0.2});
  r2.constrain(1, {0.5, 1.0});
  r3.constrain(0, {0.3, 1.0});
  const Covering cov = covering_of({r1, r2, r3});

  Eigen::RowVectorXd x(2);
  x << 0.1, 0.7;
  CHECK(activation_signature(cov, x).to_string() == "110");

  x << 0.25, 0.2;  // outside every rule
  const BitSignature none = activation_signature(cov, x);
  CHECK_FALSE(none.any());
  CHECK(none.to_string() == "000");

  const Covering all = covering_of({Rule{}});
  CHECK(activation_signature(all, x).to_string() == "1");
}

TEST_CASE("fit with a single all-space rule predicts the global mean") {
  const Dataset ds = grid_dataset2d(7);
  const CoveringEstimator est = CoveringEstimator::fit(covering_of({Rule{}}), ds);
  CHECK(est.cells().size() == 1);
  const double mean = ds.target.mean();
  Eigen::RowVectorXd x(2);
  x << 0.123, 0.456;
  CHECK(est.predict(x) == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("two disjoint rules give the two group means") {
  Eigen::MatrixXd f(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    f(i, 0) = i < 3 ? 0.2 : 0.8;
    f(i, 1) = 0.5;
    y(i) = i < 3 ? (i + 1.0) : (10.0 * i);
  }
  const Dataset ds = make_dataset(f, y, {"x", "y"});
  Rule left, right;
  left.constrain(0, {0.0, 0.5});
  right.constrain(0, {0.5 + 1e-12, 1.0});
  const CoveringEstimator est = CoveringEstimator::fit(covering_of({left, right}), ds);
  CHECK(est.cells().size() == 2);
  CHECK(est.predict(f.row(0)) == doctest::Approx(2.0));
  CHECK(est.predict(f.row(5)) == doctest::Approx((30.0 + 40.0 + 50.0) / 3.0));
}

TEST_CASE("unpopulated cells follow the convention value") {
  // Training data only in the left rule; the overlap pattern stays empty.
  Eigen::MatrixXd f(4, 2);
  Eigen::VectorXd y(4);
  for (int i = 0; i < 4; ++i) {
    f(i, 0) = 0.1 + 0.05 * i;
    f(i, 1) = 0.5;
    y(i) = 3.0;
  }
  const Dataset ds = make_dataset(f, y, {"x", "y"});
  const std::vector<Rule> rules{box2(0.0, 0.3, 0.0, 1.0), box2(0.6, 1.0, 0.0, 1.0)};

  const CoveringEstimator zero = CoveringEstimator::fit(covering_of(rules), ds, Fallback::kZero);
  Eigen::RowVectorXd x(2);
  x << 0.7, 0.5;  // covered by rule 2 but no training mass there
  CHECK(zero.predict(x) == 0.0);
  x << 0.45, 0.5;  // outside the union
  CHECK(zero.predict(x) == 0.0);

  const CoveringEstimator mean =
      CoveringEstimator::fit(covering_of(rules), ds, Fallback::kGlobalMean);
  CHECK(mean.predict(x) == doctest::Approx(3.0));
}

TEST_CASE("in-sample predictions reproduce the exact group means") {
  const Dataset ds = grid_dataset2d(9);
  const std::vector<Rule> rules = five_rect_layout();
  const CoveringEstimator est = CoveringEstimator::fit(covering_of(rules), ds);

  // Recompute each row's group mean independently, in row order.
  std::map<std::string, std::pair<double, int>> groups;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const std::string key = activation_signature(est.covering(), ds.features.row(i)).to_string();
    if (key.find('1') == std::string::npos) continue;
    groups[key].first += ds.target[i];
    groups[key].second += 1;
  }
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const std::string key = activation_signature(est.covering(), ds.features.row(i)).to_string();
    if (key.find('1') == std::string::npos) continue;
    const auto& [sum, count] = groups.at(key);
    CHECK(est.predict(ds.features.row(i)) == sum / static_cast<double>(count));
  }
}

TEST_CASE("five-rectangle layout populates at most 11 cells") {
  const Dataset ds = grid_dataset2d(25);
  const CoveringEstimator est = CoveringEstimator::fit(covering_of(five_rect_layout()), ds);
  CHECK(est.cells().size() <= 11);
  CHECK(est.cells().size() >= 8);  // dense grid reaches most cells
}

TEST_CASE("piecewise constant and invariant to rule permutation") {
  const Dataset ds = grid_dataset2d(11);
  std::vector<Rule> rules = five_rect_layout();
  const CoveringEstimator est = CoveringEstimator::fit(covering_of(rules), ds);

  std::vector<Rule> permuted{rules[3], rules[0], rules[4], rules[2], rules[1]};
  const CoveringEstimator est2 = CoveringEstimator::fit(covering_of(permuted), ds);

  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    Eigen::RowVectorXd x(2);
    x << rng.next_unit(), rng.next_unit();
    CHECK(est.predict(x) == est2.predict(x));
    // Equal signatures always produce equal predictions: nudge within the
    // same cell (signature equality checked explicitly).
    Eigen::RowVectorXd x2 = x;
    x2[0] = std::min(1.0, x2[0] + 1e-12);
    if (activation_signature(est.covering(), x) == activation_signature(est.covering(), x2)) {
      CHECK(est.predict(x) == est.predict(x2));
    }
  }
}

TEST_CASE("partition enumeration of a single proper rule") {
  const std::vector<Rule> rules{box2(0.2, 0.6, 0.2, 0.6)};
  const auto cells = enumerate_partition_bruteforce(rules, 2);
  REQUIRE(cells.size() == 2);  // the box and the complement pattern
  std::set<std::string> patterns;
  for (const auto& c : cells) patterns.insert(c.pattern.to_string());
  CHECK(patterns == std::set<std::string>{"0", "1"});
}

TEST_CASE("partition enumeration of two overlapping boxes") {
  const std::vector<Rule> rules{box2(0.0, 0.5, 0.0, 0.5), box2(0.3, 0.8, 0.3, 0.8)};
  const auto cells = enumerate_partition_bruteforce(rules, 2);
  std::set<std::string> patterns;
  for (const auto& c : cells) patterns.insert(c.pattern.to_string());
  // A\B, B\A, A n B are all nonempty, plus the outside pattern.
  CHECK(patterns.count("10") == 1);
  CHECK(patterns.count("01") == 1);
  CHECK(patterns.count("11") == 1);
  CHECK(patterns.count("00") == 1);
  CHECK(cells.size() == 4);
}

TEST_CASE("five-rectangle layout has exactly 11 cells inside the union") {
  const auto cells = enumerate_partition_bruteforce(five_rect_layout(), 2);
  int inside = 0;
  for (const auto& c : cells) inside += c.pattern.any();
  CHECK(inside == 11);
  CHECK(cells.size() == 12);  // plus the complement of the union
}

TEST_CASE("witness consistency of enumerated cells") {
  Rng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(3));
    const int n_rules = 1 + static_cast<int>(rng.next_below(6));
    std::vector<Rule> rules;
    for (int k = 0; k < n_rules; ++k) rules.push_back(random_grid_rule(rng, d));
    for (const auto& cell : enumerate_partition_bruteforce(rules, d)) {
      for (std::size_t r = 0; r < rules.size(); ++r) {
        CHECK(rules[r].contains(cell.witness) == cell.pattern.test(r));
      }
    }
  }
}

TEST_CASE("grid signature grouping equals the brute-force cells (property)") {
  Rng rng(2718);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + static_cast<int>(rng.next_below(2));
    const int n_rules = 2 + static_cast<int>(rng.next_below(5));
    std::vector<Rule> rules;
    for (int k = 0; k < n_rules; ++k) rules.push_back(random_grid_rule(rng, d));

    const auto cells = enumerate_partition_bruteforce(rules, d);
    std::set<std::string> enumerated;
    for (const auto& c : cells) enumerated.insert(c.pattern.to_string());

    // Probe grid: 21 points per axis on [0,1].
    std::set<std::string> observed;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Eigen::RowVectorXd x(d);
    for (;;) {
      for (int j = 0; j < d; ++j) x[j] = idx[static_cast<std::size_t>(j)] / 20.0;
      BitSignature sig(rules.size());
      for (std::size_t r = 0; r < rules.size(); ++r) {
        if (rules[r].contains(x)) sig.set(r);
      }
      observed.insert(sig.to_string());
      int j = 0;
      for (; j < d; ++j) {
        if (++idx[static_cast<std::size_t>(j)] <= 20) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
      if (j == d) break;
    }

    // Every grid signature is an enumerated cell.
    for (const std::string& sig : observed) CHECK(enumerated.count(sig) == 1);
    // Every cell whose witness lies in the unit cube is realised on the grid
    // (endpoints sit on the 0.1 lattice, grid resolution is 0.05).
    for (const auto& c : cells) {
      bool in_cube = true;
      for (int j = 0; j < d; ++j) {
        if (c.witness[j] < 0.0 || c.witness[j] > 1.0) in_cube = false;
      }
      if (in_cube) CHECK(observed.count(c.pattern.to_string()) == 1);
    }
  }
}

TEST_CASE("enumeration rejects oversized inputs") {
  std::vector<Rule> many;
  for (int k = 0; k < 13; ++k) many.push_back(box2(0, 1, 0, 1));
  CHECK_THROWS_AS(enumerate_partition_bruteforce(many, 2), InputError);
}

TEST_CASE("partition versus covering cardinality witnesses") {
  CHECK(covering_vs_partition_cardinality_check(1) == std::pair<int, int>{3, 2});
  CHECK(covering_vs_partition_cardinality_check(2) == std::pair<int, int>{5, 2});
  CHECK(covering_vs_partition_cardinality_check(3) == std::pair<int, int>{7, 2});
  CHECK(covering_vs_partition_cardinality_check(5) == std::pair<int, int>{11, 2});
}

TEST_CASE("perturbing any populated cell never lowers the training risk") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset ds = grid_dataset2d(9, 100 + trial);
    std::vector<Rule> rules;
    const int n_rules = 2 + static_cast<int>(rng.next_below(4));
    for (int k = 0; k < n_rules; ++k) rules.push_back(random_grid_rule(rng, 2));
    const CoveringEstimator est = CoveringEstimator::fit(covering_of(rules), ds);

    const double base = training_risk(est, ds, nullptr, 0.0);
    for (const auto& [sig, cell] : est.cells()) {
      CHECK(training_risk(est, ds, &sig, +0.1) >= base - 1e-12);
      CHECK(training_risk(est, ds, &sig, -0.1) >= base - 1e-12);
    }
  }
}

TEST_CASE("model serialization round trip is bit exact") {
  const Dataset ds = grid_dataset2d(13, 77);
  FittedModel model;
  model.estimator = CoveringEstimator::fit(covering_of(five_rect_layout()), ds);
  model.meta.n = ds.n();
  model.meta.d = ds.d();
  model.meta.feature_names = ds.feature_names;
  model.meta.sigma2_hat = 0.012345678901234567;
  model.meta.seed = 42;

  const auto path = std::filesystem::temp_directory_path() / "covreg_model_roundtrip.json";
  save_model(model, path);
  const FittedModel back = load_model(path);

  CHECK(back.meta.n == model.meta.n);
  CHECK(back.meta.sigma2_hat == model.meta.sigma2_hat);
  CHECK(back.estimator.cells().size() == model.estimator.cells().size());

  Rng rng(4);
  for (int k = 0; k < 500; ++k) {
    Eigen::RowVectorXd x(2);
    x << rng.next_unit() * 1.2 - 0.1, rng.next_unit() * 1.2 - 0.1;
    const double a = model.estimator.predict(x);
    const double b = back.estimator.predict(x);
    CHECK(a == b);  // bit exact
  }

  // Saving the reloaded model reproduces the file byte for byte.
  const auto path2 = std::filesystem::temp_directory_path() / "covreg_model_roundtrip2.json";
  save_model(back, path2);
  std::ifstream f1(path), f2(path2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("rule json encodes infinities as null") {
  Rule r;
  r.constrain(1, {0.5, std::numeric_limits<double>::infinity()});
  r.constrain(0, {-std::numeric_limits<double>::infinity(), 2.0});
  const std::vector<std::string> names{"a", "b"};
  const nlohmann::json j = rule_to_json(r, names);
  CHECK(j[0]["feature"] == "a");
  CHECK(j[0]["lo"].is_null());
  CHECK(j[0]["hi"] == 2.0);
  CHECK(j[1]["lo"] == 0.5);
  CHECK(j[1]["hi"].is_null());
  const Rule back = rule_from_json(j, names);
  CHECK(back == r);
}

TEST_SUITE_END();
