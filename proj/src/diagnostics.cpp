#include "covreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covreg/errors.hpp"
#include "covreg/significance.hpp"

namespace covreg {

namespace {

// Redundancy over training points restricted to one tag class.
std::pair<int, int> class_redundancy(const std::vector<RowMask>& masks,
                                     const std::vector<std::size_t>& members, std::size_t n) {
  int max_r = 0;
  int min_r = 0;
  bool seen = false;
  for (std::size_t i = 0; i < n; ++i) {
    int active = 0;
    for (const std::size_t j : members) active += masks[j].test(i);
    if (active == 0) continue;
    if (!seen) {
      max_r = min_r = active;
      seen = true;
    } else {
      max_r = std::max(max_r, active);
      min_r = std::min(min_r, active);
    }
  }
  if (!seen) return {0, 0};
  return {max_r, min_r};
}

}  // namespace

SuitabilityReport diagnose(const FittedModel& model, const Dataset& train) {
  const auto& meta = model.meta;
  const auto& covering = model.estimator.covering();
  if (covering.rules.empty()) throw InputError("diagnose: model has an empty covering");
  if (train.d() != meta.d) throw InputError("diagnose: training data dimension mismatch");

  const auto n = static_cast<std::size_t>(train.n());
  const double n_real = static_cast<double>(train.n());
  const double coverage_floor = std::pow(n_real, -meta.alpha);
  const double practical_bound = std::pow(n_real, meta.alpha) / (1.0 - meta.gamma);
  const double rate_bound = std::pow(n_real, meta.alpha - 0.5);

  std::vector<RowMask> masks;
  masks.reserve(covering.rules.size());
  for (const SelectedRule& r : covering.rules) masks.push_back(support_mask(r.rule, train.features));

  SuitabilityReport report;

  // H1: every selected rule keeps strictly more than n^(-alpha) mass.
  {
    double min_cov = 1.0;
    for (std::size_t j = 0; j < masks.size(); ++j) {
      min_cov = std::min(min_cov, static_cast<double>(masks[j].count()) / n_real);
    }
    report.checks.push_back({"h1_set_coverage", min_cov > coverage_floor, min_cov, coverage_floor,
                             "min rule coverage vs n^-alpha (strict)"});
  }

  // H2: mass left uncovered by the union.
  {
    RowMask u(n);
    for (const RowMask& m : masks) u.unite(m);
    const double uncovered = 1.0 - static_cast<double>(u.count()) / n_real;
    report.checks.push_back({"h2_collection_coverage", uncovered <= rate_bound, uncovered,
                             rate_bound, "Q_n of the uncovered set vs n^(alpha-1/2)"});
  }

  // H3: the stored tags must match a re-evaluation of the two tests.
  {
    SignificanceConfig cfg;
    cfg.alpha = meta.alpha;
    cfg.l_max = meta.l_max;
    cfg.beta_n = meta.beta_n;
    cfg.epsilon_n = meta.epsilon_n;
    cfg.sigma2_hat = meta.sigma2_hat;
    const double global_mean = train.target.mean();
    int mismatches = 0;
    for (std::size_t j = 0; j < covering.rules.size(); ++j) {
      const RuleStats fresh = rule_stats(masks[j], train.target);
      const RuleClass cls = classify_one(fresh, global_mean, cfg);
      const RuleClass expect = covering.rules[j].tag == RuleTag::kSignificant
                                   ? RuleClass::kSignificant
                                   : RuleClass::kInsignificant;
      mismatches += (cls != expect);
    }
    report.checks.push_back({"h3_significance", mismatches == 0, static_cast<double>(mismatches),
                             0.0, "rules whose stored tag disagrees with the re-run test"});
  }

  // H4 per class. The enforced bound is the one the greedy selection
  // guarantees (n^alpha / (1-gamma), see the cardinality argument); the
  // asymptotic comparison values are reported alongside.
  {
    std::vector<std::size_t> sig_members, insig_members;
    for (std::size_t j = 0; j < covering.rules.size(); ++j) {
      (covering.rules[j].tag == RuleTag::kSignificant ? sig_members : insig_members).push_back(j);
    }
    const double beta_bound =
        std::min(1.0 / (meta.beta_n * meta.beta_n), std::pow(n_real, 0.5 - meta.alpha));
    const double eps_bound =
        meta.epsilon_n > 0.0
            ? std::min(1.0 / (meta.epsilon_n * meta.epsilon_n), std::pow(n_real, 0.5 - meta.alpha))
            : std::pow(n_real, 0.5 - meta.alpha);

    const auto add_h4 = [&](const std::string& name, const std::vector<std::size_t>& members,
                            double asymptotic) {
      if (members.empty()) {
        report.checks.push_back({name, true, 0.0, practical_bound, "class empty; vacuous"});
        return;
      }
      const auto [max_r, min_r] = class_redundancy(masks, members, n);
      const double ratio =
          min_r > 0 ? static_cast<double>(max_r) / static_cast<double>(min_r) : 0.0;
      std::ostringstream detail;
      detail << "M=" << max_r << " m=" << min_r << "; asymptotic comparison value "
             << asymptotic;
      report.checks.push_back({name, ratio <= practical_bound, ratio, practical_bound,
                               detail.str()});
    };
    add_h4("h4_redundancy_significant", sig_members, beta_bound);
    add_h4("h4_redundancy_insignificant", insig_members, eps_bound);
  }

  // Selection cardinality bound.
  {
    const auto count = static_cast<double>(covering.rules.size());
    report.checks.push_back({"cardinality", count <= practical_bound, count, practical_bound,
                             "#C_n vs n^alpha / (1 - gamma)"});
  }

  report.all_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const ConditionCheck& c) { return c.pass; });
  return report;
}

nlohmann::json suitability_to_json(const SuitabilityReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const ConditionCheck& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"detail", c.detail}});
  }
  return nlohmann::json{{"all_pass", report.all_pass}, {"checks", checks}};
}

std::string format_suitability(const SuitabilityReport& report) {
  std::ostringstream out;
  for (const ConditionCheck& c : report.checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  value=" << c.value
        << "  bound=" << c.bound << "  (" << c.detail << ")\n";
  }
  out << (report.all_pass ? "all checks passed" : "some checks FAILED") << '\n';
  return out.str();
}

}  // namespace covreg
