#include "covreg/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "covreg/errors.hpp"

namespace covreg {

using nlohmann::json;

namespace {

int feature_index(const std::string& name, const std::vector<std::string>& names) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError("model: unknown feature '" + name + "'");
  return static_cast<int>(it - names.begin());
}

json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double bound_from_json(const json& j, double missing) {
  return j.is_null() ? missing : j.get<double>();
}

std::string tag_to_string(RuleTag tag) {
  return tag == RuleTag::kSignificant ? "significant" : "insignificant";
}

RuleTag tag_from_string(const std::string& s) {
  if (s == "significant") return RuleTag::kSignificant;
  if (s == "insignificant") return RuleTag::kInsignificant;
  throw InputError("model: unknown rule tag '" + s + "'");
}

}  // namespace

json rule_to_json(const Rule& rule, const std::vector<std::string>& feature_names) {
  json arr = json::array();
  for (const auto& [feature, iv] : rule.conditions()) {
    arr.push_back({{"feature", feature_names.at(static_cast<std::size_t>(feature))},
                   {"lo", bound_to_json(iv.lo)},
                   {"hi", bound_to_json(iv.hi)}});
  }
  return arr;
}

Rule rule_from_json(const json& conditions, const std::vector<std::string>& feature_names) {
  Rule rule;
  const double inf = std::numeric_limits<double>::infinity();
  for (const json& c : conditions) {
    rule.constrain(feature_index(c.at("feature").get<std::string>(), feature_names),
                   Interval{bound_from_json(c.at("lo"), -inf), bound_from_json(c.at("hi"), inf)});
  }
  return rule;
}

json stats_to_json(const RuleStats& stats) {
  json j{{"coverage", stats.coverage}, {"support_count", stats.support_count}};
  j["cond_mean"] = stats.cond_mean.has_value() ? json(*stats.cond_mean) : json(nullptr);
  j["cond_var"] = stats.cond_var.has_value() ? json(*stats.cond_var) : json(nullptr);
  return j;
}

RuleStats stats_from_json(const json& j) {
  RuleStats stats;
  stats.coverage = j.at("coverage").get<double>();
  stats.support_count = j.at("support_count").get<std::size_t>();
  if (!j.at("cond_mean").is_null()) stats.cond_mean = j.at("cond_mean").get<double>();
  if (!j.at("cond_var").is_null()) stats.cond_var = j.at("cond_var").get<double>();
  return stats;
}

json covering_to_json(const Covering& covering, const std::vector<std::string>& feature_names) {
  json rules = json::array();
  for (const SelectedRule& r : covering.rules) {
    rules.push_back({{"conditions", rule_to_json(r.rule, feature_names)},
                     {"tag", tag_to_string(r.tag)},
                     {"stats", stats_to_json(r.stats)},
                     {"acceptance_index", r.acceptance_index},
                     {"coverage_at_acceptance", r.coverage_at_acceptance}});
  }
  return json{{"union_coverage", covering.union_coverage}, {"rules", rules}};
}

Covering covering_from_json(const json& j, const std::vector<std::string>& feature_names) {
  Covering covering;
  covering.union_coverage = j.at("union_coverage").get<double>();
  for (const json& r : j.at("rules")) {
    SelectedRule sel;
    sel.rule = rule_from_json(r.at("conditions"), feature_names);
    sel.tag = tag_from_string(r.at("tag").get<std::string>());
    sel.stats = stats_from_json(r.at("stats"));
    sel.acceptance_index = r.at("acceptance_index").get<int>();
    sel.coverage_at_acceptance = r.at("coverage_at_acceptance").get<double>();
    covering.rules.push_back(std::move(sel));
  }
  return covering;
}

namespace {

json generator_to_json(const GeneratorConfig& g) {
  return json{{"method", to_string(g.method)},     {"tree_size", g.tree_size},
              {"max_rules", g.max_rules},          {"n_trees", g.n_trees},
              {"learning_rate", g.learning_rate},  {"subsample", g.subsample},
              {"mtry", g.mtry},                    {"seed", g.seed}};
}

GeneratorConfig generator_from_json(const json& j) {
  GeneratorConfig g;
  g.method = tree_method_from_string(j.at("method").get<std::string>());
  g.tree_size = j.at("tree_size").get<int>();
  g.max_rules = j.at("max_rules").get<int>();
  g.n_trees = j.at("n_trees").get<int>();
  g.learning_rate = j.at("learning_rate").get<double>();
  g.subsample = j.at("subsample").get<double>();
  g.mtry = j.at("mtry").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  return g;
}

json target_stats_to_json(const TargetStats& s) {
  return json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max},
              {"variance", s.variance}};
}

TargetStats target_stats_from_json(const json& j) {
  TargetStats s;
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  s.variance = j.at("variance").get<double>();
  return s;
}

}  // namespace

json model_to_json(const FittedModel& model) {
  const ModelMetadata& m = model.meta;
  json meta{{"n", m.n},
            {"d", m.d},
            {"alpha", m.alpha},
            {"gamma", m.gamma},
            {"l_max", m.l_max},
            {"sigma2_hat", m.sigma2_hat},
            {"beta_n", m.beta_n},
            {"epsilon_n", m.epsilon_n},
            {"seed", m.seed},
            {"generator", generator_to_json(m.generator)},
            {"fallback", m.fallback == Fallback::kZero ? "zero" : "mean"},
            {"feature_names", m.feature_names},
            {"n_rules_generated", m.n_rules_generated},
            {"target_stats", target_stats_to_json(model.estimator.train_stats())}};

  // Cells sorted by signature string for byte-stable output.
  std::vector<std::pair<std::string, Cell>> cells;
  cells.reserve(model.estimator.cells().size());
  for (const auto& [sig, cell] : model.estimator.cells()) cells.emplace_back(sig.to_string(), cell);
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  json cell_arr = json::array();
  for (const auto& [sig, cell] : cells) {
    cell_arr.push_back({{"signature", sig}, {"mean", cell.mean}, {"count", cell.count}});
  }

  return json{{"format", "covreg-model"},
              {"version", 1},
              {"metadata", meta},
              {"covering", covering_to_json(model.estimator.covering(), m.feature_names)},
              {"cells", cell_arr}};
}

FittedModel model_from_json(const json& j) {
  if (j.value("format", "") != "covreg-model") throw InputError("model: unrecognised file format");
  const json& meta = j.at("metadata");

  FittedModel model;
  model.meta.n = meta.at("n").get<Eigen::Index>();
  model.meta.d = meta.at("d").get<Eigen::Index>();
  model.meta.alpha = meta.at("alpha").get<double>();
  model.meta.gamma = meta.at("gamma").get<double>();
  model.meta.l_max = meta.at("l_max").get<int>();
  model.meta.sigma2_hat = meta.at("sigma2_hat").get<double>();
  model.meta.beta_n = meta.at("beta_n").get<double>();
  model.meta.epsilon_n = meta.at("epsilon_n").get<double>();
  model.meta.seed = meta.at("seed").get<std::uint64_t>();
  model.meta.generator = generator_from_json(meta.at("generator"));
  model.meta.fallback =
      meta.at("fallback").get<std::string>() == "mean" ? Fallback::kGlobalMean : Fallback::kZero;
  model.meta.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  model.meta.n_rules_generated = meta.at("n_rules_generated").get<std::size_t>();

  Covering covering = covering_from_json(j.at("covering"), model.meta.feature_names);
  CoveringEstimator::CellTable cells;
  for (const json& c : j.at("cells")) {
    cells.emplace(BitSignature::from_string(c.at("signature").get<std::string>()),
                  Cell{c.at("mean").get<double>(), c.at("count").get<std::size_t>()});
  }
  model.estimator =
      CoveringEstimator::from_parts(std::move(covering), std::move(cells),
                                    target_stats_from_json(meta.at("target_stats")),
                                    model.meta.fallback);
  return model;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  write_json(model_to_json(model), path);
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("model: cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("model: invalid JSON in '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

json significance_report(const ClassifiedRules& classified,
                         const std::vector<std::string>& feature_names) {
  json rules = json::array();
  const auto add = [&](const ScoredRule& r, const std::string& cls, const std::string& reason) {
    json entry{{"conditions", rule_to_json(r.rule, feature_names)},
               {"class", cls},
               {"coverage", r.stats.coverage},
               {"support_count", r.stats.support_count}};
    entry["mean"] = r.stats.cond_mean.has_value() ? json(*r.stats.cond_mean) : json(nullptr);
    entry["var"] = r.stats.cond_var.has_value() ? json(*r.stats.cond_var) : json(nullptr);
    if (!reason.empty()) entry["reason"] = reason;
    rules.push_back(std::move(entry));
  };
  for (const ScoredRule& r : classified.significant) add(r, "S", "");
  for (const ScoredRule& r : classified.insignificant) add(r, "I", "");
  for (const auto& [r, why] : classified.discarded) {
    const char* reason = why == DiscardReason::kCoverage ? "coverage"
                         : why == DiscardReason::kLength  ? "length"
                                                          : "neither";
    add(r, "discarded", reason);
  }
  return json{{"n_significant", classified.significant.size()},
              {"n_insignificant", classified.insignificant.size()},
              {"n_discarded", classified.discarded.size()},
              {"rules", rules}};
}

}  // namespace covreg
