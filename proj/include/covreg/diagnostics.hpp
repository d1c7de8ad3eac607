#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "covreg/model_io.hpp"

namespace covreg {

struct ConditionCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;  // measured quantity
  double bound = 0.0;  // threshold it is compared against
  std::string detail;
};

struct SuitabilityReport {
  std::vector<ConditionCheck> checks;
  bool all_pass = false;
};

// Empirical suitability checks of a fitted model against its training data:
//   h1           min rule coverage, strictly above n^(-alpha)
//   h2           uncovered mass Q_n(c^c), at most n^(alpha - 1/2)
//   h3           stored significant/insignificant tags re-verified, 0 mismatches
//   h4_s, h4_i   redundancy ratio M/m per tag class; the asymptotic
//                comparison values beta^-2 ^ n^(1/2-alpha) (resp. eps^-2) are
//                reported, the enforced bound is the selection guarantee
//                n^alpha / (1 - gamma)
//   cardinality  #C_n at most n^alpha / (1 - gamma)
SuitabilityReport diagnose(const FittedModel& model, const Dataset& train);

nlohmann::json suitability_to_json(const SuitabilityReport& report);
std::string format_suitability(const SuitabilityReport& report);

}  // namespace covreg
