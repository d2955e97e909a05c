#pragma once

#include "dfb/io.hpp"

namespace dfb {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = false;
};

/**
 * Scenario-scale property battery: structural identities that need no
 * external oracle (exact segment algebra, gradient pairings, noise moments,
 * worker-count determinism, change-of-measure normalisation, martingale
 * telescoping, two-estimator agreement for the gradient mass, pricing
 * consistency when the scenario carries a market).
 */
VerifyReport run_verification(const Scenario& scenario);

std::string verify_report_json(const VerifyReport& report, const Scenario& scenario);

}  // namespace dfb
