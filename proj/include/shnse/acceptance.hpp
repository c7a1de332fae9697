// Acceptance suite: one pass/fail verdict per criterion on the reference configuration.
#pragma once

#include "shnse/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace shnse {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> details;  // measured values and informational lines
};

struct AcceptanceOptions {
  int threads = 1;
  std::string work_dir = "acceptance_work";  // spectrum cache and reproducibility outputs
  std::vector<int> only;                     // empty: all criteria
  std::ostream* log = nullptr;
};

// 2-D unit square, 32^2 cells, 128 modes, nu = 1e-2, T = 1, dt = 1e-3, seed 1.
ExperimentPlan reference_plan();

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

// "criterion N: PASS|FAIL <title>" followed by indented detail lines.
std::string format_result(const CriterionResult& r);

}  // namespace shnse
