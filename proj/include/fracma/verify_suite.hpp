#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/config.hpp"

namespace fracma {

struct PropertyResult {
  std::string id;
  bool pass = true;
  bool skipped = false;
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();
};

struct SuiteReport {
  std::vector<PropertyResult> properties;
  bool ok() const;
  const PropertyResult* first_failure() const;
  nlohmann::json to_json() const;
};

struct BatteryInstance {
  std::string name;
  Domain domain;
  double s = 0.75;
  PhiSpec phi;
  PsiSpec psi;
  int n_a = 1, n_theta = 1;
};

/// Small fixed instances; level 0 is the coarse resolution, level 1 doubles m.
/// Anisotropic cone used by the 2D instances; its level sets have aspect ratio sqrt(10).
PhiSpec elliptic_phi();

std::vector<BatteryInstance> battery_instances(const std::string& battery, int level);

/// Solves one battery instance through the same path the suite uses.
SolveReport solve_instance(const BatteryInstance& inst, const SolveConfig& cfg);

struct BudgetCheck {
  RegularityBudget budget;
  double lip_u = 0.0, sc_u = 0.0;            // on the half box
  double lip_u_full = 0.0, sc_u_full = 0.0;  // whole box, boundary layer included
  double sep = 0.0;             // min(u - phi)
  double gap_sup = 0.0;         // max |u - phi|
  double lower_margin = 0.0;    // min over nodes of D u - (u - phi)
  double offcontact_defect = 0.0;  // max |D u - (u - phi)| off contact
  double upper_max = 0.0;       // max D u
  double upper_bound = 0.0;     // C (1 + |u - phi|_inf)
  double bound_constant = 0.0;
  bool inside_box = true;
  Box box;
};

/// Budget, separation, contact-box and operator-bound data for a solved instance.
BudgetCheck budget_check(const BatteryInstance& inst, const SolveReport& rep, const SolveConfig& cfg);

/// Runs the invariant suite; cfg.mutation injects one defect.
SuiteReport run_verify_suite(const RunConfig& cfg);

}  // namespace fracma
