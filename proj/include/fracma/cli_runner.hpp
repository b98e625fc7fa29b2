#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/config.hpp"
#include "fracma/verify_suite.hpp"

namespace fracma {

/// Process exit status for each failure category.
int exit_code(ErrorKind kind);

struct SolveOutcome {
  ContinuationResult continuation;
  ValidationReport validation;
  PsiSpec psi;          // with the relative level resolved
  double ubar_gap = 0.0; // max(ubar - phi), the scale of a relative level
  MatrixAtlas final_atlas;
};

/// validate -> continuation, without touching the filesystem.
SolveOutcome run_solve(const RunConfig& cfg);

/// Artifacts: report.json, config.json, u.csv, u.bin, v.csv, operator.csv.
void cmd_solve(const RunConfig& cfg, std::ostream& log);

/// Reads the solve artifacts in dir (or builds a synthetic fixture) and writes
/// fb_report.json, d_vs_v.csv, theta.csv, density.csv.
void cmd_analyze(const RunConfig& cfg, const std::string& dir, std::ostream& log);

/// Runs the invariant suite and writes verify_report.json. Returns the report
/// so callers can map a failure to its property id.
SuiteReport cmd_verify(const RunConfig& cfg, std::ostream& log);

/// Prints the named oracle's reference values as JSON.
nlohmann::json cmd_oracle(const std::string& kind, const std::vector<std::string>& params, std::ostream& out);

/// Convergence tables over one config key; writes sweep.csv and sweep.json.
nlohmann::json cmd_sweep(const nlohmann::json& doc, const std::vector<std::string>& overrides, std::ostream& log);

/// Runs body, reporting errors on err and mapping them to exit codes.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace fracma
