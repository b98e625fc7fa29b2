#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/fb_analysis.hpp"

namespace fracma {

struct AnalysisConfig {
  double alpha = 0.0;          // 0 selects min(0.1, (1 - s) / 2)
  double fit_lo_cells = 2.0;
  double fit_hi_cells = 32.0;
  std::size_t min_count = 20;
  double rho_dens = 0.2;
  double rho_dens_low = 0.05;
  double tol_exp = 0.15;
  int blowup_points = 2;       // case1 points passed to the blow-up fit
  BlowUpOptions blowup{};
  int diagnostics_stride = 7;
  std::string synthetic = "none";  // none | power_law | profile
  double synthetic_exponent = 1.75;
  double synthetic_coefficient = 1.0;
  double synthetic_angle = 0.0;    // direction of e for the profile fixture (radians)
};

struct RunConfig {
  Domain domain = Domain::make(1, 8.0, 256);
  double s = 0.75;
  PhiSpec phi{};
  PsiSpec psi{};
  /// When true psi.level is read as a fraction of max(ubar - phi).
  bool psi_level_relative = false;
  SolveConfig solver{};
  AnalysisConfig analysis{};
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_binary = true;
  bool deterministic = true;
  int workers = 1;
  std::string mutation = "none";   // none | flip_weight | bad_determinant | skip_projection
  std::string battery = "n1";      // n1 | full
  std::string sweep_param = "domain.m";
  std::vector<double> sweep_values{};
  std::string sweep_kind = "operator";  // operator | solve
};

nlohmann::json config_to_json(const RunConfig& c);
/// Strict: unknown keys and type mismatches are Config errors naming the field.
RunConfig config_from_json(const nlohmann::json& j);
/// Parses text; syntax errors report line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
/// Applies key.path=value onto a config document; values parse as JSON when possible, else as strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);
/// Parses, overrides, validates and checks the result.
RunConfig resolve_config(const nlohmann::json& doc, const std::vector<std::string>& overrides);

}  // namespace fracma
