#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/obstacle_solver.hpp"

namespace fracma {

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double c = 0.0;          // exp(intercept)
  double residual = 0.0;   // RMS of the log-log regression
  double r2 = 0.0;
  double slope_stderr = 0.0;
  std::size_t count = 0;
};

enum class Verdict { Case1, Case2, Case3, Unresolved };
const char* verdict_name(Verdict v);

struct PointAnalysis {
  std::size_t node = 0;
  Point x{0.0, 0.0};
  std::vector<double> radii;    // density radii
  std::vector<double> density;
  double density_proxy = 0.0;
  std::optional<ExponentFit> fit;
  Verdict verdict = Verdict::Unresolved;
  double smoothness = 0.0;      // RMS normal residual of a local quadratic graph fit (n = 2)
};

struct FreeBoundaryReport {
  Domain domain;
  double contact_tol = 0.0;
  std::vector<std::uint8_t> contact;
  std::vector<std::size_t> fb_nodes;
  std::vector<double> distance;       // to the free-boundary node set
  std::vector<std::size_t> nearest;   // position in fb_nodes
  std::vector<PointAnalysis> points;  // filled by classify
  bool empty() const { return fb_nodes.empty(); }
};

/// Contact mask {psi - u <= tol}, free-boundary nodes and exact distances.
FreeBoundaryReport extract_fb(const GridField& u, const GridField& psi, double contact_tol);

struct FitOptions {
  double r_lo = 0.0;   // 0 selects 2h
  double r_hi = 0.0;   // 0 selects 32h
  std::size_t min_count = 20;
  /// Restrict to nodes whose nearest free-boundary node is one of these (positions in fb_nodes).
  std::vector<std::size_t> near_points;
  /// Alternatively restrict to a ball around a point.
  std::optional<Point> center;
  double center_radius = 0.0;
};

/// Least-squares fit of log v against log d over non-contact nodes in the window.
ExponentFit fit_exponent(const FreeBoundaryReport& rep, const GridField& v, const FitOptions& opts = {});

/// Per-node centered-difference gradient modulus (one-sided at the box edges).
std::vector<double> gradient_modulus(const GridField& v);

/// Geometric radii rho_max, rho_max/2, ... down to r_min.
std::vector<double> rho_grid(double rho_max, double r_min);

struct ThetaProfile {
  std::vector<double> rho;    // decreasing
  std::vector<double> gradmax;
  std::vector<double> ratio;  // gradmax / rho^{s+alpha}
  std::vector<double> theta;  // sup of ratio over radii >= rho
  std::vector<std::string> warnings;
};

ThetaProfile theta_profile(const GridField& v, const std::vector<double>& grad, const Point& x0, double s,
                           double alpha, std::vector<double> rho);
/// theta(x0, r): sup over grid radii >= r of the gradient ratio.
double theta(const GridField& v, const Point& x0, double r, double s, double alpha, const std::vector<double>& rho);

/// Sub-cell location of the free boundary next to a free-boundary node, from
/// the zero of v^{1/(1+s)} along the axis pointing into the non-contact set.
Point refine_base_point(const GridField& v, const FreeBoundaryReport& rep, std::size_t fb_index, double s);

struct BlowUpOptions {
  int K = 8;
  double r_min_cells = 4.0;
  double nu_factor = 2.0;
  double k_lo = 0.2, k_hi = 1.2;
  int angle_steps = 360;
};

struct BlowUpFit {
  Point x0{0.0, 0.0};
  double s = 0.0, alpha = 0.0;
  bool regular = false;
  double nu_min = 0.0;
  std::string note;
  ThetaProfile profile;
  std::vector<double> r;          // retained radii, decreasing
  std::vector<double> theta_r;
  std::vector<double> K_fit;      // best-fit K for each retained radius
  std::vector<double> e_fit;      // best-fit direction angle for each retained radius
  std::vector<double> misfit;     // sup misfit on B_1 of each radius to its own best fit
  std::vector<double> misfit_final;  // sup misfit on B_1 to the profile fitted at the last radius
  double K0 = 0.0;                // limit coefficient of the theta-normalized rescalings
  double K_amplitude = 0.0;       // same fit without the theta normalization
  Point e0{1.0, 0.0};
  std::vector<double> grad_b1;    // |grad v_r|_{L^inf(B_1)}
  std::vector<std::vector<std::pair<double, double>>> grad_bR;  // (R, |grad v_r|_{L^inf(B_R)})
  std::vector<std::vector<std::array<double, 3>>> samples;      // (y0, y1, v_r(y)) on B_2
};

BlowUpFit blow_up(const GridField& v, const Point& x0, double s, double alpha, const BlowUpOptions& opts = {});

/// Sup misfit of samples (y, value) on B_1 against K (e.y)_+^{1+s}.
double profile_misfit(const std::vector<std::array<double, 3>>& samples, double K, const Point& e, double s, int n);

struct ClassifyOptions {
  double rho_dens = 0.2;
  double rho_dens_low = 0.05;
  double tol_exp = 0.15;
  double fit_radius_cells = 32.0;
  std::size_t min_count = 20;
};

/// Verdict per free-boundary node (optionally a subset).
void classify(FreeBoundaryReport& rep, const GridField& v, double s, double alpha, const ClassifyOptions& opts = {},
              const std::vector<std::size_t>& subset = {});

struct DiagnosticsReport {
  bool ok = true;
  double normalizer = 1.0;
  double min_v = 0.0;
  double max_grad = 0.0;     // after normalization
  double min_hessian = 0.0;  // after normalization
  double min_pucci_margin = 0.0;
  std::size_t pucci_samples = 0;
  std::vector<std::string> failures;
};

/// Rescaled-system checks on v = psi - u.
DiagnosticsReport diagnostics(const SolveReport& rep, const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order,
                              const MatrixAtlas& atlas, const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              double tol, std::size_t sample_stride = 7);

double default_alpha(double s);

nlohmann::json fb_report_to_json(const FreeBoundaryReport& rep);
nlohmann::json blowup_to_json(const BlowUpFit& fit);
nlohmann::json fit_to_json(const ExponentFit& fit);

}  // namespace fracma
