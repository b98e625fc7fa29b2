#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/nonlocal_operator.hpp"

namespace fracma {

struct SolveConfig {
  double tol_residual = 1e-8;
  int max_policy_iterations = 100;
  double linear_tol = 1e-10;      // absolute 2-norm target for each frozen-policy solve
  int relaxation_sweeps = 20000;  // projected Gauss-Seidel budget when policies cycle
  double eps0 = 0.5;
  int levels = 4;                 // eps_k = eps0 * 2^-k for k < levels
  double tol_cont = 1e-6;
  bool stop_on_lambda = true;
  double contact_tol = 0.0;       // 0 selects 10 * tol_residual
  int n_a = 2;                    // atlas eigenvalue count at eps0
  int n_theta = 16;
  StencilOptions quadrature{};
  bool skip_projection = false;   // defect injection for the verification suite
  bool force_relaxation = false;  // run the Gauss-Seidel path directly (testing)

  double effective_contact_tol() const { return contact_tol > 0.0 ? contact_tol : 10.0 * tol_residual; }
  void check() const;
};

struct SolveReport {
  GridField u;
  PolicyField policy;
  std::vector<std::uint8_t> contact;
  std::vector<double> residual_history;
  double residual = 0.0;
  int iterations = 0;
  bool used_relaxation = false;
  double eps = 1.0;
  std::size_t atlas_size = 0;
  double ellipticity_witness = 1.0;
  bool lambda_regime = false;
  std::vector<double> operator_value;  // D^eps u at the returned iterate
  std::vector<std::uint32_t> argmin;
  double normalizer = 1.0;             // scale that brings psi - u to unit Lipschitz/semiconvexity
};

/// Grid-level complementarity data: min(psi - u, D u - u + phi) = 0.
struct GridProblem {
  const AtlasOperator* op = nullptr;  // built with the exterior closure of u
  std::vector<double> phi;
  std::vector<double> psi;            // +inf where unconstrained
  Closure closure{};                  // attached to the returned field
};

/// Howard iteration on the joint (matrix, mode) policy, from initial guess u.
SolveReport solve_grid(const GridProblem& prob, std::vector<double> u, const SolveConfig& cfg);

struct SolverSetup {
  Domain domain;
  FracOrder order;
  MatrixAtlas atlas;
  std::vector<std::shared_ptr<const KernelStencil>> stencils;
  std::shared_ptr<AtlasOperator> op;  // closure phi
  std::vector<double> phi;
};

SolverSetup make_setup(const PhiSpec& phi, const FracOrder& order, const MatrixAtlas& atlas, const Domain& domain,
                       const StencilOptions& quad, const SolverSetup* reuse = nullptr);

SolveReport solve_unconstrained(const PhiSpec& phi, const FracOrder& order, const MatrixAtlas& atlas,
                                const Domain& domain, const SolveConfig& cfg);
SolveReport solve_obstacle(const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order, const MatrixAtlas& atlas,
                           const Domain& domain, const SolveConfig& cfg);

struct Replay {
  SolverSetup setup;
  SolveReport report;
};

/// Re-evaluates a stored obstacle solution on a given atlas: policy, contact
/// mask, witness and normalizer, without changing converged values.
Replay replay_solution(const std::vector<double>& u, const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order,
                       const MatrixAtlas& atlas, const Domain& domain, const SolveConfig& cfg);

struct ContinuationResult {
  std::vector<SolveReport> levels;
  std::vector<double> history;  // sup-norm change between consecutive levels
  GridField u0;
  double separation = 0.0;      // min(u0 - phi) over nodes
  std::string stop_reason;
};

/// eps-continuation; psi may be absent for the unconstrained problem.
ContinuationResult continuation(const PhiSpec& phi, const std::optional<PsiSpec>& psi, const FracOrder& order,
                                const Domain& domain, const SolveConfig& cfg);

/// Semiconvexity constant: max over nodes of the negative part of second
/// differences along axes and diagonals divided by |y|^2.
double discrete_semiconvexity(const GridField& f);

nlohmann::json report_to_json(const SolveReport& rep, const MatrixAtlas* atlas = nullptr);

}  // namespace fracma
