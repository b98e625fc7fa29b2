#include "fracma/obstacle_solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracma {

void SolveConfig::check() const {
  if (!(tol_residual > 0.0) || !(linear_tol > 0.0)) fail(ErrorKind::Config, "solver tolerances must be positive");
  if (!(tol_cont >= 0.0)) fail(ErrorKind::Config, "tol_cont must be nonnegative (0 runs the whole schedule)");
  if (max_policy_iterations < 1 || relaxation_sweeps < 0) fail(ErrorKind::Config, "iteration budgets must be positive");
  if (!(eps0 > 0.0) || eps0 > 1.0) fail(ErrorKind::Config, "continuation eps0 must lie in (0, 1]");
  if (levels < 1) fail(ErrorKind::Config, "continuation needs at least one level");
  if (contact_tol < 0.0) fail(ErrorKind::Config, "contact_tol must be nonnegative");
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Frozen-policy system, rows scaled to a positive diagonal:
//   contact:  u_i = psi_i
//   equation: (1 - d_A) u_i - sum_k K^A_ik u_k = phi_i + ext^A_i
void assemble(const GridProblem& prob, const PolicyField& pol, SpMat& M, Eigen::VectorXd& b) {
  const std::size_t N = prob.phi.size();
  std::vector<Eigen::Index> nnz(N, 1);
  for (std::size_t i = 0; i < N; ++i) {
    if (pol.mode[i] == Mode::Contact) continue;
    prob.op->op(pol.index[i]).for_each_inside(i, [&](std::size_t, double) { ++nnz[i]; });
  }
  Eigen::Index total = 0;
  for (auto c : nnz) total += c;
  M.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  M.reserve(total);
  b.resize(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    M.startVec(row);
    if (pol.mode[i] == Mode::Contact) {
      M.insertBack(row, row) = 1.0;
      b(row) = prob.psi[i];
      continue;
    }
    const DiscreteOperator& op = prob.op->op(pol.index[i]);
    const double diag = 1.0 - op.diagonal();
    bool placed = false;
    op.for_each_inside(i, [&](std::size_t k, double coef) {
      if (!placed && k > i) {
        M.insertBack(row, row) = diag;
        placed = true;
      }
      M.insertBack(row, static_cast<Eigen::Index>(k)) = -coef;
    });
    if (!placed) M.insertBack(row, row) = diag;
    b(row) = prob.phi[i] + op.exterior(i);
  }
  M.finalize();
}

void linear_solve(const SpMat& M, const Eigen::VectorXd& b, std::vector<double>& u, double tol) {
  Eigen::Map<Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
  Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
  solver.compute(M);
  const double bn = std::max(1.0, b.norm());
  solver.setTolerance(std::max(1e-15, tol / bn));
  solver.setMaxIterations(5000);
  Eigen::VectorXd guess = x;
  Eigen::VectorXd sol = solver.solveWithGuess(b, guess);
  const double res = (M * sol - b).norm();
  if (solver.info() != Eigen::Success || !(res <= 10.0 * tol)) {
    Eigen::SparseMatrix<double> C = M;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(C);
    if (lu.info() != Eigen::Success) fail(ErrorKind::NonConvergence, "frozen-policy system could not be factorized");
    sol = lu.solve(b);
  }
  x = sol;
}

struct Evaluation {
  std::vector<double> Du;
  std::vector<std::uint32_t> arg;
  std::vector<double> residual;
  double norm = 0.0;
};

Evaluation evaluate(const GridProblem& prob, const std::vector<double>& u) {
  Evaluation ev;
  OperatorEval oe = prob.op->inf(u);
  ev.Du = std::move(oe.value);
  ev.arg = std::move(oe.argmin);
  ev.residual.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = std::min(prob.psi[i] - u[i], ev.Du[i] - u[i] + prob.phi[i]);
    ev.residual[i] = r;
    ev.norm = std::max(ev.norm, std::abs(r));
  }
  return ev;
}

// Projected Gauss-Seidel on the min-form, lexicographic sweeps.
bool relax(const GridProblem& prob, std::vector<double>& u, const SolveConfig& cfg, SolveReport& rep) {
  const std::size_t N = u.size();
  for (int sweep = 0; sweep < cfg.relaxation_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < prob.op->size(); ++k) {
        const DiscreteOperator& op = prob.op->op(k);
        double acc = prob.phi[i] + op.exterior(i);
        op.for_each_inside(i, [&](std::size_t j, double coef) { acc += coef * u[j]; });
        best = std::min(best, acc / (1.0 - op.diagonal()));
      }
      if (!cfg.skip_projection) best = std::min(best, prob.psi[i]);
      change = std::max(change, std::abs(best - u[i]));
      u[i] = best;
    }
    // sweep change bounds the residual up to the diagonal scale; check properly now and then
    if (change < 0.1 * cfg.tol_residual || sweep % 50 == 49) {
      Evaluation ev = evaluate(prob, u);
      rep.residual_history.push_back(ev.norm);
      if (ev.norm <= cfg.tol_residual) return true;
    }
  }
  return false;
}

}  // namespace

SolveReport solve_grid(const GridProblem& prob, std::vector<double> u, const SolveConfig& cfg) {
  cfg.check();
  const std::size_t N = prob.phi.size();
  if (prob.psi.size() != N || u.size() != N) fail(ErrorKind::Internal, "problem arrays have inconsistent sizes");
  const Domain& dom = prob.op->op(0).domain();
  const MatrixAtlas& atlas = prob.op->atlas();
  const std::uint32_t id = static_cast<std::uint32_t>(atlas.identity_index());

  SolveReport rep;
  rep.eps = atlas.eps;
  rep.atlas_size = atlas.size();
  PolicyField pol;
  pol.index.assign(N, id);
  pol.mode.assign(N, Mode::Equation);
  std::vector<PolicyField> seen;
  bool converged = false;

  if (cfg.force_relaxation) {
    rep.used_relaxation = true;
    converged = relax(prob, u, cfg, rep);
  }
  for (int it = 0; !converged && it <= cfg.max_policy_iterations; ++it) {
    Evaluation ev = evaluate(prob, u);
    rep.residual_history.push_back(ev.norm);
    rep.iterations = it;
    // the defect hook ignores the obstacle entirely, so its residual is the equation's
    if (cfg.skip_projection) {
      double r = 0.0;
      for (std::size_t i = 0; i < N; ++i) r = std::max(r, std::abs(ev.Du[i] - u[i] + prob.phi[i]));
      rep.residual_history.back() = r;
      if (r <= cfg.tol_residual) {
        converged = true;
        break;
      }
    } else if (ev.norm <= cfg.tol_residual) {
      converged = true;
      break;
    }
    if (it == cfg.max_policy_iterations) break;
    PolicyField next;
    next.index.resize(N);
    next.mode.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double eq = ev.Du[i] - u[i] + prob.phi[i];
      const bool contact = !cfg.skip_projection && prob.psi[i] - u[i] < eq;
      next.mode[i] = contact ? Mode::Contact : Mode::Equation;
      next.index[i] = contact ? id : ev.arg[i];
    }
    const bool cycled = std::any_of(seen.begin(), seen.end(), [&](const PolicyField& p) {
      return p.index == next.index && p.mode == next.mode;
    });
    if (cycled) {
      rep.used_relaxation = true;
      converged = relax(prob, u, cfg, rep);
      break;
    }
    seen.push_back(next);
    pol = next;
    SpMat M;
    Eigen::VectorXd b;
    assemble(prob, pol, M, b);
    linear_solve(M, b, u, cfg.linear_tol);
  }
  if (!converged) {
    std::ostringstream os;
    os << "policy iteration did not converge; residual history:";
    for (double r : rep.residual_history) os << ' ' << r;
    fail(ErrorKind::NonConvergence, os.str());
  }
  if (!cfg.skip_projection) {
    for (std::size_t i = 0; i < N; ++i) u[i] = std::min(u[i], prob.psi[i]);
  }

  Evaluation ev = evaluate(prob, u);
  rep.residual = rep.residual_history.empty() ? ev.norm : rep.residual_history.back();
  rep.operator_value = ev.Du;
  rep.argmin = ev.arg;
  const double ctol = cfg.effective_contact_tol();
  rep.contact.assign(N, 0);
  rep.policy.index.assign(N, id);
  rep.policy.mode.assign(N, Mode::Equation);
  double witness = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    if (prob.psi[i] - u[i] <= ctol) {
      rep.contact[i] = 1;
      rep.policy.mode[i] = Mode::Contact;
    } else {
      rep.policy.index[i] = ev.arg[i];
      witness = std::min(witness, atlas.entries[ev.arg[i]].a);
    }
  }
  rep.ellipticity_witness = std::isfinite(witness) ? witness : 1.0;
  rep.lambda_regime = rep.ellipticity_witness > atlas.eps * (1.0 + 1e-12);
  rep.u = GridField(dom, u, prob.closure);
  return rep;
}

SolverSetup make_setup(const PhiSpec& phi, const FracOrder& order, const MatrixAtlas& atlas, const Domain& domain,
                       const StencilOptions& quad, const SolverSetup* reuse) {
  phi.check(domain.n);
  SolverSetup s;
  s.domain = domain;
  s.order = order;
  s.atlas = atlas;
  s.stencils = build_atlas_stencils(order, atlas, domain, quad, reuse ? &reuse->stencils : nullptr,
                                    reuse ? &reuse->atlas : nullptr);
  s.op = std::make_shared<AtlasOperator>(atlas, s.stencils, domain, phi.closure(), reuse ? reuse->op.get() : nullptr);
  s.phi.resize(domain.size());
  for (std::size_t i = 0; i < s.phi.size(); ++i) s.phi[i] = phi.value(domain.node(i), domain.n);
  return s;
}

namespace {

std::vector<double> psi_values(const PhiSpec& phi, const PsiSpec* psi, const Domain& d) {
  std::vector<double> v(d.size(), std::numeric_limits<double>::infinity());
  if (psi) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = psi->value(phi, d.node(i), d.n);
  }
  return v;
}

std::vector<double> initial_guess(const std::vector<double>& phi, const std::vector<double>& psi) {
  double gap = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (std::isfinite(psi[i])) gap = std::max(gap, psi[i] - phi[i]);
  }
  std::vector<double> u(phi.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::min(psi[i], phi[i] + gap);
  return u;
}

void finish(SolveReport& rep, const PhiSpec& phi, const PsiSpec* psi) {
  rep.u = rep.u.with_closure(phi.closure());
  if (!psi) return;
  const Domain& d = rep.u.domain();
  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = psi->value(phi, d.node(i), d.n) - rep.u[i];
  const GridField vf(d, v, Closure::zero());
  rep.normalizer = std::max({1e-300, discrete_lipschitz(vf), discrete_semiconvexity(vf)});
}

}  // namespace

SolveReport solve_unconstrained(const PhiSpec& phi, const FracOrder& order, const MatrixAtlas& atlas,
                                const Domain& domain, const SolveConfig& cfg) {
  SolverSetup s = make_setup(phi, order, atlas, domain, cfg.quadrature);
  GridProblem prob{s.op.get(), s.phi, psi_values(phi, nullptr, domain), phi.closure()};
  SolveReport rep = solve_grid(prob, s.phi, cfg);
  finish(rep, phi, nullptr);
  return rep;
}

SolveReport solve_obstacle(const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order, const MatrixAtlas& atlas,
                           const Domain& domain, const SolveConfig& cfg) {
  SolverSetup s = make_setup(phi, order, atlas, domain, cfg.quadrature);
  GridProblem prob{s.op.get(), s.phi, psi_values(phi, &psi, domain), phi.closure()};
  SolveReport rep = solve_grid(prob, initial_guess(prob.phi, prob.psi), cfg);
  finish(rep, phi, &psi);
  return rep;
}

Replay replay_solution(const std::vector<double>& u, const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order,
                       const MatrixAtlas& atlas, const Domain& domain, const SolveConfig& cfg) {
  if (u.size() != domain.size()) fail(ErrorKind::Validation, "stored field does not match the configured grid");
  Replay r{make_setup(phi, order, atlas, domain, cfg.quadrature), {}};
  GridProblem prob{r.setup.op.get(), r.setup.phi, psi_values(phi, &psi, domain), phi.closure()};
  r.report = solve_grid(prob, u, cfg);
  finish(r.report, phi, &psi);
  return r;
}

ContinuationResult continuation(const PhiSpec& phi, const std::optional<PsiSpec>& psi, const FracOrder& order,
                                const Domain& domain, const SolveConfig& cfg) {
  cfg.check();
  ContinuationResult out;
  const PsiSpec* ps = psi ? &*psi : nullptr;
  MatrixAtlas atlas = build_atlas(domain.n, cfg.eps0, cfg.n_a, cfg.n_theta);
  SolverSetup setup = make_setup(phi, order, atlas, domain, cfg.quadrature);
  const std::vector<double> psiv = psi_values(phi, ps, domain);
  std::vector<double> u = initial_guess(setup.phi, psiv);
  out.stop_reason = "schedule exhausted";
  for (int k = 0; k < cfg.levels; ++k) {
    if (k > 0) {
      MatrixAtlas next = refine_atlas(setup.atlas, cfg.eps0 * std::ldexp(1.0, -k));
      if (next.size() == setup.atlas.size()) {
        out.stop_reason = "atlas unchanged under refinement";
        break;
      }
      setup = make_setup(phi, order, next, domain, cfg.quadrature, &setup);
    }
    GridProblem prob{setup.op.get(), setup.phi, psiv, phi.closure()};
    SolveReport rep = solve_grid(prob, u, cfg);
    finish(rep, phi, ps);
    if (!out.levels.empty()) {
      const GridField& prev = out.levels.back().u;
      double diff = 0.0, rise = 0.0;
      std::size_t worst = 0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        diff = std::max(diff, std::abs(rep.u[i] - prev[i]));
        if (rep.u[i] - prev[i] > rise) {
          rise = rep.u[i] - prev[i];
          worst = i;
        }
      }
      if (rise > 1e-8) {
        std::ostringstream os;
        os << "eps-family not monotone: u rose by " << rise << " at node " << worst << " between eps "
           << out.levels.back().eps << " and " << rep.eps;
        fail(ErrorKind::Invariant, os.str());
      }
      out.history.push_back(diff);
      u = rep.u.values();
      out.levels.push_back(std::move(rep));
      if (cfg.tol_cont > 0.0 && diff <= cfg.tol_cont) {
        out.stop_reason = "continuation tolerance reached";
        break;
      }
    } else {
      u = rep.u.values();
      out.levels.push_back(std::move(rep));
    }
    if (cfg.stop_on_lambda && out.levels.back().lambda_regime) {
      out.stop_reason = "active matrices clear of the truncation";
      break;
    }
  }
  out.u0 = out.levels.back().u;
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) sep = std::min(sep, out.u0[i] - setup.phi[i]);
  out.separation = sep;
  if (!(sep > 0.0)) fail(ErrorKind::Invariant, "degeneracy reached: min(u0 - phi) is not positive");
  return out;
}

double discrete_semiconvexity(const GridField& f) {
  const Domain& d = f.domain();
  const double h = d.h();
  static const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  const int nd = d.n == 1 ? 1 : 4;
  double best = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int k = 0; k < nd; ++k) {
      auto p = d.shift(i, dirs[k][0], dirs[k][1]);
      auto q = d.shift(i, -dirs[k][0], -dirs[k][1]);
      if (!p || !q) continue;
      const double len2 = (dirs[k][0] * dirs[k][0] + dirs[k][1] * dirs[k][1]) * h * h;
      best = std::max(best, -(f[*p] + f[*q] - 2.0 * f[i]) / len2);
    }
  }
  return best;
}

nlohmann::json report_to_json(const SolveReport& rep, const MatrixAtlas* atlas) {
  nlohmann::json j;
  j["eps"] = rep.eps;
  j["atlas_size"] = rep.atlas_size;
  j["iterations"] = rep.iterations;
  j["residual"] = rep.residual;
  j["residual_history"] = rep.residual_history;
  j["used_relaxation"] = rep.used_relaxation;
  j["ellipticity_witness"] = rep.ellipticity_witness;
  j["lambda_regime"] = rep.lambda_regime;
  j["normalizer"] = rep.normalizer;
  std::size_t nc = 0;
  for (auto c : rep.contact) nc += c;
  j["contact_nodes"] = nc;
  if (atlas) j["atlas"] = atlas_to_json(*atlas);
  return j;
}

}  // namespace fracma
