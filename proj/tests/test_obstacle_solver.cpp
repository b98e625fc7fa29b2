#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fracma/obstacle_solver.hpp"
#include "fracma/verify_suite.hpp"

using namespace fracma;

namespace {

struct Instance {
  Domain domain = Domain::make(1, 8.0, 128);
  FracOrder order = FracOrder::make(1, 0.75);
  PhiSpec phi{};
  PsiSpec psi{};
};

SolveReport solve(const Instance& in, const SolveConfig& cfg = {}) {
  return solve_obstacle(in.phi, in.psi, in.order, build_atlas(in.domain.n, cfg.eps0, 1, 1), in.domain, cfg);
}

double phi_at(const Instance& in, std::size_t i) { return in.phi.value(in.domain.node(i), in.domain.n); }
double psi_at(const Instance& in, std::size_t i) { return in.psi.value(in.phi, in.domain.node(i), in.domain.n); }

}  // namespace

TEST_CASE("an inactive obstacle reproduces the unconstrained solution") {
  Instance in;
  in.psi.level = 100.0;
  const SolveConfig cfg;
  const SolveReport u = solve(in, cfg);
  const SolveReport ubar = solve_unconstrained(in.phi, in.order, build_atlas(1, cfg.eps0, 1, 1), in.domain, cfg);
  for (std::size_t i = 0; i < in.domain.size(); ++i) {
    CHECK(std::abs(u.u[i] - ubar.u[i]) <= 1e-8);
    CHECK(u.contact[i] == 0);
  }
}

TEST_CASE("complementarity holds at a converged solution") {
  Instance in;
  SolveConfig cfg;
  const SolveReport r = solve(in, cfg);
  CHECK(r.residual <= cfg.tol_residual);
  std::size_t contacts = 0;
  for (std::size_t i = 0; i < in.domain.size(); ++i) {
    const double g = r.u[i] - phi_at(in, i);
    const double defect = r.operator_value[i] - g;
    CHECK(g > 0.0);
    CHECK(r.u[i] <= psi_at(in, i));
    CHECK(defect >= -cfg.tol_residual);
    if (r.contact[i]) {
      ++contacts;
      CHECK(psi_at(in, i) - r.u[i] <= cfg.effective_contact_tol());
    } else {
      CHECK(std::abs(defect) <= cfg.tol_residual);
    }
  }
  CHECK(contacts > 0);
  // the contact set is a neighbourhood of the origin
  CHECK(r.contact[in.domain.m / 2] == 1);
  CHECK(r.contact[0] == 0);
}

TEST_CASE("contact lies where the obstacle is below the unconstrained solution") {
  Instance in;
  const SolveConfig cfg;
  const SolveReport r = solve(in, cfg);
  const SolveReport ubar = solve_unconstrained(in.phi, in.order, build_atlas(1, cfg.eps0, 1, 1), in.domain, cfg);
  for (std::size_t i = 0; i < in.domain.size(); ++i) {
    CHECK(ubar.u[i] >= phi_at(in, i));
    CHECK(r.u[i] <= ubar.u[i] + 1e-9);
    if (r.contact[i]) CHECK(psi_at(in, i) <= ubar.u[i] + cfg.effective_contact_tol());
  }
}

TEST_CASE("solutions are ordered like their obstacles") {
  Instance lo, hi;
  lo.psi.level = 0.45;
  hi.psi.level = 0.5;
  const SolveReport a = solve(lo), b = solve(hi);
  for (std::size_t i = 0; i < lo.domain.size(); ++i) CHECK(a.u[i] <= b.u[i] + 1e-8);
}

TEST_CASE("relaxation path agrees with the policy iteration") {
  Instance in;
  SolveConfig cfg;
  const SolveReport a = solve(in, cfg);
  cfg.force_relaxation = true;
  const SolveReport b = solve(in, cfg);
  CHECK(b.used_relaxation);
  for (std::size_t i = 0; i < in.domain.size(); ++i) CHECK(std::abs(a.u[i] - b.u[i]) <= 1e-6);
}

TEST_CASE("replay reproduces the stored solution") {
  Instance in;
  const SolveConfig cfg;
  const MatrixAtlas at = build_atlas(1, cfg.eps0, 1, 1);
  const SolveReport r = solve(in, cfg);
  const Replay rp = replay_solution(r.u.values(), in.phi, in.psi, in.order, at, in.domain, cfg);
  CHECK(rp.report.residual <= cfg.tol_residual);
  CHECK(rp.report.contact == r.contact);
  for (std::size_t i = 0; i < in.domain.size(); ++i) CHECK(std::abs(rp.report.u[i] - r.u[i]) <= 1e-9);
}

TEST_CASE("one-dimensional continuation stops after the first level") {
  Instance in;
  const ContinuationResult cr = continuation(in.phi, in.psi, in.order, in.domain, SolveConfig{});
  CHECK(cr.levels.size() == 1);
  CHECK(cr.history.empty());
  CHECK(cr.stop_reason == "active matrices clear of the truncation");
  CHECK(cr.separation > 0.0);
  SolveConfig cfg;
  cfg.stop_on_lambda = false;
  const ContinuationResult full = continuation(in.phi, in.psi, in.order, in.domain, cfg);
  CHECK(full.levels.size() == 1);
  CHECK(full.stop_reason == "atlas unchanged under refinement");
}

TEST_CASE("two-dimensional continuation is monotone and runs the whole schedule") {
  const Domain d = Domain::make(2, 8.0, 16);
  PsiSpec psi;
  psi.level = 0.8;
  SolveConfig cfg;
  cfg.tol_cont = 0.0;
  cfg.stop_on_lambda = false;
  cfg.n_theta = 4;
  const ContinuationResult cr = continuation(elliptic_phi(), psi, FracOrder::make(2, 0.75), d, cfg);
  REQUIRE(cr.levels.size() == static_cast<std::size_t>(cfg.levels));
  CHECK(cr.history.size() == cr.levels.size() - 1);
  CHECK(cr.stop_reason == "schedule exhausted");
  for (std::size_t k = 1; k < cr.levels.size(); ++k) {
    CHECK(cr.levels[k].atlas_size > cr.levels[k - 1].atlas_size);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(cr.levels[k].u[i] <= cr.levels[k - 1].u[i] + 1e-8);
  }
  CHECK(cr.separation > 0.0);
}

TEST_CASE("solver configuration errors") {
  auto bad = [](auto mutate) {
    SolveConfig c;
    mutate(c);
    try {
      c.check();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Config;
    }
    return false;
  };
  CHECK(bad([](SolveConfig& c) { c.tol_residual = 0.0; }));
  CHECK(bad([](SolveConfig& c) { c.tol_cont = -1.0; }));
  CHECK(bad([](SolveConfig& c) { c.eps0 = 1.5; }));
  CHECK(bad([](SolveConfig& c) { c.levels = 0; }));
  CHECK(bad([](SolveConfig& c) { c.max_policy_iterations = 0; }));
  CHECK(bad([](SolveConfig& c) { c.contact_tol = -1e-3; }));
  CHECK_NOTHROW(SolveConfig{}.check());
}

TEST_CASE("discrete semiconvexity of quadratics") {
  const Domain d = Domain::make(2, 2.0, 16);
  const GridField up = build_field(d, [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; }, Closure::zero());
  const GridField down = build_field(d, [](const Point& x) { return -1.5 * x[0] * x[0]; }, Closure::zero());
  CHECK(discrete_semiconvexity(up) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(discrete_semiconvexity(down) == doctest::Approx(3.0).epsilon(1e-9));
}
