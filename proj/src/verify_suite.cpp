#include "fracma/verify_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace fracma {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// pinned suite tolerances
constexpr double kAffineTol = 1e-9;
constexpr double kConstantTol = 1e-10;
constexpr double kTranslationTol = 1e-9;
constexpr double kConcavityTol = 1e-9;
constexpr double kComparisonTol = 1e-8;
constexpr double kBudgetC = 1.0;  // slack constant in M + C sqrt(h)

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

PropertyResult check(std::string id, bool pass, std::string detail, json metrics = json::object()) {
  PropertyResult r;
  r.id = std::move(id);
  r.pass = pass;
  r.detail = std::move(detail);
  r.metrics = std::move(metrics);
  return r;
}

PropertyResult skipped(std::string id, const std::string& why) {
  PropertyResult r;
  r.id = std::move(id);
  r.skipped = true;
  r.detail = "skipped: " + why;
  return r;
}

std::vector<double> sample(const Domain& d, const std::function<double(const Point&)>& f) {
  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v[i] = f(d.node(i));
  return v;
}

std::vector<std::size_t> half_box_nodes(const Domain& d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point x = d.node(i);
    if (std::abs(x[0]) <= 0.5 * d.R + 1e-12 && (d.n == 1 || std::abs(x[1]) <= 0.5 * d.R + 1e-12)) out.push_back(i);
  }
  return out;
}

double sphere_area(int n) { return n == 1 ? 2.0 : 2.0 * kPi; }

struct Structure {
  MatrixAtlas atlas;
  std::vector<std::shared_ptr<const KernelStencil>> stencils;
};

}  // namespace

PhiSpec elliptic_phi() {
  PhiSpec p;
  p.family = PhiSpec::Family::EllipticCone;
  p.q = {1.0, 0.0, 0.1};
  return p;
}

bool SuiteReport::ok() const { return first_failure() == nullptr; }

const PropertyResult* SuiteReport::first_failure() const {
  for (const auto& p : properties) {
    if (!p.skipped && !p.pass) return &p;
  }
  return nullptr;
}

json SuiteReport::to_json() const {
  json arr = json::array();
  for (const auto& p : properties) {
    arr.push_back({{"id", p.id}, {"pass", p.pass}, {"skipped", p.skipped}, {"detail", p.detail}, {"metrics", p.metrics}});
  }
  const auto* f = first_failure();
  return {{"ok", ok()}, {"first_failure", f ? json(f->id) : json(nullptr)}, {"properties", arr}};
}

std::vector<BatteryInstance> battery_instances(const std::string& battery, int level) {
  std::vector<BatteryInstance> out;
  const int m1 = level == 0 ? 128 : 256;
  auto one_d = [&](std::string name, double s, double c0, PsiSpec psi) {
    BatteryInstance b;
    b.name = std::move(name);
    b.domain = Domain::make(1, 8.0, m1);
    b.s = s;
    b.phi.c0 = c0;
    b.psi = psi;
    out.push_back(b);
  };
  PsiSpec a;
  a.level = 0.5;
  one_d("n1.constant.s075", 0.75, 1.0, a);
  PsiSpec b;
  b.level = 2.2;
  one_d("n1.constant.s060", 0.6, 1.0, b);
  PsiSpec c;
  c.family = PsiSpec::Family::PhiPlusBump;
  c.level = 0.35;
  c.amplitude = 0.15;
  c.width = 1.0;
  c.center = {0.5, 0.0};
  one_d("n1.bump.s090", 0.9, 1.2, c);
  if (battery == "full") {
    BatteryInstance t;
    t.name = "n2.elliptic.s075";
    t.domain = Domain::make(2, 8.0, level == 0 ? 32 : 64);
    t.s = 0.75;
    t.phi = elliptic_phi();
    t.psi.level = 0.8;
    t.n_a = 2;
    t.n_theta = 4;
    out.push_back(t);
  }
  return out;
}

SolveReport solve_instance(const BatteryInstance& inst, const SolveConfig& cfg) {
  SolveConfig c = cfg;
  c.n_a = inst.n_a;
  c.n_theta = inst.n_theta;
  const FracOrder order = FracOrder::make(inst.domain.n, inst.s);
  if (inst.domain.n == 1) {
    return solve_obstacle(inst.phi, inst.psi, order, build_atlas(1, c.eps0, 1, 1), inst.domain, c);
  }
  ContinuationResult cr = continuation(inst.phi, inst.psi, order, inst.domain, c);
  return cr.levels.back();
}

BudgetCheck budget_check(const BatteryInstance& inst, const SolveReport& rep, const SolveConfig& cfg) {
  const Domain& d = inst.domain;
  const FracOrder order = FracOrder::make(d.n, inst.s);
  BudgetCheck b;
  b.budget = estimate_budget(inst.phi, inst.psi, d, order, cfg.quadrature);
  // the truncation pins u to phi at the box edge, which leaves an O(h^(s-1))
  // gradient layer there; the budgets are checked away from it
  b.lip_u = discrete_lipschitz(rep.u, 0.5 * d.R);
  b.sc_u = discrete_semiconcavity(rep.u, 0.5 * d.R);
  b.lip_u_full = discrete_lipschitz(rep.u);
  b.sc_u_full = discrete_semiconcavity(rep.u);
  b.sep = std::numeric_limits<double>::infinity();
  b.lower_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double g = rep.u[i] - inst.phi.value(d.node(i), d.n);
    b.sep = std::min(b.sep, g);
    b.gap_sup = std::max(b.gap_sup, std::abs(g));
    const double defect = rep.operator_value[i] - g;
    b.lower_margin = std::min(b.lower_margin, defect);
    if (!rep.contact[i]) b.offcontact_defect = std::max(b.offcontact_defect, std::abs(defect));
    b.upper_max = std::max(b.upper_max, rep.operator_value[i]);
  }
  // C(1 + |u - phi|) from the near/far split of the integral
  const double half = 0.5 * order.c * sphere_area(d.n);
  const double near = half / (2.0 - 2.0 * inst.s) * std::max(b.budget.M2, b.sc_u) + b.budget.M0;
  const double far = half * 4.0 / (2.0 * inst.s);
  b.bound_constant = std::max(near, far);
  b.upper_bound = b.bound_constant * (1.0 + b.gap_sup);

  // K-box from the unconstrained solution at the first truncation level
  SolveConfig c = cfg;
  c.n_a = inst.n_a;
  c.n_theta = inst.n_theta;
  const SolveReport ubar = solve_unconstrained(inst.phi, order, build_atlas(d.n, c.eps0, c.n_a, c.n_theta), d, c);
  const ValidationReport vr = validate_problem(inst.phi, inst.psi, ubar.u);
  b.box = vr.compact_set;
  const double slack = 1e-9 + 0.5 * d.h();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!rep.contact[i]) continue;
    if (b.box.empty || !b.box.contains(d.node(i), d.n, slack)) b.inside_box = false;
  }
  return b;
}

SuiteReport run_verify_suite(const RunConfig& cfg) {
  SuiteReport rep;
  auto& P = rep.properties;
  const std::string mut = cfg.mutation;
  SolveConfig scfg = cfg.solver;
  if (mut == "skip_projection") scfg.skip_projection = true;
  const auto instances = battery_instances(cfg.battery, 0);

  // ---- atlas structure ----
  std::vector<MatrixAtlas> atlases;
  for (const auto& inst : instances) {
    MatrixAtlas at = build_atlas(inst.domain.n, scfg.eps0, inst.n_a, inst.n_theta);
    atlases.push_back(at);
  }
  {
    // the continuation chain of a 2D atlas, checked whatever the battery
    MatrixAtlas at = build_atlas(2, 0.5, 2, 4);
    atlases.push_back(at);
    for (int k = 1; k < 4; ++k) atlases.push_back(refine_atlas(atlases.back(), 0.5 * std::ldexp(1.0, -k)));
  }
  if (mut == "bad_determinant") {
    // a non-identity entry, so only the determinant check can see it
    for (auto& at : atlases) {
      if (at.entries.size() > 1) {
        at.entries.back().scale = 1.25;
        break;
      }
    }
  }

  bool structure_ok = true;
  {
    bool ok = true;
    std::string where;
    for (const auto& at : atlases) {
      bool found = false;
      for (const auto& e : at.entries) found = found || same_matrix(e, MatrixParams{});
      if (!found) {
        ok = false;
        where = "atlas at eps " + fmt(at.eps);
      }
    }
    P.push_back(check("atlas.identity", ok, ok ? "every atlas contains the identity" : "no identity in " + where));
    structure_ok = structure_ok && ok;
  }
  {
    double worst = 0.0;
    for (std::size_t k = 0; k < atlases.size(); ++k) {
      for (const auto& e : atlases[k].entries) {
        const double det = atlases[k].n == 1 ? e.matrix()(0, 0) : e.matrix().determinant();
        worst = std::max(worst, std::abs(det - 1.0));
      }
    }
    const bool ok = worst <= 1e-12;
    P.push_back(check("atlas.unit_determinant", ok, "max |det A - 1| = " + fmt(worst), {{"max_det_error", worst}}));
    structure_ok = structure_ok && ok;
  }
  {
    bool ok = true;
    for (const auto& at : atlases) {
      for (const auto& e : at.entries) ok = ok && e.a >= at.eps * (1.0 - 1e-12) && e.a <= 1.0 + 1e-12;
    }
    P.push_back(check("atlas.eigen_range", ok, ok ? "eigenvalues within [eps, 1]" : "entry outside [eps, 1]"));
    structure_ok = structure_ok && ok;
  }
  {
    bool ok = true;
    const std::size_t first2d = instances.size();
    for (std::size_t k = first2d + 1; k < atlases.size(); ++k) {
      for (const auto& e : atlases[k - 1].entries) ok = ok && atlases[k].contains(e);
    }
    P.push_back(check("atlas.nested", ok, ok ? "refined atlases contain their parents" : "refinement dropped an entry"));
    structure_ok = structure_ok && ok;
  }

  // ---- stencils ----
  std::vector<Structure> structures;
  if (structure_ok) {
    for (std::size_t k = 0; k < instances.size(); ++k) {
      const FracOrder o = FracOrder::make(instances[k].domain.n, instances[k].s);
      structures.push_back({atlases[k], build_atlas_stencils(o, atlases[k], instances[k].domain, scfg.quadrature)});
    }
    if (mut == "flip_weight") {
      auto st = std::make_shared<KernelStencil>(*structures.front().stencils.front());
      for (std::size_t q = 0; q < st->cells.size(); ++q) {
        if (st->cells[q] == Offset{3, 0}) st->cell_weights[q] *= -1.0;
      }
      structures.front().stencils.front() = st;
    }
    double min_w = std::numeric_limits<double>::infinity(), min_k = min_w, sym = 0.0, rem = 0.0;
    bool rem_ok = true;
    for (const auto& S : structures) {
      for (const auto& st : S.stencils) {
        for (double w : st->cell_weights) min_w = std::min(min_w, w);
        for (double w : st->tail_weights) min_w = std::min(min_w, w);
        for (int i = 0; i < st->order.n; ++i) min_k = std::min(min_k, st->kappa[i]);
        for (std::size_t q = 0; q < st->cells.size(); ++q) {
          const Offset j = st->cells[q];
          sym = std::max(sym, std::abs(st->cell_weights[q] - st->weight(Offset{-j.d0, -j.d1})));
        }
        rem = std::max(rem, st->remainder_bound);
        rem_ok = rem_ok && st->remainder_bound <= st->tail_tol;
      }
    }
    const bool pos = min_w > 0.0 && min_k >= 0.0;
    P.push_back(check("stencil.positivity", pos, "min weight " + fmt(min_w) + ", min kappa " + fmt(min_k),
                      {{"min_weight", min_w}, {"min_kappa", min_k}}));
    P.push_back(check("stencil.symmetry", sym == 0.0, "max |w_j - w_-j| = " + fmt(sym), {{"max_asymmetry", sym}}));
    P.push_back(check("stencil.remainder", rem_ok, "max tail remainder bound " + fmt(rem), {{"max_remainder", rem}}));
    structure_ok = pos && sym == 0.0 && rem_ok;
  } else {
    for (const char* id : {"stencil.positivity", "stencil.symmetry", "stencil.remainder"}) {
      P.push_back(skipped(id, "atlas structure failed"));
    }
  }

  // ---- operator identities on each instance grid ----
  const char* op_ids[] = {"operator.affine", "operator.constant", "operator.translation", "operator.concavity",
                          "operator.convex_nonneg"};
  if (structure_ok) {
    double aff = 0.0, cons = 0.0, trans = 0.0, conc = 0.0, convex = 0.0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
      const Domain& d = instances[k].domain;
      const auto& at = structures[k].atlas;
      const auto& sts = structures[k].stencils;
      const int n = d.n;
      // affine battery with fixed coefficients
      for (int t = 0; t < 5; ++t) {
        const double b0 = 0.3 * t - 0.5, p0 = std::sin(1.7 * t + 0.2), p1 = n == 2 ? std::cos(2.3 * t) : 0.0;
        auto f = [=](const Point& x) { return b0 + p0 * x[0] + p1 * x[1]; };
        FarField far;
        far.p = {p0, p1};
        far.b0 = b0;
        const GridField u(d, sample(d, f), Closure::analytic(f, far));
        const auto ev = apply_Ds_eps(u, at, sts, {}, true);
        for (const auto& row : ev.per_matrix) {
          for (double v : row) aff = std::max(aff, std::abs(v) / (1.0 + std::abs(b0) + std::abs(p0) + std::abs(p1)));
        }
      }
      // test field: cone plus two bumps
      const PhiSpec& ph = instances[k].phi;
      auto g = [&ph, n](const Point& x) {
        const double r1 = (x[0] - 0.4) * (x[0] - 0.4) + (n == 2 ? (x[1] + 0.3) * (x[1] + 0.3) : 0.0);
        const double r2 = (x[0] + 0.7) * (x[0] + 0.7) + (n == 2 ? 2.0 * (x[1] - 0.5) * (x[1] - 0.5) : 0.0);
        return ph.value(x, n) - 0.8 * std::exp(-r1) + 0.5 * std::exp(-2.0 * r2);
      };
      const Closure gcl = Closure::analytic(g, ph.far_field());
      const GridField u(d, sample(d, g), gcl);
      const auto base = apply_Ds_eps(u, at, sts);
      {
        std::vector<double> vals = u.values();
        for (double& v : vals) v += 2.5;
        const GridField w(d, vals, gcl.plus_constant(2.5));
        const auto ev = apply_Ds_eps(w, at, sts);
        for (std::size_t i = 0; i < d.size(); ++i) cons = std::max(cons, std::abs(ev.value[i] - base.value[i]));
      }
      {
        // bumps only, so the exterior is exactly invariant under the shift
        auto bump = [n](const Point& x) {
          const double r1 = x[0] * x[0] + (n == 2 ? 0.5 * x[1] * x[1] : 0.0);
          return std::exp(-r1) - 0.3 * std::exp(-4.0 * (x[0] - 0.5) * (x[0] - 0.5));
        };
        const double h = d.h();
        auto shifted = [bump, h](const Point& x) { return bump({x[0] - h, x[1]}); };
        const GridField b1(d, sample(d, bump), Closure::zero());
        const GridField b2(d, sample(d, shifted), Closure::zero());
        const auto e1 = apply_Ds_eps(b1, at, sts);
        const auto e2 = apply_Ds_eps(b2, at, sts);
        for (std::size_t i : half_box_nodes(d)) {
          auto back = d.shift(i, -1, 0);
          if (back) trans = std::max(trans, std::abs(e2.value[i] - e1.value[*back]));
        }
      }
      {
        auto g2 = [&ph, n](const Point& x) { return ph.value(x, n) + 0.6 * std::exp(-(x[0] * x[0] + (n == 2 ? 3.0 * x[1] * x[1] : 0.0))); };
        const Closure c2 = Closure::analytic(g2, ph.far_field());
        const GridField w(d, sample(d, g2), c2);
        auto mid_fn = [g, g2](const Point& x) { return 0.5 * (g(x) + g2(x)); };
        const GridField mid(d, sample(d, mid_fn), Closure::analytic(mid_fn, ph.far_field()));
        const auto ew = apply_Ds_eps(w, at, sts);
        const auto em = apply_Ds_eps(mid, at, sts);
        for (std::size_t i = 0; i < d.size(); ++i) {
          conc = std::max(conc, 0.5 * (base.value[i] + ew.value[i]) - em.value[i]);
        }
      }
      {
        const GridField pf(d, sample(d, [&](const Point& x) { return ph.value(x, n); }), ph.closure());
        const auto ev = apply_Ds_eps(pf, at, sts, {}, true);
        for (const auto& row : ev.per_matrix) {
          for (double v : row) convex = std::max(convex, -v);
        }
      }
    }
    P.push_back(check(op_ids[0], aff <= kAffineTol, "max |L_A affine| / (1 + |coef|) = " + fmt(aff), {{"max", aff}}));
    P.push_back(check(op_ids[1], cons <= kConstantTol, "max change under +c = " + fmt(cons), {{"max", cons}}));
    P.push_back(check(op_ids[2], trans <= kTranslationTol, "max shift defect on half box = " + fmt(trans), {{"max", trans}}));
    P.push_back(check(op_ids[3], conc <= kConcavityTol, "max midpoint concavity defect = " + fmt(conc), {{"max", conc}}));
    P.push_back(check(op_ids[4], convex <= 1e-10, "most negative L_A phi = " + fmt(-convex), {{"max_negative", convex}}));
  } else {
    for (const char* id : op_ids) P.push_back(skipped(id, "stencil structure failed"));
  }

  // ---- solves ----
  const char* solve_ids[] = {"obstacle.feasibility", "obstacle.residual", "continuation.monotone", "separation",
                             "contact_box",          "budget.lipschitz",  "budget.semiconcavity",  "operator.bounds"};
  if (!structure_ok) {
    for (const char* id : solve_ids) P.push_back(skipped(id, "structure failed"));
    P.push_back(skipped("comparison", "structure failed"));
    return rep;
  }
  std::vector<PropertyResult> per(std::size(solve_ids));
  for (std::size_t q = 0; q < per.size(); ++q) per[q] = check(solve_ids[q], true, "");
  auto note = [&](std::size_t q, bool ok, const std::string& name, const std::string& what, json m) {
    per[q].metrics[name] = std::move(m);
    if (!ok && per[q].pass) {
      per[q].pass = false;
      per[q].detail = name + ": " + what;
    }
  };
  for (int level = 0; level < 2; ++level) {
    const auto insts = level == 0 ? instances : battery_instances(cfg.battery, 1);
    for (std::size_t k = 0; k < insts.size(); ++k) {
      const auto& inst = insts[k];
      const std::string name = inst.name + "@m" + std::to_string(inst.domain.m);
      SolveReport sr;
      try {
        if (level == 0 && inst.domain.n == 1) {
          // the suite's own structures, so injected defects reach the solver
          const FracOrder o = FracOrder::make(1, inst.s);
          auto op = std::make_shared<AtlasOperator>(structures[k].atlas, structures[k].stencils, inst.domain,
                                                    inst.phi.closure());
          GridProblem prob{op.get(), sample(inst.domain, [&](const Point& x) { return inst.phi.value(x, 1); }),
                           sample(inst.domain, [&](const Point& x) { return inst.psi.value(inst.phi, x, 1); }),
                           inst.phi.closure()};
          double gmax = 0.0;
          for (std::size_t i = 0; i < prob.phi.size(); ++i) gmax = std::max(gmax, prob.psi[i] - prob.phi[i]);
          std::vector<double> u0(prob.phi.size());
          for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = std::min(prob.psi[i], prob.phi[i] + gmax);
          sr = solve_grid(prob, u0, scfg);
          (void)o;
        } else {
          sr = solve_instance(inst, scfg);
        }
      } catch (const Error& e) {
        const std::size_t q = e.kind() == ErrorKind::Invariant ? 2 : 1;
        note(q, false, name, e.what(), json::object());
        continue;
      }
      double over = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < inst.domain.size(); ++i) {
        over = std::max(over, sr.u[i] - inst.psi.value(inst.phi, inst.domain.node(i), inst.domain.n));
      }
      note(0, over <= 0.0, name, "u exceeds psi by " + fmt(over), {{"max_u_minus_psi", over}});
      note(1, sr.residual <= scfg.tol_residual, name, "residual " + fmt(sr.residual), {{"residual", sr.residual}});
      const BudgetCheck b = budget_check(inst, sr, scfg);
      note(3, b.sep > 0.0, name, "min(u - phi) = " + fmt(b.sep), {{"min_u_minus_phi", b.sep}});
      note(4, b.inside_box, name, "contact node outside the K box", {{"inside", b.inside_box}});
      const double sh = std::sqrt(inst.domain.h());
      note(5, b.lip_u <= b.budget.M1 + kBudgetC * sh, name, "Lip(u) " + fmt(b.lip_u) + " > M1 + C sqrt(h)",
           {{"lip_u", b.lip_u}, {"lip_u_full_box", b.lip_u_full}, {"M1", b.budget.M1}, {"C", std::max(0.0, (b.lip_u - b.budget.M1) / sh)}});
      note(6, b.sc_u <= b.budget.M2 + kBudgetC * sh, name, "SC(u) " + fmt(b.sc_u) + " > M2 + C sqrt(h)",
           {{"sc_u", b.sc_u}, {"sc_u_full_box", b.sc_u_full}, {"M2", b.budget.M2}, {"C", std::max(0.0, (b.sc_u - b.budget.M2) / sh)}});
      const double tol = scfg.tol_residual;
      const bool bounds = b.lower_margin >= -tol && b.offcontact_defect <= tol && b.upper_max <= b.upper_bound;
      note(7, bounds, name,
           "D u - (u - phi) min " + fmt(b.lower_margin) + ", off-contact defect " + fmt(b.offcontact_defect) +
               ", max D u " + fmt(b.upper_max) + " vs " + fmt(b.upper_bound),
           {{"lower_margin", b.lower_margin},
            {"offcontact_defect", b.offcontact_defect},
            {"max_Du", b.upper_max},
            {"bound", b.upper_bound},
            {"C", b.bound_constant}});
    }
  }
  {
    // eps-family on a 2D instance with the full schedule
    BatteryInstance t;
    t.name = "n2.continuation";
    t.domain = Domain::make(2, 8.0, cfg.battery == "full" ? 32 : 16);
    t.phi = elliptic_phi();
    t.psi.level = 0.8;
    SolveConfig c = scfg;
    c.n_a = 2;
    c.n_theta = 4;
    c.levels = 4;
    c.tol_cont = 0.0;
    c.stop_on_lambda = false;
    c.eps0 = 0.5;
    const std::string name = t.name + "@m" + std::to_string(t.domain.m);
    try {
      const ContinuationResult cr = continuation(t.phi, t.psi, FracOrder::make(2, t.s), t.domain, c);
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < cr.levels.size(); ++k) {
        for (std::size_t i = 0; i < t.domain.size(); ++i) {
          worst = std::max(worst, cr.levels[k].u[i] - cr.levels[k - 1].u[i]);
        }
      }
      note(2, worst <= 1e-8 && cr.levels.size() == 4, name, "u_eps increases by " + fmt(worst),
           {{"max_increase", worst}, {"history", cr.history}, {"levels", cr.levels.size()}});
    } catch (const Error& e) {
      note(2, false, name, e.what(), json::object());
    }
  }
  for (auto& p : per) {
    if (p.pass) p.detail = "all instances";
    P.push_back(p);
  }

  // ---- comparison: ordered data give ordered solutions ----
  {
    PropertyResult r = check("comparison", true, "all pairs ordered");
    std::vector<std::pair<BatteryInstance, BatteryInstance>> pairs;
    BatteryInstance lo = instances[0], hi = instances[0];
    lo.psi.level = 0.45;
    lo.name += ".level045";
    pairs.push_back({lo, hi});
    BatteryInstance bump = hi;
    bump.psi.family = PsiSpec::Family::PhiPlusBump;
    bump.psi.amplitude = 0.2;
    bump.psi.width = 0.8;
    bump.name += ".bump";
    pairs.push_back({hi, bump});
    BatteryInstance flat = hi;
    flat.phi.c0 = 1.3;  // larger c0 lowers the smoothed cone
    flat.name += ".c013";
    pairs.push_back({flat, hi});
    if (cfg.battery == "full") {
      BatteryInstance t = instances.back(), t2 = instances.back();
      t2.psi.level = 1.0;
      t2.name += ".level10";
      pairs.push_back({t, t2});
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : pairs) {
      const SolveReport ra = solve_instance(a, scfg), rb = solve_instance(b, scfg);
      double w = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < a.domain.size(); ++i) w = std::max(w, ra.u[i] - rb.u[i]);
      worst = std::max(worst, w);
      r.metrics["pair" + std::to_string(r.metrics.size())] = {{"low", a.name}, {"high", b.name}, {"max_excess", w}};
      if (w > kComparisonTol && r.pass) {
        r.pass = false;
        r.detail = "u_low exceeds u_high by " + fmt(w) + " (" + b.name + ")";
      }
    }
    r.metrics["max_violation"] = worst;
    P.push_back(r);
  }
  return rep;
}

}  // namespace fracma
