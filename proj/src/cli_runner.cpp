#include "fracma/cli_runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fracma/oracles.hpp"

namespace fracma {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Config, "cannot write " + path.string());
  os << std::setw(2) << j << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Config, "missing artifact " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Config, "cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::vector<double> node_values(const Domain& d, const std::function<double(const Point&)>& f) {
  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v[i] = f(d.node(i));
  return v;
}

MatrixAtlas atlas_at_level(const RunConfig& cfg, std::size_t levels) {
  MatrixAtlas at = build_atlas(cfg.domain.n, cfg.solver.eps0, cfg.solver.n_a, cfg.solver.n_theta);
  for (std::size_t k = 1; k < levels; ++k) at = refine_atlas(at, cfg.solver.eps0 * std::ldexp(1.0, -static_cast<int>(k)));
  return at;
}

json point_json(const Point& x, int n) { return n == 1 ? json(x[0]) : json({x[0], x[1]}); }

std::string csv_point(const Point& x, int n) {
  std::ostringstream os;
  os << std::setprecision(17) << x[0];
  if (n == 2) os << ',' << x[1];
  return os.str();
}

// JSON value for an override, keeping integral values integral
std::string override_value(double v) {
  if (std::floor(v) == v && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Validation: return 3;
    case ErrorKind::NonConvergence: return 4;
    case ErrorKind::Invariant: return 5;
    case ErrorKind::EmptyContact: return 6;
    case ErrorKind::Internal: return 1;
  }
  return 1;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return exit_code(ErrorKind::Config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

// ---- solve ----

SolveOutcome run_solve(const RunConfig& cfg) {
  set_worker_count(cfg.workers);
  const Domain& d = cfg.domain;
  const FracOrder order = FracOrder::make(d.n, cfg.s);
  SolveOutcome out;
  out.psi = cfg.psi;

  const MatrixAtlas first = build_atlas(d.n, cfg.solver.eps0, cfg.solver.n_a, cfg.solver.n_theta);
  const SolveReport ubar = solve_unconstrained(cfg.phi, order, first, d, cfg.solver);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.ubar_gap = std::max(out.ubar_gap, ubar.u[i] - cfg.phi.value(d.node(i), d.n));
  }
  if (cfg.psi_level_relative) out.psi.level = cfg.psi.level * out.ubar_gap;
  out.validation = validate_problem(cfg.phi, out.psi, ubar.u);

  out.continuation = continuation(cfg.phi, out.psi, order, d, cfg.solver);
  out.final_atlas = atlas_at_level(cfg, out.continuation.levels.size());

  const GridField& u = out.continuation.u0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double over = u[i] - out.psi.value(cfg.phi, d.node(i), d.n);
    if (over > 0.0) {
      fail(ErrorKind::Invariant, "solution exceeds the obstacle by " + std::to_string(over) + " at node " + std::to_string(i));
    }
  }
  return out;
}

void cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_dir(cfg.out_dir);
  const SolveOutcome out = run_solve(cfg);
  const Domain& d = cfg.domain;
  const ContinuationResult& cr = out.continuation;
  const SolveReport& last = cr.levels.back();

  RunConfig resolved = cfg;
  resolved.psi = out.psi;
  resolved.psi_level_relative = false;
  write_json(dir / "config.json", config_to_json(resolved));

  json rep;
  rep["config"] = config_to_json(resolved);
  rep["validation"] = {{"obstacle_inactive", out.validation.obstacle_inactive},
                       {"warnings", out.validation.warnings},
                       {"compact_count", out.validation.compact_count},
                       {"compact_box",
                        {{"empty", out.validation.compact_set.empty},
                         {"lo", point_json(out.validation.compact_set.lo, d.n)},
                         {"hi", point_json(out.validation.compact_set.hi, d.n)}}},
                       {"min_gap", out.validation.min_gap}};
  rep["ubar_gap"] = out.ubar_gap;
  json levels = json::array();
  for (const auto& l : cr.levels) levels.push_back(report_to_json(l));
  rep["levels"] = levels;
  rep["history"] = cr.history;
  rep["separation"] = cr.separation;
  rep["stop_reason"] = cr.stop_reason;
  rep["final"] = report_to_json(last, &out.final_atlas);
  rep["final_atlas"] = atlas_to_json(out.final_atlas);
  write_json(dir / "report.json", rep);

  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v[i] = out.psi.value(cfg.phi, d.node(i), d.n) - cr.u0[i];
  const GridField vf(d, v, Closure::zero());
  if (cfg.write_csv) {
    write_csv(cr.u0, (dir / "u.csv").string());
    write_csv(vf, (dir / "v.csv").string());
  }
  if (cfg.write_binary || !cfg.write_csv) write_binary(cr.u0, (dir / "u.bin").string());
  const OperatorEval eval{last.operator_value, last.argmin, {}};
  write_operator_csv((dir / "operator.csv").string(), d, eval, out.final_atlas, &last.policy.mode);

  std::size_t contact = 0;
  for (auto c : last.contact) contact += c;
  log << "solved: levels " << cr.levels.size() << ", eps " << last.eps << ", atlas " << last.atlas_size
      << ", residual " << last.residual << ", contact nodes " << contact << ", min(u - phi) " << cr.separation << '\n';
  for (const auto& w : out.validation.warnings) log << "warning: " << w << '\n';
}

// ---- analyze ----

void cmd_analyze(const RunConfig& cfg, const std::string& dir_name, std::ostream& log) {
  const fs::path dir = prepare_dir(dir_name);
  const Domain& d = cfg.domain;
  const FracOrder order = FracOrder::make(d.n, cfg.s);
  const AnalysisConfig& an = cfg.analysis;
  const double alpha = an.alpha > 0.0 ? an.alpha : default_alpha(cfg.s);
  const bool synthetic = an.synthetic != "none";

  const std::vector<double> psiv = node_values(d, [&](const Point& x) { return cfg.psi.value(cfg.phi, x, d.n); });
  const GridField psi(d, psiv, cfg.psi.closure(cfg.phi));

  std::vector<double> uvals;
  std::optional<Replay> replay;
  MatrixAtlas atlas;
  if (synthetic) {
    // v = c (e.x)_+^p; the profile fixture uses p = 1 + s
    const double p = an.synthetic == "profile" ? 1.0 + cfg.s : an.synthetic_exponent;
    const Point e{std::cos(an.synthetic_angle), std::sin(an.synthetic_angle)};
    uvals.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Point x = d.node(i);
      const double t = d.n == 1 ? x[0] : e[0] * x[0] + e[1] * x[1];
      uvals[i] = psiv[i] - an.synthetic_coefficient * std::pow(std::max(0.0, t), p);
    }
  } else {
    const RawField raw = read_binary((dir / "u.bin").string());
    if (!(raw.domain == d)) fail(ErrorKind::Config, "u.bin grid does not match the config domain");
    const json rep = read_json(dir / "report.json");
    atlas = atlas_from_json(rep.at("final_atlas"));
    replay = replay_solution(raw.values, cfg.phi, cfg.psi, order, atlas, d, cfg.solver);
    uvals = replay->report.u.values();
  }
  const GridField u(d, uvals, cfg.phi.closure());
  std::vector<double> vv(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) vv[i] = psiv[i] - uvals[i];
  const GridField v(d, vv, Closure::zero());

  FreeBoundaryReport fb = extract_fb(u, psi, cfg.solver.effective_contact_tol());
  if (fb.empty()) fail(ErrorKind::EmptyContact, "contact set is empty; the obstacle is inactive");

  ClassifyOptions co;
  co.rho_dens = an.rho_dens;
  co.rho_dens_low = an.rho_dens_low;
  co.tol_exp = an.tol_exp;
  co.fit_radius_cells = an.fit_hi_cells;
  co.min_count = an.min_count;
  classify(fb, v, cfg.s, alpha, co);

  json out;
  out["synthetic"] = an.synthetic;
  out["alpha"] = alpha;
  out["free_boundary"] = fb_report_to_json(fb);
  FitOptions fo;
  fo.r_lo = an.fit_lo_cells * d.h();
  fo.r_hi = an.fit_hi_cells * d.h();
  fo.min_count = an.min_count;
  try {
    out["global_fit"] = fit_to_json(fit_exponent(fb, v, fo));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Validation) throw;
    out["global_fit"] = nullptr;
    out["global_fit_note"] = e.what();
  }
  json counts = {{"case1", 0}, {"case2", 0}, {"case3", 0}, {"unresolved", 0}};
  std::vector<std::size_t> case1;
  for (std::size_t q = 0; q < fb.points.size(); ++q) {
    counts[verdict_name(fb.points[q].verdict)] = counts[verdict_name(fb.points[q].verdict)].get<int>() + 1;
    if (fb.points[q].verdict == Verdict::Case1) case1.push_back(q);
  }
  out["verdict_counts"] = counts;

  // blow-up at evenly spread case-1 points
  std::vector<std::size_t> picks;
  const std::size_t want = std::min<std::size_t>(case1.size(), static_cast<std::size_t>(std::max(0, an.blowup_points)));
  for (std::size_t k = 0; k < want; ++k) picks.push_back(case1[k * case1.size() / want]);
  json blowups = json::array();
  std::ofstream theta_csv(dir / "theta.csv");
  theta_csv << "point,rho,gradmax,ratio,theta\n" << std::setprecision(17);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const std::size_t fbpos = [&] {
      for (std::size_t q = 0; q < fb.fb_nodes.size(); ++q) {
        if (fb.fb_nodes[q] == fb.points[picks[k]].node) return q;
      }
      return std::size_t{0};
    }();
    const Point x0 = refine_base_point(v, fb, fbpos, cfg.s);
    const BlowUpFit bu = blow_up(v, x0, cfg.s, alpha, an.blowup);
    blowups.push_back(blowup_to_json(bu));
    for (std::size_t j = 0; j < bu.profile.rho.size(); ++j) {
      theta_csv << k << ',' << bu.profile.rho[j] << ',' << bu.profile.gradmax[j] << ',' << bu.profile.ratio[j] << ','
                << bu.profile.theta[j] << '\n';
    }
  }
  out["blow_up"] = blowups;

  std::ofstream dv(dir / "d_vs_v.csv");
  dv << (d.n == 1 ? "x," : "x,y,") << "d,v\n" << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (fb.contact[i]) continue;
    dv << csv_point(d.node(i), d.n) << ',' << fb.distance[i] << ',' << vv[i] << '\n';
  }
  std::ofstream dens(dir / "density.csv");
  dens << (d.n == 1 ? "x," : "x,y,") << "radius,density,proxy,verdict\n" << std::setprecision(17);
  for (const auto& p : fb.points) {
    for (std::size_t j = 0; j < p.radii.size(); ++j) {
      dens << csv_point(p.x, d.n) << ',' << p.radii[j] << ',' << p.density[j] << ',' << p.density_proxy << ','
           << verdict_name(p.verdict) << '\n';
    }
  }

  bool hard_ok = true;
  if (replay) {
    const DiagnosticsReport dg = diagnostics(replay->report, cfg.phi, cfg.psi, order, atlas, replay->setup.stencils,
                                             cfg.solver.tol_residual, static_cast<std::size_t>(an.diagnostics_stride));
    out["diagnostics"] = {{"ok", dg.ok},
                          {"normalizer", dg.normalizer},
                          {"min_v", dg.min_v},
                          {"max_grad", dg.max_grad},
                          {"min_hessian", dg.min_hessian},
                          {"min_pucci_margin", dg.min_pucci_margin},
                          {"pucci_samples", dg.pucci_samples},
                          {"failures", dg.failures}};
    hard_ok = dg.ok;
    if (!dg.ok) {
      for (const auto& f : dg.failures) log << "diagnostic failure: " << f << '\n';
    }
  }
  write_json(dir / "fb_report.json", out);
  log << "analyzed: " << fb.fb_nodes.size() << " free-boundary nodes, case1 " << counts["case1"] << ", case2 "
      << counts["case2"] << ", case3 " << counts["case3"] << ", unresolved " << counts["unresolved"] << '\n';
  if (!hard_ok) fail(ErrorKind::Invariant, "rescaled-system diagnostics failed");
}

// ---- verify ----

SuiteReport cmd_verify(const RunConfig& cfg, std::ostream& log) {
  set_worker_count(cfg.workers);
  const fs::path dir = prepare_dir(cfg.out_dir);
  SuiteReport rep = run_verify_suite(cfg);
  write_json(dir / "verify_report.json", rep.to_json());
  for (const auto& p : rep.properties) {
    log << (p.skipped ? "SKIP " : p.pass ? "PASS " : "FAIL ") << p.id << "  " << p.detail << '\n';
  }
  return rep;
}

// ---- oracle ----

json cmd_oracle(const std::string& kind, const std::vector<std::string>& params, std::ostream& out) {
  json p = json::object();
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "oracle parameter must look like key=value: " + kv);
    const std::string raw = kv.substr(eq + 1);
    try {
      p[kv.substr(0, eq)] = json::parse(raw);
    } catch (const json::parse_error&) {
      p[kv.substr(0, eq)] = raw;
    }
  }
  json r = run_oracle(kind, p);
  out << std::setprecision(17) << std::setw(2) << r << '\n';
  return r;
}

// ---- sweep ----

json cmd_sweep(const json& doc, const std::vector<std::string>& overrides, std::ostream& log) {
  const RunConfig base = resolve_config(doc, overrides);
  if (base.sweep_values.empty()) fail(ErrorKind::Config, "sweep.values is empty");
  set_worker_count(base.workers);
  const fs::path dir = prepare_dir(base.out_dir);
  json rows = json::array();
  std::ofstream csv(dir / "sweep.csv");
  csv << std::setprecision(17);
  double prev_err = 0.0, prev_u0 = 0.0, prev_delta = 0.0;
  if (base.sweep_kind == "operator") {
    csv << "value,h,max_abs_error,rel_error,observed_order\n";
  } else {
    csv << "value,h,levels,final_eps,atlas,residual,separation,contact_nodes,u_probe,delta,observed_order\n";
  }
  for (std::size_t k = 0; k < base.sweep_values.size(); ++k) {
    std::vector<std::string> ov = overrides;
    ov.push_back(base.sweep_param + "=" + override_value(base.sweep_values[k]));
    const RunConfig cfg = resolve_config(doc, ov);
    const Domain& d = cfg.domain;
    json row = {{"value", base.sweep_values[k]}, {"h", d.h()}};
    if (base.sweep_kind == "operator") {
      // identity stencil on exp(-|x|^2) against the Fourier-side reference on |x| <= 1
      const FracOrder order = FracOrder::make(d.n, cfg.s);
      const KernelStencil st = build_stencil(order, MatrixParams{}, d, cfg.solver.quadrature);
      auto g = [n = d.n](const Point& x) { return std::exp(-(x[0] * x[0] + (n == 2 ? x[1] * x[1] : 0.0))); };
      const GridField f(d, node_values(d, g), Closure::analytic(g, FarField{}));
      std::vector<std::size_t> nodes;
      const std::size_t stride = d.n == 1 ? 1 : std::max<std::size_t>(1, d.m / 64);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const auto ij = d.index(i);
        const Point x = d.node(i);
        if (std::hypot(x[0], d.n == 2 ? x[1] : 0.0) > 1.0 + 1e-12) continue;
        if (ij[0] % stride != 0 || ij[1] % stride != 0) continue;
        nodes.push_back(i);
      }
      const std::vector<double> lf = apply_LAs(f, st, nodes);
      double err = 0.0, scale = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const Point x = d.node(nodes[q]);
        const double ref = -oracle_gaussian(d.n, cfg.s, std::hypot(x[0], d.n == 2 ? x[1] : 0.0));
        err = std::max(err, std::abs(lf[q] - ref));
        scale = std::max(scale, std::abs(ref));
      }
      row["max_abs_error"] = err;
      row["rel_error"] = err / scale;
      // order in h only makes sense when the swept key is the resolution
      const bool ordered = k > 0 && base.sweep_param == "domain.m" && prev_err > 0.0 && err > 0.0;
      row["observed_order"] = nullptr;
      if (ordered) {
        const double ratio = base.sweep_values[k] / base.sweep_values[k - 1];
        row["observed_order"] = std::log(prev_err / err) / std::log(ratio);
      }
      prev_err = err;
      csv << base.sweep_values[k] << ',' << d.h() << ',' << err << ',' << err / scale << ','
          << (row["observed_order"].is_null() ? std::string("") : std::to_string(row["observed_order"].get<double>()))
          << '\n';
    } else {
      const SolveOutcome out = run_solve(cfg);
      const auto& cr = out.continuation;
      const SolveReport& last = cr.levels.back();
      std::size_t contact = 0;
      for (auto c : last.contact) contact += c;
      // probe off the contact set, at the node nearest (3R/8, 0)
      std::size_t probe = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const Point x = d.node(i);
        const double r = std::abs(x[0] - 0.375 * d.R) + std::abs(x[1]);
        if (r < best) {
          best = r;
          probe = i;
        }
      }
      const double u0 = cr.u0[probe];
      row["levels"] = cr.levels.size();
      row["final_eps"] = last.eps;
      row["atlas"] = last.atlas_size;
      row["residual"] = last.residual;
      row["separation"] = cr.separation;
      row["contact_nodes"] = contact;
      row["u_probe"] = u0;
      const double delta = k > 0 ? std::abs(u0 - prev_u0) : 0.0;
      row["delta"] = k > 0 ? json(delta) : json(nullptr);
      const bool ordered = k > 1 && prev_delta > 0.0 && delta > 0.0;
      row["observed_order"] = ordered ? json(std::log2(prev_delta / delta)) : json(nullptr);
      csv << base.sweep_values[k] << ',' << d.h() << ',' << cr.levels.size() << ',' << last.eps << ',' << last.atlas_size
          << ',' << last.residual << ',' << cr.separation << ',' << contact << ',' << u0 << ','
          << (k > 0 ? std::to_string(delta) : std::string("")) << ','
          << (ordered ? std::to_string(std::log2(prev_delta / delta)) : std::string("")) << '\n';
      prev_u0 = u0;
      prev_delta = delta;
    }
    log << base.sweep_param << " = " << base.sweep_values[k] << ": " << row.dump() << '\n';
    rows.push_back(row);
  }
  json table = {{"param", base.sweep_param}, {"kind", base.sweep_kind}, {"rows", rows}};
  write_json(dir / "sweep.json", table);
  return table;
}

}  // namespace fracma
