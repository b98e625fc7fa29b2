#include "fracma/config.hpp"

#include <fstream>
#include <sstream>

namespace fracma {

using nlohmann::json;

namespace {

const char* phi_family_name(PhiSpec::Family f) {
  return f == PhiSpec::Family::SmoothedCone ? "smoothed_cone" : "elliptic_cone";
}

const char* psi_family_name(PsiSpec::Family f) {
  switch (f) {
    case PsiSpec::Family::PhiPlusConstant: return "phi_plus_constant";
    case PsiSpec::Family::PhiPlusBump: return "phi_plus_bump";
    case PsiSpec::Family::ParaboloidCap: return "paraboloid_cap";
  }
  return "?";
}

bool same_kind(const json& want, const json& got) {
  if (want.is_number_integer()) return got.is_number_integer();
  if (want.is_number()) return got.is_number();
  return want.type() == got.type();
}

// Walks the user document against the full default document.
void check_shape(const json& want, const json& got, const std::string& path) {
  if (want.is_object()) {
    if (!got.is_object()) fail(ErrorKind::Config, "field '" + path + "' must be an object");
    for (auto it = got.begin(); it != got.end(); ++it) {
      const std::string sub = path.empty() ? it.key() : path + "." + it.key();
      if (!want.contains(it.key())) fail(ErrorKind::Config, "unknown config key '" + sub + "'");
      check_shape(want.at(it.key()), it.value(), sub);
    }
    return;
  }
  if (want.is_array()) {
    if (!got.is_array()) fail(ErrorKind::Config, "field '" + path + "' must be an array");
    for (const auto& e : got) {
      if (!e.is_number()) fail(ErrorKind::Config, "field '" + path + "' must hold numbers");
    }
    return;
  }
  if (!same_kind(want, got)) {
    fail(ErrorKind::Config, "field '" + path + "' has type " + std::string(got.type_name()) + ", expected " +
                                (want.is_number_integer() ? std::string("integer") : std::string(want.type_name())));
  }
}

void merge_into(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (v == o) return true;
  }
  return false;
}

template <class T>
T take(const json& j, const char* key) {
  return j.at(key).get<T>();
}

}  // namespace

json config_to_json(const RunConfig& c) {
  const auto& q = c.solver.quadrature;
  const auto& a = c.analysis;
  json j;
  j["domain"] = {{"n", c.domain.n}, {"R", c.domain.R}, {"m", c.domain.m}};
  j["order"] = {{"s", c.s}};
  j["phi"] = {{"family", phi_family_name(c.phi.family)},
              {"c0", c.phi.c0},
              {"q", {c.phi.q.a11, c.phi.q.a12, c.phi.q.a22}},
              {"sigma", c.phi.sigma}};
  j["psi"] = {{"family", psi_family_name(c.psi.family)},
              {"level", c.psi.level},
              {"level_relative", c.psi_level_relative},
              {"amplitude", c.psi.amplitude},
              {"width", c.psi.width},
              {"center", {c.psi.center[0], c.psi.center[1]}}};
  j["atlas"] = {{"n_a", c.solver.n_a}, {"n_theta", c.solver.n_theta}};
  j["quadrature"] = {{"window", q.window},
                     {"tail_tol", q.tail_tol},
                     {"angular_nodes", q.angular_nodes},
                     {"radial_nodes", q.radial_nodes},
                     {"tail_decay", q.tail_decay},
                     {"angular_panels", q.angular_panels}};
  j["solver"] = {{"tol_residual", c.solver.tol_residual},
                 {"max_policy_iterations", c.solver.max_policy_iterations},
                 {"linear_tol", c.solver.linear_tol},
                 {"relaxation_sweeps", c.solver.relaxation_sweeps},
                 {"contact_tol", c.solver.contact_tol},
                 {"force_relaxation", c.solver.force_relaxation}};
  j["continuation"] = {{"eps0", c.solver.eps0},
                       {"levels", c.solver.levels},
                       {"tol_cont", c.solver.tol_cont},
                       {"stop_on_lambda", c.solver.stop_on_lambda}};
  j["analysis"] = {{"alpha", a.alpha},
                   {"fit_lo_cells", a.fit_lo_cells},
                   {"fit_hi_cells", a.fit_hi_cells},
                   {"min_count", a.min_count},
                   {"rho_dens", a.rho_dens},
                   {"rho_dens_low", a.rho_dens_low},
                   {"tol_exp", a.tol_exp},
                   {"blowup_points", a.blowup_points},
                   {"diagnostics_stride", a.diagnostics_stride},
                   {"blowup",
                    {{"K", a.blowup.K},
                     {"r_min_cells", a.blowup.r_min_cells},
                     {"nu_factor", a.blowup.nu_factor},
                     {"k_lo", a.blowup.k_lo},
                     {"k_hi", a.blowup.k_hi},
                     {"angle_steps", a.blowup.angle_steps}}},
                   {"synthetic",
                    {{"kind", a.synthetic},
                     {"exponent", a.synthetic_exponent},
                     {"coefficient", a.synthetic_coefficient},
                     {"angle", a.synthetic_angle}}}};
  j["output"] = {{"dir", c.out_dir}, {"csv", c.write_csv}, {"binary", c.write_binary}};
  j["verify"] = {{"mutation", c.mutation}, {"battery", c.battery}};
  j["sweep"] = {{"param", c.sweep_param}, {"values", c.sweep_values}, {"kind", c.sweep_kind}};
  j["deterministic"] = c.deterministic;
  j["workers"] = c.workers;
  return j;
}

RunConfig config_from_json(const json& user) {
  const json defaults = config_to_json(RunConfig{});
  check_shape(defaults, user, "");
  json j = defaults;
  merge_into(j, user);

  RunConfig c;
  const json& d = j["domain"];
  try {
    c.domain = Domain::make(take<int>(d, "n"), take<double>(d, "R"), take<int>(d, "m"));
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("domain: ") + e.what());
  }
  c.s = take<double>(j["order"], "s");

  const json& p = j["phi"];
  const std::string pf = take<std::string>(p, "family");
  if (pf == "smoothed_cone") {
    c.phi.family = PhiSpec::Family::SmoothedCone;
  } else if (pf == "elliptic_cone") {
    c.phi.family = PhiSpec::Family::EllipticCone;
  } else {
    fail(ErrorKind::Config, "phi.family: unknown family '" + pf + "'");
  }
  c.phi.c0 = take<double>(p, "c0");
  const auto qv = p.at("q").get<std::vector<double>>();
  if (qv.size() != 3) fail(ErrorKind::Config, "phi.q must hold three numbers [a11, a12, a22]");
  c.phi.q = SymForm{qv[0], qv[1], qv[2]};
  c.phi.sigma = take<double>(p, "sigma");

  const json& s = j["psi"];
  const std::string sf = take<std::string>(s, "family");
  if (sf == "phi_plus_constant") {
    c.psi.family = PsiSpec::Family::PhiPlusConstant;
  } else if (sf == "phi_plus_bump") {
    c.psi.family = PsiSpec::Family::PhiPlusBump;
  } else if (sf == "paraboloid_cap") {
    c.psi.family = PsiSpec::Family::ParaboloidCap;
  } else {
    fail(ErrorKind::Config, "psi.family: unknown family '" + sf + "'");
  }
  c.psi.level = take<double>(s, "level");
  c.psi_level_relative = take<bool>(s, "level_relative");
  c.psi.amplitude = take<double>(s, "amplitude");
  c.psi.width = take<double>(s, "width");
  const auto cv = s.at("center").get<std::vector<double>>();
  if (cv.size() != 2) fail(ErrorKind::Config, "psi.center must hold two numbers");
  c.psi.center = {cv[0], cv[1]};

  c.solver.n_a = take<int>(j["atlas"], "n_a");
  c.solver.n_theta = take<int>(j["atlas"], "n_theta");
  auto& q = c.solver.quadrature;
  const json& qj = j["quadrature"];
  q.window = take<int>(qj, "window");
  q.tail_tol = take<double>(qj, "tail_tol");
  q.angular_nodes = take<int>(qj, "angular_nodes");
  q.radial_nodes = take<int>(qj, "radial_nodes");
  q.tail_decay = take<double>(qj, "tail_decay");
  q.angular_panels = take<int>(qj, "angular_panels");

  const json& sv = j["solver"];
  c.solver.tol_residual = take<double>(sv, "tol_residual");
  c.solver.max_policy_iterations = take<int>(sv, "max_policy_iterations");
  c.solver.linear_tol = take<double>(sv, "linear_tol");
  c.solver.relaxation_sweeps = take<int>(sv, "relaxation_sweeps");
  c.solver.contact_tol = take<double>(sv, "contact_tol");
  c.solver.force_relaxation = take<bool>(sv, "force_relaxation");
  const json& ct = j["continuation"];
  c.solver.eps0 = take<double>(ct, "eps0");
  c.solver.levels = take<int>(ct, "levels");
  c.solver.tol_cont = take<double>(ct, "tol_cont");
  c.solver.stop_on_lambda = take<bool>(ct, "stop_on_lambda");

  const json& an = j["analysis"];
  auto& a = c.analysis;
  a.alpha = take<double>(an, "alpha");
  a.fit_lo_cells = take<double>(an, "fit_lo_cells");
  a.fit_hi_cells = take<double>(an, "fit_hi_cells");
  a.min_count = take<std::size_t>(an, "min_count");
  a.rho_dens = take<double>(an, "rho_dens");
  a.rho_dens_low = take<double>(an, "rho_dens_low");
  a.tol_exp = take<double>(an, "tol_exp");
  a.blowup_points = take<int>(an, "blowup_points");
  a.diagnostics_stride = take<int>(an, "diagnostics_stride");
  const json& bu = an["blowup"];
  a.blowup.K = take<int>(bu, "K");
  a.blowup.r_min_cells = take<double>(bu, "r_min_cells");
  a.blowup.nu_factor = take<double>(bu, "nu_factor");
  a.blowup.k_lo = take<double>(bu, "k_lo");
  a.blowup.k_hi = take<double>(bu, "k_hi");
  a.blowup.angle_steps = take<int>(bu, "angle_steps");
  const json& sy = an["synthetic"];
  a.synthetic = take<std::string>(sy, "kind");
  a.synthetic_exponent = take<double>(sy, "exponent");
  a.synthetic_coefficient = take<double>(sy, "coefficient");
  a.synthetic_angle = take<double>(sy, "angle");

  c.out_dir = take<std::string>(j["output"], "dir");
  c.write_csv = take<bool>(j["output"], "csv");
  c.write_binary = take<bool>(j["output"], "binary");
  c.mutation = take<std::string>(j["verify"], "mutation");
  c.battery = take<std::string>(j["verify"], "battery");
  c.sweep_param = take<std::string>(j["sweep"], "param");
  c.sweep_values = j["sweep"].at("values").get<std::vector<double>>();
  c.sweep_kind = take<std::string>(j["sweep"], "kind");
  c.deterministic = take<bool>(j, "deterministic");
  c.workers = take<int>(j, "workers");

  // cross-field checks
  FracOrder::make(c.domain.n, c.s);
  try {
    c.phi.check(c.domain.n);
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("phi: ") + e.what());
  }
  c.solver.check();
  if (!c.deterministic) fail(ErrorKind::Config, "deterministic must be true; the suite has no random paths");
  if (c.workers < 1) fail(ErrorKind::Config, "workers must be at least 1");
  if (c.solver.n_a < 1 || c.solver.n_theta < 1) fail(ErrorKind::Config, "atlas counts must be positive");
  if (!(a.alpha >= 0.0)) fail(ErrorKind::Config, "analysis.alpha must be nonnegative (0 selects the default)");
  if (!(a.fit_lo_cells > 0.0 && a.fit_hi_cells > a.fit_lo_cells)) {
    fail(ErrorKind::Config, "analysis fit window must satisfy 0 < fit_lo_cells < fit_hi_cells");
  }
  if (a.diagnostics_stride < 1) fail(ErrorKind::Config, "analysis.diagnostics_stride must be positive");
  if (a.blowup.K < 1 || a.blowup.angle_steps < 4) fail(ErrorKind::Config, "blow-up K and angle_steps too small");
  if (!one_of(a.synthetic, {"none", "power_law", "profile"})) {
    fail(ErrorKind::Config, "analysis.synthetic.kind: unknown fixture '" + a.synthetic + "'");
  }
  if (!one_of(c.mutation, {"none", "flip_weight", "bad_determinant", "skip_projection"})) {
    fail(ErrorKind::Config, "verify.mutation: unknown defect '" + c.mutation + "'");
  }
  if (c.battery != "n1" && c.battery != "full") fail(ErrorKind::Config, "verify.battery must be n1 or full");
  if (c.sweep_kind != "operator" && c.sweep_kind != "solve") fail(ErrorKind::Config, "sweep.kind must be operator or solve");
  return c;
}

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": syntax error: " << e.what();
    fail(ErrorKind::Config, os.str());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "override must look like key.path=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  const json defaults = config_to_json(RunConfig{});
  const json* want = &defaults;
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!want->is_object() || !want->contains(part)) fail(ErrorKind::Config, "override names unknown key '" + key + "'");
    want = &want->at(part);
    if (!cur->is_object()) *cur = json::object();
    cur = &(*cur)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *cur = value;
}

RunConfig resolve_config(const json& doc, const std::vector<std::string>& overrides) {
  json d = doc.is_null() ? json::object() : doc;
  for (const auto& o : overrides) apply_override(d, o);
  return config_from_json(d);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Config, "cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    doc = parse_config_text(ss.str(), path);
  }
  return resolve_config(doc, overrides);
}

}  // namespace fracma
