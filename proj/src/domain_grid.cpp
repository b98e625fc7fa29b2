#include "fracma/domain_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fracma {

namespace {

std::string fmt_point(const Point& x, int n) {
  std::ostringstream os;
  os << std::setprecision(6) << "(" << x[0];
  if (n == 2) os << ", " << x[1];
  os << ")";
  return os.str();
}

// Snap a fractional cell coordinate onto an integer when it is within rounding
// noise, so interpolation at nodes is exact.
double snap(double t) {
  const double r = std::round(t);
  return std::abs(t - r) < 1e-9 ? r : t;
}

}  // namespace

Domain Domain::make(int n, double R, int m) {
  if (n != 1 && n != 2) fail(ErrorKind::Config, "domain.n must be 1 or 2, got " + std::to_string(n));
  if (!(R > 0.0) || !std::isfinite(R)) fail(ErrorKind::Config, "domain.R must be positive");
  if (m < 8 || m % 2 != 0) fail(ErrorKind::Config, "domain.m must be even and >= 8, got " + std::to_string(m));
  return Domain{n, R, m};
}

std::size_t Domain::size() const {
  const std::size_t p = static_cast<std::size_t>(per_axis());
  return n == 1 ? p : p * p;
}

std::array<int, 2> Domain::index(std::size_t f) const {
  const std::size_t p = static_cast<std::size_t>(per_axis());
  if (n == 1) return {static_cast<int>(f), 0};
  return {static_cast<int>(f % p), static_cast<int>(f / p)};
}

std::size_t Domain::flat(int i0, int i1) const {
  return static_cast<std::size_t>(i0) + static_cast<std::size_t>(per_axis()) * static_cast<std::size_t>(i1);
}

Point Domain::node(int i0, int i1) const {
  const double hh = h();
  return {-R + i0 * hh, n == 2 ? -R + i1 * hh : 0.0};
}

Point Domain::node(std::size_t f) const {
  const auto ij = index(f);
  return node(ij[0], ij[1]);
}

std::optional<std::size_t> Domain::shift(std::size_t f, int d0, int d1) const {
  const auto ij = index(f);
  const int a = ij[0] + d0;
  const int b = ij[1] + d1;
  if (a < 0 || a > m) return std::nullopt;
  if (n == 1) return d1 == 0 ? std::optional<std::size_t>(static_cast<std::size_t>(a)) : std::nullopt;
  if (b < 0 || b > m) return std::nullopt;
  return flat(a, b);
}

bool Domain::contains(const Point& x) const {
  const double lim = R * (1.0 + 1e-12);
  if (std::abs(x[0]) > lim) return false;
  return n == 1 || std::abs(x[1]) <= lim;
}

double SymForm::quad(const Point& z, int n) const {
  if (n == 1) return a11 * z[0] * z[0];
  return a11 * z[0] * z[0] + 2.0 * a12 * z[0] * z[1] + a22 * z[1] * z[1];
}

double FarField::cone(const Point& dir, int n) const {
  if (cone_coef == 0.0) return 0.0;
  return cone_coef * std::sqrt(std::max(0.0, cone_form.quad(dir, n)));
}

FarField FarField::operator-(const FarField& o) const {
  FarField r = *this;
  if (o.cone_coef != 0.0) {
    const bool same = o.cone_form.a11 == cone_form.a11 && o.cone_form.a12 == cone_form.a12 &&
                      o.cone_form.a22 == cone_form.a22;
    if (!same && cone_coef != 0.0) fail(ErrorKind::Internal, "far fields with different cone forms cannot be combined");
    if (cone_coef == 0.0) r.cone_form = o.cone_form;
    r.cone_coef = cone_coef - o.cone_coef;
  }
  r.p = {p[0] - o.p[0], p[1] - o.p[1]};
  r.b0 = b0 - o.b0;
  return r;
}

FarField FarField::operator+(double c) const {
  FarField r = *this;
  r.b0 += c;
  return r;
}

FarField FarField::scaled(double k) const {
  FarField r = *this;
  r.cone_coef *= k;
  r.p = {p[0] * k, p[1] * k};
  r.b0 *= k;
  return r;
}

Closure Closure::zero() { return Closure{ClosureTag::Zero, nullptr, FarField{}}; }

Closure Closure::analytic(std::function<double(const Point&)> fn, FarField far, ClosureTag tag) {
  return Closure{tag, std::move(fn), far};
}

Closure Closure::plus_constant(double c) const {
  auto inner = fn;
  std::function<double(const Point&)> g;
  if (inner) {
    g = [inner, c](const Point& x) { return inner(x) + c; };
  } else {
    g = [c](const Point&) { return c; };
  }
  return Closure{tag == ClosureTag::Zero ? ClosureTag::Analytic : tag, g, far + c};
}

const char* closure_tag_name(ClosureTag tag) {
  switch (tag) {
    case ClosureTag::AnalyticPhi: return "analytic_phi";
    case ClosureTag::Analytic: return "analytic";
    case ClosureTag::Zero: return "zero";
  }
  return "?";
}

// ---- phi ----

double PhiSpec::value(const Point& x, int n) const {
  double q2;
  if (family == Family::SmoothedCone) {
    q2 = x[0] * x[0] + (n == 2 ? x[1] * x[1] : 0.0);
  } else {
    q2 = q.quad(x, n);
  }
  // sqrt(c0^2 + q) - c0 written to avoid cancellation near the origin
  const double root = std::sqrt(c0 * c0 + q2);
  return q2 / (root + c0);
}

FarField PhiSpec::far_field() const {
  FarField f;
  f.cone_coef = 1.0;
  f.cone_form = family == Family::SmoothedCone ? SymForm{} : q;
  f.b0 = -c0;
  return f;
}

Closure PhiSpec::closure() const {
  const PhiSpec self = *this;
  // the closure does not know n; 1D callers pass x[1] = 0, which gives the same value
  return Closure::analytic([self](const Point& x) { return self.value(x, 2); }, far_field(),
                           ClosureTag::AnalyticPhi);
}

double PhiSpec::eta(const Point& x, int n) const {
  return value(x, n) - (far_field().cone(x, n) + far_field().b0);
}

double PhiSpec::decay_amplitude() const {
  double lam = 1.0;
  if (family == Family::EllipticCone) {
    const double tr = q.a11 + q.a22;
    const double det = q.a11 * q.a22 - q.a12 * q.a12;
    lam = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    lam = std::min(lam, q.a11);  // n = 1 uses q.a11 alone
  }
  return c0 * c0 / (2.0 * std::sqrt(lam));
}

double PhiSpec::decay_exponent(int n) const { return n == 1 ? 0.5 : 1.0; }

void PhiSpec::check(int n) const {
  if (!(c0 > 0.0) || !std::isfinite(c0)) fail(ErrorKind::Config, "phi.c0 must be positive");
  if (!(sigma > 0.0)) fail(ErrorKind::Config, "phi.sigma must be positive");
  if (family == Family::EllipticCone) {
    const bool spd = n == 1 ? q.a11 > 0.0 : (q.a11 > 0.0 && q.a11 * q.a22 - q.a12 * q.a12 > 0.0);
    if (!spd) fail(ErrorKind::Config, "phi.q must be positive definite");
  }
}

// ---- psi ----

double PsiSpec::gap(const Point& x, int n) const {
  const double dx = x[0] - center[0];
  const double dy = n == 2 ? x[1] - center[1] : 0.0;
  const double r2 = dx * dx + dy * dy;
  switch (family) {
    case Family::PhiPlusConstant:
      return level;
    case Family::PhiPlusBump:
      return level + amplitude * std::exp(-r2 / (width * width));
    case Family::ParaboloidCap:
      // q r^2 near the center, saturating at q w^2 so psi - phi stays bounded
      return level + amplitude * width * width * -std::expm1(-r2 / (width * width));
  }
  return level;
}

double PsiSpec::value(const PhiSpec& phi, const Point& x, int n) const { return phi.value(x, n) + gap(x, n); }

Closure PsiSpec::closure(const PhiSpec& phi) const {
  const PsiSpec self = *this;
  const PhiSpec ph = phi;
  double far_gap = level;
  if (family == Family::ParaboloidCap) far_gap += amplitude * width * width;
  return Closure::analytic([self, ph](const Point& x) { return self.value(ph, x, 2); },
                           ph.far_field() + far_gap, ClosureTag::Analytic);
}

double PsiSpec::min_gap() const {
  switch (family) {
    case Family::PhiPlusConstant: return level;
    case Family::PhiPlusBump: return level + std::min(0.0, amplitude);
    case Family::ParaboloidCap: return level + std::min(0.0, amplitude * width * width);
  }
  return level;
}

// ---- fields ----

GridField::GridField(Domain domain, std::vector<double> values, Closure closure)
    : domain_(domain), values_(std::move(values)), closure_(std::move(closure)) {
  if (values_.size() != domain_.size()) fail(ErrorKind::Internal, "field size does not match domain");
}

double GridField::eval(const Point& x) const {
  if (!domain_.contains(x)) return closure_(x);
  const double hh = domain_.h();
  const int m = domain_.m;
  auto locate = [&](double c, int& i, double& t) {
    double u = snap((c + domain_.R) / hh);
    u = std::clamp(u, 0.0, static_cast<double>(m));
    i = std::min(static_cast<int>(std::floor(u)), m - 1);
    t = u - i;
  };
  int i0, i1 = 0;
  double t0, t1 = 0.0;
  locate(x[0], i0, t0);
  if (domain_.n == 1) {
    if (t0 == 0.0) return values_[i0];
    if (t0 == 1.0) return values_[i0 + 1];
    return (1.0 - t0) * values_[i0] + t0 * values_[i0 + 1];
  }
  locate(x[1], i1, t1);
  auto v = [&](int a, int b) { return values_[domain_.flat(a, b)]; };
  if ((t0 == 0.0 || t0 == 1.0) && (t1 == 0.0 || t1 == 1.0)) {
    return v(i0 + static_cast<int>(t0), i1 + static_cast<int>(t1));
  }
  return (1.0 - t0) * (1.0 - t1) * v(i0, i1) + t0 * (1.0 - t1) * v(i0 + 1, i1) +
         (1.0 - t0) * t1 * v(i0, i1 + 1) + t0 * t1 * v(i0 + 1, i1 + 1);
}

GridField GridField::with_values(std::vector<double> values) const {
  return GridField(domain_, std::move(values), closure_);
}

GridField GridField::with_closure(Closure closure) const { return GridField(domain_, values_, std::move(closure)); }

GridField build_field(const Domain& domain, const std::function<double(const Point&)>& expr, Closure closure) {
  std::vector<double> vals(domain.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const Point x = domain.node(i);
    const double v = expr(x);
    if (!std::isfinite(v)) {
      fail(ErrorKind::Validation, "non-finite sample at node " + std::to_string(i) + " " + fmt_point(x, domain.n));
    }
    vals[i] = v;
  }
  return GridField(domain, std::move(vals), std::move(closure));
}

// ---- budgets ----

namespace {
bool within(const Domain& d, std::size_t i, double radius) {
  const Point x = d.node(i);
  return std::abs(x[0]) <= radius * (1.0 + 1e-12) && (d.n == 1 || std::abs(x[1]) <= radius * (1.0 + 1e-12));
}
}  // namespace

double discrete_lipschitz(const GridField& f, double radius) {
  const Domain& d = f.domain();
  const double h = d.h();
  double best = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!within(d, i, radius)) continue;
    double g2 = 0.0;
    bool any = false;
    for (int axis = 0; axis < d.n; ++axis) {
      auto j = d.shift(i, axis == 0 ? 1 : 0, axis == 1 ? 1 : 0);
      if (!j || !within(d, *j, radius)) continue;
      const double g = (f[*j] - f[i]) / h;
      g2 += g * g;
      any = true;
    }
    if (any) best = std::max(best, std::sqrt(g2));
  }
  return best;
}

double discrete_semiconcavity(const GridField& f, double radius) {
  const Domain& d = f.domain();
  const double h = d.h();
  static const int dirs2[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  const int ndirs = d.n == 1 ? 1 : 4;
  double best = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int k = 0; k < ndirs; ++k) {
      const int a = dirs2[k][0], b = dirs2[k][1];
      auto p = d.shift(i, a, b);
      auto q = d.shift(i, -a, -b);
      if (!p || !q || !within(d, i, radius) || !within(d, *p, radius) || !within(d, *q, radius)) continue;
      const double len2 = (a * a + b * b) * h * h;
      best = std::max(best, (f[*p] + f[*q] - 2.0 * f[i]) / len2);
    }
  }
  return best;
}

bool Box::contains(const Point& x, int n, double slack) const {
  if (empty) return false;
  for (int k = 0; k < n; ++k) {
    if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
  }
  return true;
}

// ---- validation ----

ValidationReport validate_problem(const GridField& phi, const GridField& psi, const GridField& ubar) {
  const Domain& d = phi.domain();
  if (!(psi.domain() == d) || !(ubar.domain() == d)) fail(ErrorKind::Validation, "fields live on different grids");
  ValidationReport rep;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double g = psi[i] - phi[i];
    rep.min_gap = std::min(rep.min_gap, g);
    if (!(g > 0.0)) {
      fail(ErrorKind::Validation, "obstacle does not lie strictly above phi at node " + std::to_string(i) + " " +
                                      fmt_point(d.node(i), d.n));
    }
  }
  // exterior samples on rings well outside the box
  const int n = d.n;
  const int nang = n == 1 ? 2 : 64;
  for (double rad : {1.5 * d.R, 3.0 * d.R, 10.0 * d.R, 100.0 * d.R}) {
    for (int k = 0; k < nang; ++k) {
      const double t = 2.0 * M_PI * k / nang;
      const Point x = n == 1 ? Point{k == 0 ? rad : -rad, 0.0} : Point{rad * std::cos(t), rad * std::sin(t)};
      const double g = psi.closure()(x) - phi.closure()(x);
      if (!(g > 0.0)) {
        fail(ErrorKind::Validation, "obstacle does not lie strictly above phi on the exterior at " + fmt_point(x, n));
      }
    }
  }
  Box box;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (psi[i] > ubar[i]) continue;
    const Point x = d.node(i);
    if (box.empty) {
      box.lo = box.hi = x;
      box.empty = false;
    }
    for (int k = 0; k < n; ++k) {
      box.lo[k] = std::min(box.lo[k], x[k]);
      box.hi[k] = std::max(box.hi[k], x[k]);
    }
    ++rep.compact_count;
  }
  rep.compact_set = box;
  if (box.empty) {
    rep.obstacle_inactive = true;
    rep.warnings.push_back("obstacle inactive; problem degenerates to the unconstrained equation");
    return rep;
  }
  const double half = 0.5 * d.R;
  for (int k = 0; k < n; ++k) {
    if (box.lo[k] <= -half || box.hi[k] >= half) {
      fail(ErrorKind::Validation, "set {psi <= ubar} reaches the boundary of the half box; enlarge R");
    }
  }
  return rep;
}

ValidationReport validate_problem(const PhiSpec& phi, const PsiSpec& psi, const GridField& ubar) {
  const Domain& d = ubar.domain();
  phi.check(d.n);
  if (!(psi.min_gap() > 0.0)) fail(ErrorKind::Validation, "obstacle gap psi - phi is not strictly positive");
  // strict convexity of phi: smallest eigenvalue of the difference Hessian
  const double h = d.h();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point x = d.node(i);
    auto f = [&](double a, double b) { return phi.value({x[0] + a, x[1] + b}, d.n); };
    const double fxx = (f(h, 0) + f(-h, 0) - 2.0 * f(0, 0)) / (h * h);
    double lam = fxx;
    if (d.n == 2) {
      const double fyy = (f(0, h) + f(0, -h) - 2.0 * f(0, 0)) / (h * h);
      const double fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
      const double tr = fxx + fyy, det = fxx * fyy - fxy * fxy;
      lam = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    }
    if (!(lam > 0.0)) fail(ErrorKind::Validation, "phi is not strictly convex at " + fmt_point(x, d.n));
  }
  const GridField phif = build_field(d, [&](const Point& x) { return phi.value(x, d.n); }, phi.closure());
  const GridField psif = build_field(d, [&](const Point& x) { return psi.value(phi, x, d.n); }, psi.closure(phi));
  return validate_problem(phif, psif, ubar);
}

// ---- serialization ----

void write_csv(const GridField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Config, "cannot write " + path);
  const Domain& d = f.domain();
  os << (d.n == 1 ? "x,value\n" : "x,y,value\n");
  os << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point x = d.node(i);
    os << x[0] << ',';
    if (d.n == 2) os << x[1] << ',';
    os << f[i] << '\n';
  }
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_binary(const GridField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Config, "cannot write " + path);
  const Domain& d = f.domain();
  put<std::int32_t>(os, d.n);
  put<double>(os, d.R);
  put<std::int32_t>(os, d.m);
  put<std::int32_t>(os, static_cast<std::int32_t>(f.closure().tag));
  for (double v : f.values()) put<double>(os, v);
}

RawField read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Config, "cannot read " + path);
  RawField r;
  const int n = get<std::int32_t>(is);
  const double R = get<double>(is);
  const int m = get<std::int32_t>(is);
  const int tag = get<std::int32_t>(is);
  if (!is) fail(ErrorKind::Config, "truncated field header in " + path);
  r.domain = Domain::make(n, R, m);
  if (tag < 0 || tag > 2) fail(ErrorKind::Config, "unknown closure tag in " + path);
  r.tag = static_cast<ClosureTag>(tag);
  r.values.resize(r.domain.size());
  is.read(reinterpret_cast<char*>(r.values.data()), static_cast<std::streamsize>(r.values.size() * sizeof(double)));
  if (!is) fail(ErrorKind::Config, "truncated field data in " + path);
  return r;
}

}  // namespace fracma
