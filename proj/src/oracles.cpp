#include "fracma/oracles.hpp"

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "fracma/matrix_atlas.hpp"
#include "fracma/nonlocal_operator.hpp"

namespace fracma {

namespace {

constexpr double kPi = 3.14159265358979323846;

double get_num(const nlohmann::json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  const auto& v = p.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return std::stod(v.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  fail(ErrorKind::Config, std::string("oracle parameter '") + key + "' must be a number");
}

}  // namespace

double oracle_gaussian(int n, double s, double r) {
  boost::math::quadrature::tanh_sinh<double> ts;
  // the Gaussian factor is below 1e-40 past |xi| = 20
  if (n == 1) {
    auto f = [&](double xi) { return std::pow(xi, 2.0 * s) * std::exp(-0.25 * xi * xi) * std::cos(xi * r); };
    return ts.integrate(f, 0.0, 20.0) / std::sqrt(kPi);
  }
  if (n == 2) {
    auto f = [&](double rho) {
      return std::pow(rho, 2.0 * s + 1.0) * std::exp(-0.25 * rho * rho) * boost::math::cyl_bessel_j(0, rho * r);
    };
    return 0.5 * ts.integrate(f, 0.0, 20.0);
  }
  fail(ErrorKind::Config, "gaussian oracle supports n = 1 or 2");
}

double oracle_cell_weight_1d(int j, double h, double s) {
  if (j == 0) fail(ErrorKind::Config, "cell-weight oracle needs j != 0");
  const double a = (std::abs(j) - 0.5) * h, b = (std::abs(j) + 0.5) * h;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate([&](double y) { return std::pow(y, -1.0 - 2.0 * s); }, a, b);
}

double oracle_cone_1d(double s, double c0, double x) {
  const FracOrder o = FracOrder::make(1, s);
  auto phi = [&](double t) { return std::hypot(c0, t) - c0; };
  auto delta = [&](double y) { return phi(x + y) + phi(x - y) - 2.0 * phi(x); };
  boost::math::quadrature::tanh_sinh<double> ts;
  // delta / y^2 tends to phi''(x); switch to it before the difference cancels
  const double curv = c0 * c0 / std::pow(c0 * c0 + x * x, 1.5);
  const double inner = ts.integrate(
      [&](double y) {
        const double q = y < 1e-4 * c0 ? curv : delta(y) / (y * y);
        return q * std::pow(y, 1.0 - 2.0 * s);
      },
      0.0, 1.0);
  // y = 1/t on the outer part
  const double outer = ts.integrate(
      [&](double t) { return t <= 0.0 ? 0.0 : delta(1.0 / t) * std::pow(t, 2.0 * s - 1.0); }, 0.0, 1.0);
  // L = c * int_0^inf delta y^{-1-2s} dy is -(-Delta)^s
  return o.c * (inner + outer);
}

std::vector<std::size_t> oracle_atlas_counts(int n, double eps0, int n_a, int n_theta, int levels) {
  std::vector<std::size_t> out;
  MatrixAtlas at = build_atlas(n, eps0, n_a, n_theta);
  out.push_back(at.size());
  for (int k = 1; k < levels; ++k) {
    at = refine_atlas(at, eps0 * std::ldexp(1.0, -k));
    out.push_back(at.size());
  }
  return out;
}

nlohmann::json run_oracle(const std::string& kind, const nlohmann::json& p) {
  nlohmann::json out;
  out["kind"] = kind;
  out["params"] = p;
  if (kind == "gaussian-frac-laplacian") {
    const int n = static_cast<int>(get_num(p, "n", 1));
    const double s = get_num(p, "s", 0.75), r = get_num(p, "r", 0.0);
    out["value"] = oracle_gaussian(n, s, r);
    out["note"] = "(-Delta)^s exp(-|x|^2); the operator L applied to the same function returns the negative";
    if (r == 0.0) out["closed_form"] = std::pow(4.0, s) * std::tgamma(0.5 * n + s) / std::tgamma(0.5 * n);
  } else if (kind == "cell-weight") {
    const int j = static_cast<int>(get_num(p, "j", 3));
    const double h = get_num(p, "h", 0.1), s = get_num(p, "s", 0.75);
    if (static_cast<int>(get_num(p, "n", 1)) != 1) fail(ErrorKind::Config, "cell-weight oracle is one-dimensional");
    out["value"] = oracle_cell_weight_1d(j, h, s);
    out["closed_form"] = cell_weight_1d(j, h, s);
  } else if (kind == "c_ns") {
    const int n = static_cast<int>(get_num(p, "n", 1));
    out["value"] = c_ns(n, get_num(p, "s", 0.75));
  } else if (kind == "radial-cone") {
    out["value"] = oracle_cone_1d(get_num(p, "s", 0.75), get_num(p, "c0", 1.0), get_num(p, "x", 0.0));
    out["note"] = "L applied to the 1D smoothed cone, i.e. -(-Delta)^s phi";
  } else if (kind == "affine") {
    // reference is exactly zero; report what the discrete operator returns on a sample
    const int n = static_cast<int>(get_num(p, "n", 1));
    const double s = get_num(p, "s", 0.75);
    const Domain d = Domain::make(n, get_num(p, "R", 4.0), static_cast<int>(get_num(p, "m", 32)));
    const double b0 = get_num(p, "b0", 0.3), p0 = get_num(p, "p0", -1.2), p1 = get_num(p, "p1", 0.7);
    auto f = [=](const Point& x) { return b0 + p0 * x[0] + (n == 2 ? p1 * x[1] : 0.0); };
    FarField far;
    far.p = {p0, n == 2 ? p1 : 0.0};
    far.b0 = b0;
    const GridField u = build_field(d, f, Closure::analytic(f, far));
    const KernelStencil st = build_stencil(FracOrder::make(n, s), MatrixParams{}, d);
    double worst = 0.0;
    for (double v : apply_LAs(u, st)) worst = std::max(worst, std::abs(v));
    out["value"] = 0.0;
    out["discrete_max_abs"] = worst;
  } else if (kind == "atlas-count") {
    out["value"] = oracle_atlas_counts(static_cast<int>(get_num(p, "n", 2)), get_num(p, "eps", 0.5),
                                       static_cast<int>(get_num(p, "n_a", 2)),
                                       static_cast<int>(get_num(p, "n_theta", 6)),
                                       static_cast<int>(get_num(p, "levels", 4)));
  } else {
    fail(ErrorKind::Config, "unknown oracle kind '" + kind +
                                "' (gaussian-frac-laplacian, cell-weight, c_ns, radial-cone, affine, atlas-count)");
  }
  return out;
}

}  // namespace fracma
