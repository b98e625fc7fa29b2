#include "fracma/kernel_quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fracma {

namespace {

constexpr double kPi = 3.14159265358979323846;

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10, unsigned depth = 15) {
  if (b <= a) return 0.0;
  double err = 0.0;
  return GK::integrate(f, a, b, depth, tol, &err);
}

// Adaptive integral over [lo, hi] split at every breakpoint inside.
double integrate_split(const std::function<double(double)>& f, double lo, double hi, std::vector<double> breaks,
                       double tol = 1e-10) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  double prev = lo;
  for (double b : breaks) {
    if (b <= prev + 1e-15 || b > hi) continue;
    total += integrate(f, prev, b, tol);
    prev = b;
  }
  return total;
}

double wrap_pi(double t) {
  t = std::fmod(t, kPi);
  return t < 0.0 ? t + kPi : t;
}

// Octant corners plus the principal axes of A (kernel minimum and ridge).
std::vector<double> angle_breaks(const MatrixParams& A, double period) {
  std::vector<double> br;
  const int reps = period > kPi + 1e-9 ? 2 : 1;
  for (int k = 1; k < 4 * reps; ++k) br.push_back(k * kPi / 4.0);
  for (int r = 0; r < reps; ++r) {
    br.push_back(wrap_pi(A.theta) + r * kPi);
    br.push_back(wrap_pi(A.theta + 0.5 * kPi) + r * kPi);
  }
  return br;
}

double square_radius(double half_side, double t) {
  return half_side / std::max(std::abs(std::cos(t)), std::abs(std::sin(t)));
}

// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
  std::vector<double> x, w;
  for (int i = 1; i <= order; ++i) {
    double z = std::cos(kPi * (i - 0.25) / (order + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x.push_back(z);
    w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
  }
  return {x, w};
}


// Integral of |A^{-1}y|^{-(2+2s)} over a box not containing the origin, in
// polar form: the radial part is exact, the angular part adaptive with
// breakpoints at the corner directions and the kernel's principal axes.
double cell_integral(const MatrixParams& P, double s, double x0, double x1, double z0, double z1) {
  const double xc = 0.5 * (x0 + x1), zc = 0.5 * (z0 + z1);
  const double tc = std::atan2(zc, xc);
  auto rel = [tc](double t) {
    double d = t - tc;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    return d;
  };
  double lo = 0.0, hi = 0.0;
  std::vector<double> br;
  for (double cx : {x0, x1}) {
    for (double cz : {z0, z1}) {
      const double d = rel(std::atan2(cz, cx));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      br.push_back(d);
    }
  }
  for (double ax : {P.theta, P.theta + 0.5 * kPi}) {
    for (int k = -2; k <= 2; ++k) {
      const double d = rel(ax + k * kPi);
      if (d > lo && d < hi) br.push_back(d);
    }
  }
  auto f = [&](double d) {
    const double t = tc + d;
    const double c = std::cos(t), sn = std::sin(t);
    // slab intersection of the ray with the box
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    auto slab = [&](double dir, double a, double b) {
      if (std::abs(dir) < 1e-300) {
        if (a > 0.0 || b < 0.0) tmax = -1.0;
        return;
      }
      double t1 = a / dir, t2 = b / dir;
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
    };
    slab(c, x0, x1);
    slab(sn, z0, z1);
    if (!(tmax > tmin) || tmin <= 0.0) return 0.0;
    const double g = std::pow(P.inv_norm2({c, sn}), -(1.0 + s));
    return g * (std::pow(tmin, -2.0 * s) - std::pow(tmax, -2.0 * s)) / (2.0 * s);
  };
  return integrate_split(f, lo, hi, br);
}

}  // namespace

double c_ns(int n, double s) {
  if (!(s > 0.5 && s < 1.0)) fail(ErrorKind::Config, "order s must lie in (1/2, 1)");
  using boost::math::tgamma;
  // |Gamma(-s)| = Gamma(1-s)/s on (0,1)
  const double g_neg = tgamma(1.0 - s) / s;
  return std::pow(4.0, s) * tgamma(0.5 * n + s) / (std::pow(kPi, 0.5 * n) * g_neg);
}

FracOrder FracOrder::make(int n, double s) {
  if (n != 1 && n != 2) fail(ErrorKind::Config, "dimension must be 1 or 2");
  return FracOrder{n, s, c_ns(n, s)};
}

Eigen::Matrix2d MatrixParams::matrix() const {
  const double c = std::cos(theta), sn = std::sin(theta);
  Eigen::Matrix2d R;
  R << c, -sn, sn, c;
  return scale * (R * Eigen::Vector2d(a, 1.0 / a).asDiagonal() * R.transpose());
}

double MatrixParams::inv_norm2(const Point& y) const {
  const double c = std::cos(theta), sn = std::sin(theta);
  const double p = c * y[0] + sn * y[1];
  const double q = -sn * y[0] + c * y[1];
  return (p * p / (a * a) + a * a * q * q) / (scale * scale);
}

MatrixParams MatrixParams::from_matrix(const Eigen::Matrix2d& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
  const Eigen::Vector2d v = es.eigenvectors().col(0);
  const double sc = std::sqrt(es.eigenvalues()(0) * es.eigenvalues()(1));
  return MatrixParams{es.eigenvalues()(0) / sc, wrap_pi(std::atan2(v(1), v(0))), sc};
}

double cell_weight_1d(int j, double h, double s) {
  const double aj = std::abs(static_cast<double>(j));
  return (std::pow((aj - 0.5) * h, -2.0 * s) - std::pow((aj + 0.5) * h, -2.0 * s)) / (2.0 * s);
}

double KernelStencil::kernel(const Point& y) const {
  const double s = order.s;
  if (order.n == 1) return std::pow(std::abs(y[0]), -1.0 - 2.0 * s);
  return std::pow(params.inv_norm2(y), -(1.0 + s));
}

double KernelStencil::weight(const Offset& j) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), j);
  if (it == cells.end() || !(*it == j)) return 0.0;
  return cell_weights[static_cast<std::size_t>(it - cells.begin())];
}

double KernelStencil::cone_integral(const FarField& far) const {
  if (far.cone_coef == 0.0) return 0.0;
  if (order.n == 1) return far.cone({1.0, 0.0}, 1) + far.cone({-1.0, 0.0}, 1);
  auto f = [&](double t) {
    const Point e{std::cos(t), std::sin(t)};
    return far.cone(e, 2) * kernel(e);
  };
  return integrate_split(f, 0.0, 2.0 * kPi, angle_breaks(params, 2.0 * kPi));
}

double KernelStencil::total_mass() const {
  double t = 0.0;
  for (double w : cell_weights) t += w;
  t += kappa[0] + (order.n == 2 ? kappa[1] : 0.0);
  for (double w : tail_weights) t += w;
  return t + far_mass;
}

KernelStencil build_stencil(const FracOrder& order, const Eigen::Matrix2d& A, const Domain& domain,
                            const StencilOptions& opts) {
  if (order.n == 1) {
    if (std::abs(A(0, 0) - 1.0) > 1e-12) fail(ErrorKind::Validation, "1D matrix must be the identity");
    return build_stencil(order, MatrixParams{}, domain, opts);
  }
  if (std::abs(A(0, 1) - A(1, 0)) > 1e-12) fail(ErrorKind::Validation, "matrix is not symmetric");
  if (std::abs(A.determinant() - 1.0) > 1e-12) fail(ErrorKind::Validation, "matrix determinant differs from 1");
  if (!(A(0, 0) > 0.0)) fail(ErrorKind::Validation, "matrix is not positive definite");
  return build_stencil(order, MatrixParams::from_matrix(A), domain, opts);
}

KernelStencil build_stencil(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                            const StencilOptions& opts) {
  if (order.n != domain.n) fail(ErrorKind::Validation, "order and domain dimensions differ");
  if (!(A.a > 0.0) || !std::isfinite(A.a)) fail(ErrorKind::Validation, "matrix eigenvalue must be positive");
  const double det = order.n == 2 ? A.matrix().determinant() : A.scale;
  if (std::abs(det - 1.0) > 1e-12) fail(ErrorKind::Validation, "matrix determinant differs from 1");
  const int W = opts.window > 0 ? opts.window : domain.m / 4;
  if (W > domain.m / 2) fail(ErrorKind::Config, "quadrature window exceeds m/2");
  if (W < 1) fail(ErrorKind::Config, "quadrature window must be at least one cell");
  if (!(opts.tail_tol > 0.0)) fail(ErrorKind::Config, "tail_tol must be positive");
  if (opts.angular_nodes < 1 || opts.radial_nodes < 1) fail(ErrorKind::Config, "tail node counts must be positive");

  KernelStencil st;
  st.order = order;
  st.params = order.n == 1 ? MatrixParams{} : A;
  st.h = domain.h();
  st.window = W;
  st.tail_tol = opts.tail_tol;
  st.options = opts;
  st.options.window = W;
  const int n = order.n;
  const double s = order.s;
  const double h = st.h;
  const double hscale = std::pow(h, -2.0 * s);  // cell integrals scale like h^{-2s}

  // ---- window cells (computed at unit spacing, then scaled) ----
  std::vector<Offset> half;
  if (n == 1) {
    for (int j = 1; j <= W; ++j) half.push_back({j, 0});
  } else {
    for (int j1 = 0; j1 <= W; ++j1)
      for (int j0 = -W; j0 <= W; ++j0)
        if (j1 > 0 || j0 > 0) half.push_back({j0, j1});
  }
  std::vector<double> half_w(half.size());
  if (n == 1) {
    for (std::size_t k = 0; k < half.size(); ++k) half_w[k] = cell_weight_1d(half[k].d0, h, s);
  } else {
    const MatrixParams P = st.params;
    parallel_for(half.size(), [&](std::size_t k) {
      half_w[k] = cell_integral(P, s, half[k].d0 - 0.5, half[k].d0 + 0.5, half[k].d1 - 0.5, half[k].d1 + 0.5) * hscale;
    });
  }
  {
    std::vector<std::pair<Offset, double>> all;
    for (std::size_t k = 0; k < half.size(); ++k) {
      all.push_back({half[k], half_w[k]});
      all.push_back({{-half[k].d0, -half[k].d1}, half_w[k]});
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    for (auto& [o, w] : all) {
      st.cells.push_back(o);
      st.cell_weights.push_back(w);
    }
  }

  // ---- central cell moments ----
  // second moments over the unit cell C0 = [-1/2, 1/2]^n; the window square
  // (2W+1) C0 carries (2W+1)^{2-2s} times as much by homogeneity
  std::array<double, 3> m0{0.0, 0.0, 0.0};  // M_00, M_11, M_01 at unit spacing
  if (n == 1) {
    m0[0] = 2.0 * std::pow(0.5, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  } else {
    const auto br = angle_breaks(st.params, 2.0 * kPi);
    auto moment = [&](int which) {
      auto f = [&](double t) {
        const double c = std::cos(t), sn = std::sin(t);
        const double e = which == 0 ? c * c : (which == 1 ? sn * sn : c * sn);
        const double rb = square_radius(0.5, t);
        return e * std::pow(st.params.inv_norm2({c, sn}), -(1.0 + s)) * std::pow(rb, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
      };
      return integrate_split(f, 0.0, 2.0 * kPi, br);
    };
    for (int w = 0; w < 3; ++w) m0[static_cast<std::size_t>(w)] = moment(w);
  }
  const double grow = std::pow(2.0 * W + 1.0, 2.0 - 2.0 * s);
  // everything below is in units where h = 1, then scaled by h^{-2s}
  std::array<double, 3> lattice{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < st.cells.size(); ++k) {
    const double w = st.cell_weights[k] / hscale;
    const double j0 = st.cells[k].d0, j1 = st.cells[k].d1;
    lattice[0] += j0 * j0 * w;
    lattice[1] += j1 * j1 * w;
    lattice[2] += j0 * j1 * w;
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    st.kappa_cell[ii] = m0[ii] * hscale;
    st.kappa[ii] = std::max(0.0, (grow * m0[ii] - lattice[ii]) * hscale);
  }
  if (n == 2) {
    double mu = 0.5 * (grow * m0[2] - lattice[2]) * hscale;
    const double cap = 1.999 * std::min(st.weight({1, 1}), st.weight({1, -1}));
    st.mixed = std::clamp(mu, -cap, cap);
  }

  // ---- far radius from the closure remainder bound ----
  st.tail_inner = (W + 0.5) * h;
  const double a_sq = st.tail_inner;
  if (n == 1) {
    st.angular_mass = 2.0;
  } else {
    auto g = [&](double t) { return std::pow(st.params.inv_norm2({std::cos(t), std::sin(t)}), -(1.0 + s)); };
    st.angular_mass = integrate_split(g, 0.0, 2.0 * kPi, angle_breaks(st.params, 2.0 * kPi));
  }
  const double c = order.c;
  const double rad2 = n * domain.R * domain.R;
  auto bound = [&](double Rf) {
    return c * (2.0 * opts.tail_decay + 2.0 * rad2) * st.angular_mass * std::pow(Rf, -1.0 - 2.0 * s) / (1.0 + 2.0 * s);
  };
  double Rf = 2.0 * a_sq;
  const double rmin = 4.0 * std::sqrt(static_cast<double>(n)) * domain.R;
  for (int k = 0; k < 400 && (bound(Rf) > opts.tail_tol || Rf < rmin); ++k) Rf *= 2.0;
  st.far_radius = Rf;
  st.remainder_bound = bound(Rf);
  st.far_mass = st.angular_mass * std::pow(Rf, -2.0 * s) / (2.0 * s);

  // ---- numeric tail between the window square and the far radius ----
  const double rho_f = std::pow(Rf, -2.0 * s);
  auto ray_mass = [&](double rsq) { return (std::pow(rsq, -2.0 * s) - rho_f) / (2.0 * s); };
  std::vector<double> angles, angle_w;
  if (n == 1) {
    angles.push_back(0.0);
    angle_w.push_back(ray_mass(a_sq));
  } else {
    auto dens = [&](double t) {
      const double g = std::pow(st.params.inv_norm2({std::cos(t), std::sin(t)}), -(1.0 + s));
      return g * ray_mass(square_radius(a_sq, t));
    };
    // piecewise Gauss table of the angular mass on [0, pi)
    auto br = angle_breaks(st.params, kPi);
    br.push_back(0.0);
    br.push_back(kPi);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }), br.end());
    std::vector<double> edges{0.0};
    for (std::size_t b = 1; b < br.size(); ++b) {
      const double len = br[b] - br[b - 1];
      const int np = std::max(4, static_cast<int>(std::ceil(opts.angular_panels * len / kPi)));
      for (int p = 1; p <= np; ++p) edges.push_back(br[b - 1] + len * p / np);
    }
    std::vector<double> cum(edges.size(), 0.0);
    for (std::size_t p = 1; p < edges.size(); ++p) {
      const double l = edges[p - 1], r = edges[p];
      const double mass = boost::math::quadrature::gauss<double, 4>::integrate(dens, l, r);
      cum[p] = cum[p - 1] + mass;
    }
    const double total = cum.back();
    const int N = opts.angular_nodes;
    for (int k = 0; k < N; ++k) {
      const double target = (k + 0.5) * total / N;
      const std::size_t p = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin());
      const std::size_t lo = std::min(std::max<std::size_t>(p, 1), cum.size() - 1) - 1;
      const double frac = (target - cum[lo]) / std::max(cum[lo + 1] - cum[lo], 1e-300);
      angles.push_back(edges[lo] + frac * (edges[lo + 1] - edges[lo]));
      angle_w.push_back(total / N);
    }
  }
  std::map<Offset, double> tail;
  auto deposit = [&](const Point& y, double w) {
    // bilinear split onto the surrounding lattice offsets
    const double u0 = y[0] / h, u1 = n == 2 ? y[1] / h : 0.0;
    const int f0 = static_cast<int>(std::floor(u0)), f1 = static_cast<int>(std::floor(u1));
    const double t0 = u0 - f0, t1 = u1 - f1;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < (n == 2 ? 2 : 1); ++b) {
        const double wt = w * (a ? t0 : 1.0 - t0) * (n == 2 ? (b ? t1 : 1.0 - t1) : 1.0);
        if (wt == 0.0) continue;
        Offset o{f0 + a, n == 2 ? f1 + b : 0};
        if (o.d1 < 0 || (o.d1 == 0 && o.d0 < 0)) o = {-o.d0, -o.d1};
        if (o.d0 == 0 && o.d1 == 0) continue;
        tail[o] += wt;
      }
    }
  };
  const int nr = opts.radial_nodes;
  const auto gl_x = gauss_legendre(nr);
  for (std::size_t q = 0; q < angles.size(); ++q) {
    const double t = angles[q];
    const Point e{std::cos(t), std::sin(t)};
    const double rsq = n == 1 ? a_sq : square_radius(a_sq, t);
    if (rsq >= Rf) continue;
    const double mr = ray_mass(rsq);
    const int shells = std::max(1, static_cast<int>(std::ceil(std::log2(Rf / rsq) - 1e-12)));
    const double ratio = std::pow(Rf / rsq, 1.0 / shells);
    double ra = rsq;
    for (int k = 0; k < shells; ++k) {
      const double rb = k + 1 == shells ? Rf : ra * ratio;
      const double pa = std::pow(ra, -2.0 * s), pb = std::pow(rb, -2.0 * s);
      const double mid = 0.5 * (pa + pb), half_len = 0.5 * (pa - pb);
      for (std::size_t g = 0; g < gl_x.first.size(); ++g) {
        const double rho = mid + half_len * gl_x.first[g];
        const double r = std::pow(rho, -1.0 / (2.0 * s));
        const double frac = half_len * gl_x.second[g] / (2.0 * s) / mr;
        // factor 2: the half-space rule represents both +y and -y
        deposit({r * e[0], r * e[1]}, 2.0 * angle_w[q] * frac);
      }
      ra = rb;
    }
  }
  for (auto& [o, w] : tail) {
    st.tail_offsets.push_back(o);
    st.tail_weights.push_back(w);
  }

  for (double w : st.cell_weights) {
    if (!std::isfinite(w)) fail(ErrorKind::Internal, "non-finite cell weight");
  }
  return st;
}

// ---- persistence ----

namespace {

constexpr std::uint32_t kMagic = 0x54534d46;  // "FMST"
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void put_offsets(std::ostream& os, const std::vector<Offset>& o, const std::vector<double>& w) {
  put<std::uint64_t>(os, o.size());
  for (std::size_t i = 0; i < o.size(); ++i) {
    put<std::int32_t>(os, o[i].d0);
    put<std::int32_t>(os, o[i].d1);
    put<double>(os, w[i]);
  }
}

void get_offsets(std::istream& is, std::vector<Offset>& o, std::vector<double>& w) {
  const auto count = get<std::uint64_t>(is);
  if (!is || count > (1u << 26)) fail(ErrorKind::Config, "corrupt stencil file");
  o.resize(count);
  w.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    o[i].d0 = get<std::int32_t>(is);
    o[i].d1 = get<std::int32_t>(is);
    w[i] = get<double>(is);
  }
}

}  // namespace

void save_stencil(const KernelStencil& st, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Config, "cannot write " + path);
  put(os, kMagic);
  put(os, kVersion);
  put<std::int32_t>(os, st.order.n);
  put(os, st.order.s);
  put(os, st.order.c);
  put(os, st.params.a);
  put(os, st.params.theta);
  put(os, st.h);
  put<std::int32_t>(os, st.window);
  put(os, st.tail_tol);
  put<std::int32_t>(os, st.options.angular_nodes);
  put<std::int32_t>(os, st.options.radial_nodes);
  put(os, st.options.tail_decay);
  put<std::int32_t>(os, st.options.angular_panels);
  put_offsets(os, st.cells, st.cell_weights);
  for (double v : {st.kappa_cell[0], st.kappa_cell[1], st.kappa[0], st.kappa[1], st.mixed}) put(os, v);
  put_offsets(os, st.tail_offsets, st.tail_weights);
  for (double v : {st.tail_inner, st.far_radius, st.angular_mass, st.far_mass, st.remainder_bound}) put(os, v);
}

KernelStencil load_stencil(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Config, "cannot read " + path);
  if (get<std::uint32_t>(is) != kMagic) fail(ErrorKind::Config, "not a stencil file: " + path);
  if (get<std::uint32_t>(is) != kVersion) fail(ErrorKind::Config, "unsupported stencil version in " + path);
  KernelStencil st;
  st.order.n = get<std::int32_t>(is);
  st.order.s = get<double>(is);
  st.order.c = get<double>(is);
  st.params.a = get<double>(is);
  st.params.theta = get<double>(is);
  st.h = get<double>(is);
  st.window = get<std::int32_t>(is);
  st.tail_tol = get<double>(is);
  st.options.window = st.window;
  st.options.tail_tol = st.tail_tol;
  st.options.angular_nodes = get<std::int32_t>(is);
  st.options.radial_nodes = get<std::int32_t>(is);
  st.options.tail_decay = get<double>(is);
  st.options.angular_panels = get<std::int32_t>(is);
  get_offsets(is, st.cells, st.cell_weights);
  st.kappa_cell[0] = get<double>(is);
  st.kappa_cell[1] = get<double>(is);
  st.kappa[0] = get<double>(is);
  st.kappa[1] = get<double>(is);
  st.mixed = get<double>(is);
  get_offsets(is, st.tail_offsets, st.tail_weights);
  st.tail_inner = get<double>(is);
  st.far_radius = get<double>(is);
  st.angular_mass = get<double>(is);
  st.far_mass = get<double>(is);
  st.remainder_bound = get<double>(is);
  if (!is) fail(ErrorKind::Config, "truncated stencil file " + path);
  return st;
}

std::string StencilCache::key_path(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                                   const StencilOptions& opts) const {
  const int W = opts.window > 0 ? opts.window : domain.m / 4;
  char buf[256];
  // hex floats keep the key exact
  std::snprintf(buf, sizeof buf, "st_n%d_s%a_h%a_W%d_a%a_t%a_tol%a_R%a_q%d_%d_%a_%d.bin", order.n, order.s,
                domain.h(), W, A.a, A.theta, opts.tail_tol, domain.R, opts.angular_nodes, opts.radial_nodes,
                opts.tail_decay, opts.angular_panels);
  return (std::filesystem::path(dir_) / buf).string();
}

KernelStencil StencilCache::get(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                                const StencilOptions& opts) {
  const std::string path = key_path(order, A, domain, opts);
  if (std::filesystem::exists(path)) return load_stencil(path);
  KernelStencil st = build_stencil(order, A, domain, opts);
  std::filesystem::create_directories(dir_);
  save_stencil(st, path);
  return st;
}

}  // namespace fracma
