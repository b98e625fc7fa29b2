#include "fracma/fb_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace fracma {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dist(const Point& a, const Point& b, int n) {
  const double d0 = a[0] - b[0];
  const double d1 = n == 2 ? a[1] - b[1] : 0.0;
  return std::sqrt(d0 * d0 + d1 * d1);
}

template <class F>
double golden(F&& f, double lo, double hi, int iters = 80) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && b - a > 1e-12; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Case1: return "case1";
    case Verdict::Case2: return "case2";
    case Verdict::Case3: return "case3";
    case Verdict::Unresolved: return "unresolved";
  }
  return "?";
}

double default_alpha(double s) { return std::min(0.1, 0.5 * (1.0 - s)); }

FreeBoundaryReport extract_fb(const GridField& u, const GridField& psi, double contact_tol) {
  const Domain& d = u.domain();
  if (!(psi.domain() == d)) fail(ErrorKind::Validation, "u and psi live on different grids");
  FreeBoundaryReport rep;
  rep.domain = d;
  rep.contact_tol = contact_tol;
  rep.contact.assign(d.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) rep.contact[i] = psi[i] - u[i] <= contact_tol ? 1 : 0;
  static const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const int nn = d.n == 1 ? 2 : 4;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!rep.contact[i]) continue;
    for (int k = 0; k < nn; ++k) {
      auto j = d.shift(i, nb[k][0], nb[k][1]);
      if (j && !rep.contact[*j]) {
        rep.fb_nodes.push_back(i);
        break;
      }
    }
  }
  rep.distance.assign(d.size(), std::numeric_limits<double>::infinity());
  rep.nearest.assign(d.size(), 0);
  if (rep.fb_nodes.empty()) return rep;
  std::vector<Point> pts;
  for (auto f : rep.fb_nodes) pts.push_back(d.node(f));
  parallel_for(d.size(), [&](std::size_t i) {
    const Point x = d.node(i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const double r = dist(x, pts[q], d.n);
      if (r < best) {
        best = r;
        arg = q;
      }
    }
    rep.distance[i] = best;
    rep.nearest[i] = arg;
  });
  for (auto f : rep.fb_nodes) rep.distance[f] = 0.0;
  return rep;
}

ExponentFit fit_exponent(const FreeBoundaryReport& rep, const GridField& v, const FitOptions& opts) {
  const Domain& d = rep.domain;
  const double h = d.h();
  const double lo = opts.r_lo > 0.0 ? opts.r_lo : 2.0 * h;
  const double hi = opts.r_hi > 0.0 ? opts.r_hi : 32.0 * h;
  if (rep.empty()) fail(ErrorKind::EmptyContact, "exponent fit needs a nonempty free boundary");
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (rep.contact[i] || !(v[i] > 0.0)) continue;
    const double di = rep.distance[i];
    if (di < lo * (1.0 - 1e-12) || di > hi * (1.0 + 1e-12)) continue;
    if (!opts.near_points.empty() &&
        std::find(opts.near_points.begin(), opts.near_points.end(), rep.nearest[i]) == opts.near_points.end()) {
      continue;
    }
    if (opts.center && dist(d.node(i), *opts.center, d.n) > opts.center_radius) continue;
    X.push_back(std::log(di));
    Y.push_back(std::log(v[i]));
  }
  ExponentFit fit;
  fit.count = X.size();
  if (X.size() < std::max<std::size_t>(opts.min_count, 3)) {
    fail(ErrorKind::Validation, "exponent fit window holds only " + std::to_string(X.size()) + " nodes");
  }
  const double nx = static_cast<double>(X.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    mx += X[k];
    my += Y[k];
  }
  mx /= nx;
  my /= nx;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    sxx += (X[k] - mx) * (X[k] - mx);
    sxy += (X[k] - mx) * (Y[k] - my);
    syy += (Y[k] - my) * (Y[k] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::Validation, "exponent fit window has no spread in distance");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.c = std::exp(fit.intercept);
  double ssr = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double e = Y[k] - fit.intercept - fit.slope * X[k];
    ssr += e * e;
  }
  fit.residual = std::sqrt(ssr / nx);
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  fit.slope_stderr = nx > 2.0 ? std::sqrt(ssr / (nx - 2.0) / sxx) : 0.0;
  return fit;
}

std::vector<double> gradient_modulus(const GridField& v) {
  const Domain& d = v.domain();
  const double h = d.h();
  std::vector<double> g(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    double g2 = 0.0;
    for (int axis = 0; axis < d.n; ++axis) {
      const int a = axis == 0 ? 1 : 0, b = axis == 1 ? 1 : 0;
      auto p = d.shift(i, a, b);
      auto q = d.shift(i, -a, -b);
      double c;
      if (p && q) {
        c = (v[*p] - v[*q]) / (2.0 * h);
      } else if (p) {
        c = (v[*p] - v[i]) / h;
      } else {
        c = (v[i] - v[*q]) / h;
      }
      g2 += c * c;
    }
    g[i] = std::sqrt(g2);
  }
  return g;
}

std::vector<double> rho_grid(double rho_max, double r_min) {
  std::vector<double> r;
  for (double x = rho_max; x >= r_min * (1.0 - 1e-12); x *= 0.5) r.push_back(x);
  return r;
}

ThetaProfile theta_profile(const GridField& v, const std::vector<double>& grad, const Point& x0, double s,
                           double alpha, std::vector<double> rho) {
  const Domain& d = v.domain();
  ThetaProfile p;
  std::sort(rho.begin(), rho.end(), std::greater<>());
  double reach = 0.5 * d.R - std::abs(x0[0]);
  if (d.n == 2) reach = std::min(reach, 0.5 * d.R - std::abs(x0[1]));
  std::size_t dropped = 0;
  for (double r : rho) {
    if (r > reach * (1.0 + 1e-12)) {
      ++dropped;
      continue;
    }
    p.rho.push_back(r);
  }
  if (dropped) p.warnings.push_back("truncated " + std::to_string(dropped) + " radii whose balls leave the half box");
  p.gradmax.assign(p.rho.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = dist(d.node(i), x0, d.n);
    for (std::size_t k = 0; k < p.rho.size(); ++k) {
      if (r <= p.rho[k] * (1.0 + 1e-12)) p.gradmax[k] = std::max(p.gradmax[k], grad[i]);
    }
  }
  double run = 0.0;
  for (std::size_t k = 0; k < p.rho.size(); ++k) {
    p.ratio.push_back(p.gradmax[k] / std::pow(p.rho[k], s + alpha));
    run = std::max(run, p.ratio.back());
    p.theta.push_back(run);
  }
  return p;
}

double theta(const GridField& v, const Point& x0, double r, double s, double alpha, const std::vector<double>& rho) {
  std::vector<double> keep;
  for (double x : rho) {
    if (x >= r * (1.0 - 1e-12)) keep.push_back(x);
  }
  if (keep.empty()) fail(ErrorKind::Validation, "no grid radius at or above r");
  const auto prof = theta_profile(v, gradient_modulus(v), x0, s, alpha, keep);
  if (prof.theta.empty()) fail(ErrorKind::Validation, "all radii leave the half box");
  return prof.theta.back();
}

Point refine_base_point(const GridField& v, const FreeBoundaryReport& rep, std::size_t fb_index, double s) {
  const Domain& d = rep.domain;
  const std::size_t f = rep.fb_nodes.at(fb_index);
  static const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const int nn = d.n == 1 ? 2 : 4;
  int best = -1;
  double bestv = -1.0;
  for (int k = 0; k < nn; ++k) {
    auto j = d.shift(f, nb[k][0], nb[k][1]);
    if (j && !rep.contact[*j] && v[*j] > bestv) {
      bestv = v[*j];
      best = k;
    }
  }
  const Point xf = d.node(f);
  if (best < 0) return xf;
  const double h = d.h();
  std::vector<double> T, W;
  for (int step = 1; step <= 4; ++step) {
    auto j = d.shift(f, step * nb[best][0], step * nb[best][1]);
    if (!j || rep.contact[*j] || !(v[*j] > 0.0)) break;
    T.push_back(step * h);
    W.push_back(std::pow(v[*j], 1.0 / (1.0 + s)));
  }
  if (T.size() < 2) return xf;
  double mt = 0.0, mw = 0.0;
  for (std::size_t k = 0; k < T.size(); ++k) {
    mt += T[k];
    mw += W[k];
  }
  mt /= static_cast<double>(T.size());
  mw /= static_cast<double>(T.size());
  double stt = 0.0, stw = 0.0;
  for (std::size_t k = 0; k < T.size(); ++k) {
    stt += (T[k] - mt) * (T[k] - mt);
    stw += (T[k] - mt) * (W[k] - mw);
  }
  const double slope = stw / stt;
  if (!(slope > 0.0)) return xf;
  const double t0 = std::clamp(mt - mw / slope, 0.0, h);
  return {xf[0] + t0 * nb[best][0], xf[1] + t0 * nb[best][1]};
}

double profile_misfit(const std::vector<std::array<double, 3>>& samples, double K, const Point& e, double s, int n) {
  double worst = 0.0;
  for (const auto& q : samples) {
    const double r2 = q[0] * q[0] + (n == 2 ? q[1] * q[1] : 0.0);
    if (r2 > 1.0 + 1e-12) continue;
    const double t = std::max(0.0, e[0] * q[0] + (n == 2 ? e[1] * q[1] : 0.0));
    worst = std::max(worst, std::abs(q[2] - K * std::pow(t, 1.0 + s)));
  }
  return worst;
}

BlowUpFit blow_up(const GridField& v, const Point& x0, double s, double alpha, const BlowUpOptions& opts) {
  if (!(alpha > 0.0 && alpha < s && 1.0 + s + alpha < 2.0)) {
    fail(ErrorKind::Validation, "alpha must satisfy 0 < alpha < s and 1 + s + alpha < 2");
  }
  const Domain& d = v.domain();
  const int n = d.n;
  const double h = d.h();
  BlowUpFit out;
  out.x0 = x0;
  out.s = s;
  out.alpha = alpha;
  const auto grad = gradient_modulus(v);
  double reach = 0.5 * d.R - std::abs(x0[0]);
  if (n == 2) reach = std::min(reach, 0.5 * d.R - std::abs(x0[1]));
  const double r_min = opts.r_min_cells * h;
  out.profile = theta_profile(v, grad, x0, s, alpha, rho_grid(reach, r_min));
  const auto& P = out.profile;
  if (P.rho.empty()) {
    out.note = "no resolvable radii";
    return out;
  }
  // the closure jump at the box edge leaves a gradient layer there; screen against the half box only
  double gmax = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point x = d.node(i);
    if (std::abs(x[0]) <= 0.5 * d.R && (n == 1 || std::abs(x[1]) <= 0.5 * d.R)) gmax = std::max(gmax, grad[i]);
  }
  out.nu_min = opts.nu_factor * gmax / std::pow(d.R, s + alpha);
  out.regular = P.theta.back() >= out.nu_min;
  if (!out.regular) {
    out.note = "not regular at resolution";
    return out;
  }

  // half-theta selection on the grid, finest K targets
  const std::size_t L = P.rho.size();
  const std::size_t first = L > static_cast<std::size_t>(opts.K) ? L - static_cast<std::size_t>(opts.K) : 0;
  std::vector<std::size_t> chosen;
  for (std::size_t k = first; k < L; ++k) {
    std::size_t j = k;
    while (P.ratio[j] < 0.5 * P.theta[k]) --j;  // terminates: theta[k] is some ratio[j'] with j' <= k
    if (chosen.empty() || chosen.back() != j) {
      if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
    }
  }
  std::sort(chosen.begin(), chosen.end());

  auto fit_K = [&](const std::vector<std::array<double, 3>>& smp, const Point& e) {
    const double K = golden([&](double k) { return profile_misfit(smp, k, e, s, n); }, opts.k_lo, opts.k_hi);
    return std::make_pair(K, profile_misfit(smp, K, e, s, n));
  };
  for (std::size_t j : chosen) {
    const double r = P.rho[j];
    const double th = P.theta[j];
    const double scale = 1.0 / (std::pow(r, 1.0 + s + alpha) * th);
    std::vector<std::array<double, 3>> smp;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Point x = d.node(i);
      if (dist(x, x0, n) > 2.0 * r * (1.0 + 1e-12)) continue;
      smp.push_back({(x[0] - x0[0]) / r, n == 2 ? (x[1] - x0[1]) / r : 0.0, v[i] * scale});
    }
    double bestK = 0.0, bestm = std::numeric_limits<double>::infinity(), bestang = 0.0;
    if (n == 1) {
      for (double ang : {0.0, kPi}) {
        auto [K, mis] = fit_K(smp, {std::cos(ang), 0.0});
        if (mis < bestm) {
          bestm = mis;
          bestK = K;
          bestang = ang;
        }
      }
    } else {
      const double step = 2.0 * kPi / opts.angle_steps;
      for (int a = 0; a < opts.angle_steps; ++a) {
        const double ang = a * step;
        auto [K, mis] = fit_K(smp, {std::cos(ang), std::sin(ang)});
        if (mis < bestm) {
          bestm = mis;
          bestK = K;
          bestang = ang;
        }
      }
      const double ang = golden(
          [&](double t) { return fit_K(smp, {std::cos(t), std::sin(t)}).second; }, bestang - step, bestang + step, 60);
      auto [K, mis] = fit_K(smp, {std::cos(ang), std::sin(ang)});
      if (mis <= bestm) {
        bestm = mis;
        bestK = K;
        bestang = ang;
      }
    }
    out.r.push_back(r);
    out.theta_r.push_back(th);
    out.K_fit.push_back(bestK);
    out.e_fit.push_back(bestang);
    out.misfit.push_back(bestm);
    // rescaled gradient bounds; radii R r stay on the grid because it has ratio 2
    const double gscale = 1.0 / (std::pow(r, s + alpha) * th);
    out.grad_b1.push_back(P.gradmax[j] * gscale);
    std::vector<std::pair<double, double>> gb;
    double Rk = 1.0;
    for (std::size_t q = j + 1; q-- > 0;) {
      gb.push_back({Rk, P.gradmax[q] * gscale});
      Rk *= 2.0;
    }
    out.grad_bR.push_back(gb);
    out.samples.push_back(std::move(smp));
  }
  if (!out.r.empty()) {
    out.K0 = out.K_fit.back();
    // undo the theta normalization: v(x0 + r y) / r^(1+s) ~ K_amplitude (e.y)_+^(1+s)
    out.K_amplitude = out.K0 * std::pow(out.r.back(), alpha) * out.theta_r.back();
    out.e0 = {std::cos(out.e_fit.back()), n == 2 ? std::sin(out.e_fit.back()) : 0.0};
    for (const auto& smp : out.samples) out.misfit_final.push_back(profile_misfit(smp, out.K0, out.e0, s, n));
  } else {
    out.note = "no retained radii";
  }
  return out;
}

void classify(FreeBoundaryReport& rep, const GridField& v, double s, double alpha, const ClassifyOptions& opts,
              const std::vector<std::size_t>& subset) {
  (void)alpha;
  const Domain& d = rep.domain;
  const double h = d.h();
  const int n = d.n;
  std::vector<std::size_t> which = subset;
  if (which.empty()) {
    for (std::size_t q = 0; q < rep.fb_nodes.size(); ++q) which.push_back(q);
  }
  rep.points.assign(which.size(), PointAnalysis{});
  parallel_for(which.size(), [&](std::size_t w) {
    const std::size_t q = which[w];
    PointAnalysis pa;
    pa.node = rep.fb_nodes.at(q);
    pa.x = d.node(pa.node);
    for (double cells : {4.0, 8.0, 16.0}) {
      const double r = cells * h;
      std::size_t tot = 0, con = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (dist(d.node(i), pa.x, n) > r * (1.0 + 1e-12)) continue;
        ++tot;
        con += rep.contact[i];
      }
      pa.radii.push_back(r);
      pa.density.push_back(tot ? static_cast<double>(con) / static_cast<double>(tot) : 0.0);
    }
    pa.density_proxy = *std::min_element(pa.density.begin(), pa.density.end());
    FitOptions fo;
    fo.r_hi = opts.fit_radius_cells * h;
    fo.center = pa.x;
    fo.center_radius = opts.fit_radius_cells * h;
    fo.min_count = opts.min_count;
    try {
      pa.fit = fit_exponent(rep, v, fo);
    } catch (const Error&) {
      pa.fit.reset();
    }
    const double target = 1.0 + s;
    if (pa.density_proxy < opts.rho_dens_low) {
      pa.verdict = Verdict::Case2;
    } else if (pa.density_proxy >= opts.rho_dens && pa.fit) {
      if (std::abs(pa.fit->slope - target) <= opts.tol_exp && pa.fit->c > 0.0) {
        pa.verdict = Verdict::Case1;
      } else if (pa.fit->slope > target + opts.tol_exp) {
        pa.verdict = Verdict::Case3;
      }
    }
    if (pa.verdict == Verdict::Case1 && n == 2) {
      // local quadratic graph through nearby free-boundary nodes
      std::vector<Point> nbr;
      for (auto f : rep.fb_nodes) {
        const Point y = d.node(f);
        if (dist(y, pa.x, n) <= 4.0 * h * (1.0 + 1e-12)) nbr.push_back(y);
      }
      if (nbr.size() >= 4) {
        double cx = 0.0, cy = 0.0;
        for (auto& y : nbr) {
          cx += y[0];
          cy += y[1];
        }
        cx /= nbr.size();
        cy /= nbr.size();
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (auto& y : nbr) {
          sxx += (y[0] - cx) * (y[0] - cx);
          sxy += (y[0] - cx) * (y[1] - cy);
          syy += (y[1] - cy) * (y[1] - cy);
        }
        const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        const double tx = std::cos(ang), ty = std::sin(ang);
        Eigen::MatrixXd Am(static_cast<Eigen::Index>(nbr.size()), 3);
        Eigen::VectorXd bm(static_cast<Eigen::Index>(nbr.size()));
        for (std::size_t k = 0; k < nbr.size(); ++k) {
          const double xi = (nbr[k][0] - cx) * tx + (nbr[k][1] - cy) * ty;
          const double eta = -(nbr[k][0] - cx) * ty + (nbr[k][1] - cy) * tx;
          const auto r = static_cast<Eigen::Index>(k);
          Am(r, 0) = 1.0;
          Am(r, 1) = xi;
          Am(r, 2) = xi * xi;
          bm(r) = eta;
        }
        const Eigen::VectorXd coef = Am.colPivHouseholderQr().solve(bm);
        pa.smoothness = std::sqrt((Am * coef - bm).squaredNorm() / static_cast<double>(nbr.size()));
      }
    }
    rep.points[w] = pa;
  });
}

DiagnosticsReport diagnostics(const SolveReport& rep, const PhiSpec& phi, const PsiSpec& psi, const FracOrder& order,
                              const MatrixAtlas& atlas, const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              double tol, std::size_t sample_stride) {
  (void)order;
  const GridField& u = rep.u;
  const Domain& d = u.domain();
  const int n = d.n;
  const double h = d.h();
  DiagnosticsReport out;
  out.normalizer = rep.normalizer;
  const double N = rep.normalizer;
  std::vector<double> vv(d.size()), psiv(d.size()), gap(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point x = d.node(i);
    psiv[i] = psi.value(phi, x, n);
    vv[i] = psiv[i] - u[i];
    gap[i] = u[i] - phi.value(x, n);
  }
  const Closure psicl = psi.closure(phi);
  const Closure phicl = phi.closure();
  auto vext = [psicl, phicl](const Point& z) { return psicl(z) - phicl(z); };
  const GridField v(d, vv, Closure::analytic(vext, psicl.far - phicl.far));

  out.min_v = *std::min_element(vv.begin(), vv.end());
  if (out.min_v < -tol) {
    out.failures.push_back("v.nonnegative: min(psi - u) = " + std::to_string(out.min_v));
  }
  out.max_grad = discrete_lipschitz(v) / N;
  if (out.max_grad > 1.0 + 5.0 * h) out.failures.push_back("v.gradient: normalized Lipschitz " + std::to_string(out.max_grad));
  // smallest eigenvalue of the difference Hessian
  double minh = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto xp = d.shift(i, 1, 0), xm = d.shift(i, -1, 0);
    if (!xp || !xm) continue;
    const double fxx = (v[*xp] + v[*xm] - 2.0 * v[i]) / (h * h);
    double lam = fxx;
    if (n == 2) {
      auto yp = d.shift(i, 0, 1), ym = d.shift(i, 0, -1);
      auto pp = d.shift(i, 1, 1), pm = d.shift(i, 1, -1), mp = d.shift(i, -1, 1), mm = d.shift(i, -1, -1);
      if (!yp || !ym || !pp || !pm || !mp || !mm) continue;
      const double fyy = (v[*yp] + v[*ym] - 2.0 * v[i]) / (h * h);
      const double fxy = (v[*pp] - v[*pm] - v[*mp] + v[*mm]) / (4.0 * h * h);
      const double tr = fxx + fyy, det = fxx * fyy - fxy * fxy;
      lam = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    }
    minh = std::min(minh, lam);
  }
  out.min_hessian = std::isfinite(minh) ? minh / N : 0.0;
  if (out.min_hessian < -1.0 - 5.0 * h) {
    out.failures.push_back("v.semiconvexity: normalized min Hessian eigenvalue " + std::to_string(out.min_hessian));
  }

  // Pucci check on directional differences against the exact discrete lower bound
  const GridField psif(d, psiv, psicl);
  std::map<std::uint32_t, std::shared_ptr<DiscreteOperator>> psi_ops;
  out.min_pucci_margin = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < n; ++axis) {
    const int a = axis == 0 ? 1 : 0, b = axis == 1 ? 1 : 0;
    const double sx = a * h, sy = b * h;
    const GridField vref = v;
    auto V = [vref](const Point& z) { return vref.eval(z); };
    auto wfn = [V, sx, sy](const Point& z) { return V(z) - V({z[0] - sx, z[1] - sy}); };
    FarField wf;
    const FarField vf = v.closure().far;
    wf.b0 = vf.p[0] * sx + vf.p[1] * sy;
    std::vector<double> wv(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) wv[i] = wfn(d.node(i));
    const Closure wcl = Closure::analytic(wfn, wf);
    std::vector<std::size_t> samples;
    for (std::size_t i = 0; i < d.size(); i += sample_stride) {
      const Point x = d.node(i);
      if (std::abs(x[0]) > 0.5 * d.R || (n == 2 && std::abs(x[1]) > 0.5 * d.R)) continue;
      if (rep.contact[i]) continue;
      samples.push_back(i);
    }
    if (samples.empty()) continue;
    AtlasOperator opw(atlas, stencils, d, wcl);
    const auto sup = opw.sup(wv, samples);
    for (std::size_t q = 0; q < samples.size(); ++q) {
      const std::size_t i = samples[q];
      const auto back = d.shift(i, -a, -b);
      if (!back) continue;
      const std::uint32_t A = rep.argmin[i];
      auto& op = psi_ops[A];
      if (!op) op = std::make_shared<DiscreteOperator>(d, stencils[A], psicl);
      const double bound = (op->apply(psif.values(), i) - op->apply(psif.values(), *back)) - (gap[i] - gap[*back]);
      const double margin = sup[q] - bound;
      out.min_pucci_margin = std::min(out.min_pucci_margin, margin);
      ++out.pucci_samples;
      if (margin < -(2.0 * tol + 1e-9)) {
        std::ostringstream os;
        os << "v.pucci_difference: margin " << margin << " at node " << i << " axis " << axis;
        out.failures.push_back(os.str());
      }
    }
  }
  if (!std::isfinite(out.min_pucci_margin)) out.min_pucci_margin = 0.0;
  out.ok = out.failures.empty();
  return out;
}

nlohmann::json fit_to_json(const ExponentFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"c", f.c},          {"residual", f.residual},
          {"r2", f.r2},       {"slope_stderr", f.slope_stderr}, {"count", f.count}};
}

nlohmann::json fb_report_to_json(const FreeBoundaryReport& rep) {
  nlohmann::json j;
  std::size_t nc = 0;
  for (auto c : rep.contact) nc += c;
  j["contact_nodes"] = nc;
  j["contact_tol"] = rep.contact_tol;
  j["free_boundary_nodes"] = rep.fb_nodes.size();
  auto pts = nlohmann::json::array();
  for (const auto& p : rep.points) {
    nlohmann::json q;
    q["node"] = p.node;
    q["x"] = rep.domain.n == 1 ? nlohmann::json(p.x[0]) : nlohmann::json({p.x[0], p.x[1]});
    q["density_radii"] = p.radii;
    q["density"] = p.density;
    q["density_proxy"] = p.density_proxy;
    q["fit"] = p.fit ? fit_to_json(*p.fit) : nlohmann::json(nullptr);
    q["verdict"] = verdict_name(p.verdict);
    q["smoothness"] = p.smoothness;
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

nlohmann::json blowup_to_json(const BlowUpFit& f) {
  nlohmann::json j;
  j["x0"] = {f.x0[0], f.x0[1]};
  j["s"] = f.s;
  j["alpha"] = f.alpha;
  j["regular"] = f.regular;
  j["nu_min"] = f.nu_min;
  j["note"] = f.note;
  j["rho"] = f.profile.rho;
  j["theta_profile"] = f.profile.theta;
  j["r"] = f.r;
  j["theta_r"] = f.theta_r;
  j["K_fit"] = f.K_fit;
  j["e_fit"] = f.e_fit;
  j["misfit"] = f.misfit;
  j["misfit_final"] = f.misfit_final;
  j["K0"] = f.K0;
  j["K_amplitude"] = f.K_amplitude;
  j["e0"] = {f.e0[0], f.e0[1]};
  j["grad_b1"] = f.grad_b1;
  return j;
}

}  // namespace fracma
