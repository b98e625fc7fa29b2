#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fracma/domain_grid.hpp"

namespace fracma {

/// Normalization constant of the fractional Laplacian in R^n.
double c_ns(int n, double s);

struct FracOrder {
  int n = 1;
  double s = 0.75;
  double c = 0.0;  // c_ns(n, s)

  static FracOrder make(int n, double s);
};

/// SPD matrix A = scale * R_theta diag(a, 1/a) R_theta^T; admissible entries have scale 1.
struct MatrixParams {
  double a = 1.0;
  double theta = 0.0;
  double scale = 1.0;

  Eigen::Matrix2d matrix() const;
  /// |A^{-1} y|^2
  double inv_norm2(const Point& y) const;
  static MatrixParams from_matrix(const Eigen::Matrix2d& A);
};

struct StencilOptions {
  int window = 0;             // cells; 0 selects m/4
  double tail_tol = 1e-8;
  int angular_nodes = 32;
  int radial_nodes = 4;
  double tail_decay = 1.0;    // assumed bound on the closure's deviation from its asymptote times |z|
  int angular_panels = 4096;  // resolution of the angular mass table
};

struct Offset {
  int d0 = 0;
  int d1 = 0;
  bool operator==(const Offset& o) const { return d0 == o.d0 && d1 == o.d1; }
  bool operator<(const Offset& o) const { return d1 != o.d1 ? d1 < o.d1 : d0 < o.d0; }
};

/// Quadrature rule for L_A^s on a grid of spacing h:
///   L u(x) = c/2 [ sum_j w_j delta(hj) + sum_i kappa_i delta(h e_i)
///                  + mixed (delta(h(1,1)) - delta(h(1,-1)))
///                  + sum_q t_q delta(h k_q) + far ]
/// with delta(y) = u(x+y) + u(x-y) - 2u(x). Tail points are split onto
/// integer offsets k_q so every term reads grid values or the closure at
/// lattice points.
struct KernelStencil {
  FracOrder order;
  MatrixParams params;
  double h = 0.0;
  int window = 0;
  double tail_tol = 0.0;
  StencilOptions options;

  // all 0 < |j|_inf <= W, sorted by Offset::operator<
  std::vector<Offset> cells;
  std::vector<double> cell_weights;

  std::array<double, 2> kappa_cell{0.0, 0.0};  // int_{C0} (y_i/h)^2 K
  std::array<double, 2> kappa{0.0, 0.0};       // moment-corrected central weights
  double mixed = 0.0;

  // half-space representatives; each weight multiplies delta(h k_q)
  std::vector<Offset> tail_offsets;
  std::vector<double> tail_weights;

  double tail_inner = 0.0;       // half side of the window square
  double far_radius = 0.0;
  double angular_mass = 0.0;     // int over S^{n-1} of |A^{-1}e|^{-(n+2s)}
  double far_mass = 0.0;         // int_{|y|>far_radius} K
  double remainder_bound = 0.0;  // bound on the far-closure error

  double kernel(const Point& y) const;
  double weight(const Offset& j) const;  // cell weight lookup, 0 when absent
  /// int over S^{n-1} of cone(e) |A^{-1}e|^{-(n+2s)} de
  double cone_integral(const FarField& far) const;
  /// Total kernel mass represented by the rule (cells, central, tail, far).
  double total_mass() const;
};

/// Builds the rule. Throws on det A != 1 or W > m/2.
KernelStencil build_stencil(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                            const StencilOptions& opts = {});
KernelStencil build_stencil(const FracOrder& order, const Eigen::Matrix2d& A, const Domain& domain,
                            const StencilOptions& opts = {});

/// Closed-form 1D cell weight for A = 1 (j != 0).
double cell_weight_1d(int j, double h, double s);

void save_stencil(const KernelStencil& st, const std::string& path);
KernelStencil load_stencil(const std::string& path);

/// On-disk stencil store keyed by (n, s, h, W, a, theta, tail_tol).
class StencilCache {
 public:
  explicit StencilCache(std::string dir) : dir_(std::move(dir)) {}
  std::string key_path(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                       const StencilOptions& opts) const;
  KernelStencil get(const FracOrder& order, const MatrixParams& A, const Domain& domain,
                    const StencilOptions& opts);

 private:
  std::string dir_;
};

}  // namespace fracma
