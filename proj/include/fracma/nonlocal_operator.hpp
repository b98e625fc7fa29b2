#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fracma/kernel_quadrature.hpp"
#include "fracma/matrix_atlas.hpp"

namespace fracma {

/// Coefficient of u(x + h*off) in the discrete L_A^s u(x).
struct Coupling {
  Offset off;
  double coef = 0.0;
};

/// L_A^s on one grid with a fixed exterior closure. Contributions from
/// lattice points outside the box and from the far field are folded into a
/// per-node constant, so L u(x_i) = sum_k K_ik u_k + diag * u_i + ext_i.
class DiscreteOperator {
 public:
  /// With a node list, exterior terms are prepared only for those nodes;
  /// applying at any other node yields NaN.
  DiscreteOperator(const Domain& domain, std::shared_ptr<const KernelStencil> stencil, const Closure& closure,
                   const std::vector<std::size_t>* nodes = nullptr);

  const Domain& domain() const { return domain_; }
  const KernelStencil& stencil() const { return *stencil_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }

  /// Coefficient of u_i in L u(x_i) (negative, identical at every node).
  double diagonal() const { return -total_; }
  double exterior(std::size_t i) const { return ext_[i]; }

  double apply(const std::vector<double>& u, std::size_t i) const;
  /// Calls f(column, coef) for couplings landing inside the box, in column order.
  template <class F>
  void for_each_inside(std::size_t i, F&& f) const;

 private:
  Domain domain_;
  std::shared_ptr<const KernelStencil> stencil_;
  std::vector<Coupling> couplings_;
  double total_ = 0.0;
  std::vector<double> ext_;
  std::vector<double> outside_;  // summed coefficients of exterior couplings + far mass
};

/// Merged couplings of a stencil (includes the c/2 factor).
std::vector<Coupling> stencil_couplings(const KernelStencil& st);

struct OperatorEval {
  std::vector<double> value;
  std::vector<std::uint32_t> argmin;
  std::vector<std::vector<double>> per_matrix;  // filled when requested
};

/// One DiscreteOperator per atlas entry, sharing grid and closure.
class AtlasOperator {
 public:
  AtlasOperator(const MatrixAtlas& atlas, std::vector<std::shared_ptr<const KernelStencil>> stencils,
                const Domain& domain, const Closure& closure);
  /// Reuses operators for entries already present in `prior` (same grid and closure).
  AtlasOperator(const MatrixAtlas& atlas, std::vector<std::shared_ptr<const KernelStencil>> stencils,
                const Domain& domain, const Closure& closure, const AtlasOperator* prior,
                const std::vector<std::size_t>* nodes = nullptr);

  const MatrixAtlas& atlas() const { return atlas_; }
  const DiscreteOperator& op(std::size_t k) const { return *ops_[k]; }
  std::size_t size() const { return ops_.size(); }
  std::shared_ptr<const KernelStencil> stencil(std::size_t k) const { return stencils_[k]; }

  /// Infimum over entries, lowest index on ties. Empty node list means all nodes.
  OperatorEval inf(const std::vector<double>& u, const std::vector<std::size_t>& nodes = {},
                   bool keep_per_matrix = false) const;
  std::vector<double> sup(const std::vector<double>& u, const std::vector<std::size_t>& nodes = {}) const;

 private:
  MatrixAtlas atlas_;
  std::vector<std::shared_ptr<const KernelStencil>> stencils_;
  std::vector<std::shared_ptr<const DiscreteOperator>> ops_;
};

/// Builds stencils for every atlas entry (in parallel).
std::vector<std::shared_ptr<const KernelStencil>> build_atlas_stencils(const FracOrder& order, const MatrixAtlas& atlas,
                                                                       const Domain& domain,
                                                                       const StencilOptions& opts,
                                                                       const std::vector<std::shared_ptr<const KernelStencil>>* reuse = nullptr,
                                                                       const MatrixAtlas* reuse_atlas = nullptr);

std::vector<double> apply_LAs(const GridField& u, const KernelStencil& stencil, const std::vector<std::size_t>& nodes = {});

OperatorEval apply_Ds_eps(const GridField& u, const MatrixAtlas& atlas,
                          const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                          const std::vector<std::size_t>& nodes = {}, bool keep_per_matrix = false);

std::vector<double> pucci_sup(const GridField& u, const MatrixAtlas& atlas,
                              const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              const std::vector<std::size_t>& nodes = {});
std::vector<double> pucci_inf(const GridField& u, const MatrixAtlas& atlas,
                              const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              const std::vector<std::size_t>& nodes = {});

/// One-dimensional fractional Laplacian of t -> u(x + t e), sampled along
/// the line at the grid spacing.
double apply_directional(const GridField& u, const Point& e, double s, std::size_t node,
                         const StencilOptions& opts = {});

/// Operator dump: coordinates, value, argmin a, argmin theta, mode.
void write_operator_csv(const std::string& path, const Domain& domain, const OperatorEval& eval,
                        const MatrixAtlas& atlas, const std::vector<Mode>* mode = nullptr);

// ---- inline ----

template <class F>
void DiscreteOperator::for_each_inside(std::size_t i, F&& f) const {
  const auto ij = domain_.index(i);
  const int m = domain_.m;
  const bool two = domain_.n == 2;
  for (const Coupling& c : couplings_) {
    const int a = ij[0] + c.off.d0;
    const int b = ij[1] + c.off.d1;
    if (a < 0 || a > m) continue;
    if (two && (b < 0 || b > m)) continue;
    f(domain_.flat(a, two ? b : 0), c.coef);
  }
}

}  // namespace fracma
