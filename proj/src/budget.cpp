#include <algorithm>

#include "fracma/domain_grid.hpp"
#include "fracma/nonlocal_operator.hpp"

namespace fracma {

RegularityBudget estimate_budget(const PhiSpec& phi, const PsiSpec& psi, const Domain& domain, const FracOrder& order,
                                 const StencilOptions& opts) {
  const int n = domain.n;
  const GridField phif = build_field(domain, [&](const Point& x) { return phi.value(x, n); }, phi.closure());
  const GridField psif = build_field(domain, [&](const Point& x) { return psi.value(phi, x, n); }, psi.closure(phi));
  RegularityBudget b;
  b.lip_phi = discrete_lipschitz(phif);
  b.lip_psi = discrete_lipschitz(psif);
  b.sc_phi = discrete_semiconcavity(phif);
  b.sc_psi = discrete_semiconcavity(psif);
  b.M1 = std::max(b.lip_phi, b.lip_psi);
  b.M2 = std::max(b.sc_phi, b.sc_psi);
  const KernelStencil st = build_stencil(order, MatrixParams{}, domain, opts);
  const auto lap = apply_LAs(phif, st);
  b.M0 = std::max(0.0, *std::max_element(lap.begin(), lap.end()));
  return b;
}

}  // namespace fracma
