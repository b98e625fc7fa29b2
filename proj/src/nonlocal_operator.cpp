#include "fracma/nonlocal_operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

namespace fracma {

std::vector<Coupling> stencil_couplings(const KernelStencil& st) {
  const double c = st.order.c;
  std::map<Offset, double> acc;
  for (std::size_t k = 0; k < st.cells.size(); ++k) acc[st.cells[k]] += c * st.cell_weights[k];
  auto both = [&](Offset o, double w) {
    acc[o] += 0.5 * c * w;
    acc[Offset{-o.d0, -o.d1}] += 0.5 * c * w;
  };
  both({1, 0}, st.kappa[0]);
  if (st.order.n == 2) {
    both({0, 1}, st.kappa[1]);
    both({1, 1}, st.mixed);
    both({1, -1}, -st.mixed);
  }
  for (std::size_t k = 0; k < st.tail_offsets.size(); ++k) both(st.tail_offsets[k], st.tail_weights[k]);
  std::vector<Coupling> out;
  out.reserve(acc.size());
  for (auto& [o, w] : acc) {
    if (w != 0.0) out.push_back({o, w});
  }
  return out;
}

DiscreteOperator::DiscreteOperator(const Domain& domain, std::shared_ptr<const KernelStencil> stencil,
                                   const Closure& closure, const std::vector<std::size_t>* nodes)
    : domain_(domain), stencil_(std::move(stencil)) {
  const KernelStencil& st = *stencil_;
  if (st.order.n != domain.n || std::abs(st.h - domain.h()) > 1e-14 * domain.h()) {
    fail(ErrorKind::Validation, "stencil was built for a different grid");
  }
  couplings_ = stencil_couplings(st);
  const double c = st.order.c;
  const double s = st.order.s;
  double sum = 0.0;
  for (const auto& cp : couplings_) sum += cp.coef;
  total_ = sum + c * st.far_mass;

  const double cone_part =
      c * st.cone_integral(closure.far) * std::pow(st.far_radius, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  const FarField& far = closure.far;
  const std::size_t N = domain.size();
  const bool subset = nodes && !nodes->empty();
  ext_.assign(N, subset ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  outside_.assign(N, 0.0);
  const double h = domain.h();
  const int m = domain.m;
  const bool two = domain.n == 2;
  parallel_for(subset ? nodes->size() : N, [&](std::size_t q) {
    const std::size_t i = subset ? (*nodes)[q] : q;
    const auto ij = domain_.index(i);
    const Point x = domain_.node(i);
    double e = 0.0, o = 0.0;
    for (const Coupling& cp : couplings_) {
      const int a = ij[0] + cp.off.d0;
      const int b = ij[1] + cp.off.d1;
      const bool inside = a >= 0 && a <= m && (!two || (b >= 0 && b <= m));
      if (inside) continue;
      const Point y{x[0] + h * cp.off.d0, two ? x[1] + h * cp.off.d1 : 0.0};
      e += cp.coef * closure(y);
      o += cp.coef;
    }
    const double affine = far.p[0] * x[0] + (two ? far.p[1] * x[1] : 0.0) + far.b0;
    ext_[i] = e + cone_part + c * st.far_mass * affine;
    outside_[i] = o + c * st.far_mass;
  });
}

double DiscreteOperator::apply(const std::vector<double>& u, std::size_t i) const {
  const double ui = u[i];
  double acc = 0.0;
  for_each_inside(i, [&](std::size_t k, double coef) { acc += coef * (u[k] - ui); });
  return acc + ext_[i] - outside_[i] * ui;
}

AtlasOperator::AtlasOperator(const MatrixAtlas& atlas, std::vector<std::shared_ptr<const KernelStencil>> stencils,
                             const Domain& domain, const Closure& closure)
    : AtlasOperator(atlas, std::move(stencils), domain, closure, nullptr, nullptr) {}

AtlasOperator::AtlasOperator(const MatrixAtlas& atlas, std::vector<std::shared_ptr<const KernelStencil>> stencils,
                             const Domain& domain, const Closure& closure, const AtlasOperator* prior,
                             const std::vector<std::size_t>* nodes)
    : atlas_(atlas), stencils_(std::move(stencils)) {
  if (stencils_.size() != atlas_.size()) fail(ErrorKind::Validation, "atlas and stencil counts differ");
  for (std::size_t k = 0; k < atlas_.size(); ++k) {
    if (!same_matrix(stencils_[k]->params, atlas_.entries[k], 1e-12)) {
      fail(ErrorKind::Validation, "stencil " + std::to_string(k) + " does not match its atlas entry");
    }
  }
  ops_.resize(atlas_.size());
  for (std::size_t k = 0; k < atlas_.size(); ++k) {
    if (prior) {
      for (std::size_t q = 0; q < prior->size(); ++q) {
        if (prior->stencils_[q] == stencils_[k]) {
          ops_[k] = prior->ops_[q];
          break;
        }
      }
    }
    if (!ops_[k]) ops_[k] = std::make_shared<DiscreteOperator>(domain, stencils_[k], closure, nodes);
  }
}

namespace {

std::vector<std::size_t> all_nodes(const Domain& d, const std::vector<std::size_t>& nodes) {
  if (!nodes.empty()) {
    for (auto i : nodes) {
      if (i >= d.size()) fail(ErrorKind::Validation, "node index outside the box");
    }
    return nodes;
  }
  std::vector<std::size_t> v(d.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

OperatorEval AtlasOperator::inf(const std::vector<double>& u, const std::vector<std::size_t>& nodes,
                                bool keep_per_matrix) const {
  const auto idx = all_nodes(ops_.front()->domain(), nodes);
  OperatorEval out;
  out.value.assign(idx.size(), 0.0);
  out.argmin.assign(idx.size(), 0);
  if (keep_per_matrix) out.per_matrix.assign(ops_.size(), std::vector<double>(idx.size(), 0.0));
  parallel_for(idx.size(), [&](std::size_t q) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      const double v = ops_[k]->apply(u, idx[q]);
      if (keep_per_matrix) out.per_matrix[k][q] = v;
      if (v < best) {
        best = v;
        arg = static_cast<std::uint32_t>(k);
      }
    }
    out.value[q] = best;
    out.argmin[q] = arg;
  });
  return out;
}

std::vector<double> AtlasOperator::sup(const std::vector<double>& u, const std::vector<std::size_t>& nodes) const {
  const auto idx = all_nodes(ops_.front()->domain(), nodes);
  std::vector<double> out(idx.size());
  parallel_for(idx.size(), [&](std::size_t q) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& op : ops_) best = std::max(best, op->apply(u, idx[q]));
    out[q] = best;
  });
  return out;
}

std::vector<std::shared_ptr<const KernelStencil>> build_atlas_stencils(
    const FracOrder& order, const MatrixAtlas& atlas, const Domain& domain, const StencilOptions& opts,
    const std::vector<std::shared_ptr<const KernelStencil>>* reuse, const MatrixAtlas* reuse_atlas) {
  std::vector<std::shared_ptr<const KernelStencil>> out(atlas.size());
  for (std::size_t k = 0; k < atlas.size(); ++k) {
    if (reuse && reuse_atlas) {
      for (std::size_t q = 0; q < reuse_atlas->size() && q < reuse->size(); ++q) {
        if (same_matrix(reuse_atlas->entries[q], atlas.entries[k], 0.0)) {
          out[k] = (*reuse)[q];
          break;
        }
      }
    }
  }
  // cell quadrature parallelizes internally; keep this loop sequential
  for (std::size_t k = 0; k < atlas.size(); ++k) {
    if (!out[k]) out[k] = std::make_shared<const KernelStencil>(build_stencil(order, atlas.entries[k], domain, opts));
  }
  return out;
}

std::vector<double> apply_LAs(const GridField& u, const KernelStencil& stencil, const std::vector<std::size_t>& nodes) {
  const auto idx = all_nodes(u.domain(), nodes);
  DiscreteOperator op(u.domain(), std::make_shared<const KernelStencil>(stencil), u.closure(), &idx);
  std::vector<double> out(idx.size());
  parallel_for(idx.size(), [&](std::size_t q) { out[q] = op.apply(u.values(), idx[q]); });
  return out;
}

OperatorEval apply_Ds_eps(const GridField& u, const MatrixAtlas& atlas,
                          const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                          const std::vector<std::size_t>& nodes, bool keep_per_matrix) {
  AtlasOperator op(atlas, stencils, u.domain(), u.closure(), nullptr, &nodes);
  return op.inf(u.values(), nodes, keep_per_matrix);
}

std::vector<double> pucci_sup(const GridField& u, const MatrixAtlas& atlas,
                              const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              const std::vector<std::size_t>& nodes) {
  AtlasOperator op(atlas, stencils, u.domain(), u.closure(), nullptr, &nodes);
  return op.sup(u.values(), nodes);
}

std::vector<double> pucci_inf(const GridField& u, const MatrixAtlas& atlas,
                              const std::vector<std::shared_ptr<const KernelStencil>>& stencils,
                              const std::vector<std::size_t>& nodes) {
  return apply_Ds_eps(u, atlas, stencils, nodes).value;
}

double apply_directional(const GridField& u, const Point& e, double s, std::size_t node, const StencilOptions& opts) {
  const Domain& d = u.domain();
  if (node >= d.size()) fail(ErrorKind::Validation, "node index outside the box");
  const double len = std::hypot(e[0], d.n == 2 ? e[1] : 0.0);
  if (std::abs(len - 1.0) > 1e-12) fail(ErrorKind::Validation, "direction must be a unit vector");
  const Point dir{e[0], d.n == 2 ? e[1] : 0.0};
  const double h = d.h();
  const Point x = d.node(node);
  // the line meets the box in a segment of length at most 2 sqrt(n) R
  int half = static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(d.n)) * d.R / h));
  half = std::max(8, half + (half % 2));
  const Domain line = Domain::make(1, half * h, 2 * half);
  const GridField& src = u;
  auto along = [&src, x, dir](const Point& t) { return src.eval({x[0] + t[0] * dir[0], x[1] + t[0] * dir[1]}); };
  const Closure& cl = u.closure();
  FarField far;
  if (cl.far.cone_coef != 0.0) {
    far.cone_coef = cl.far.cone(dir, d.n);
    far.cone_form = SymForm{};
  }
  far.p = {cl.far.p[0] * dir[0] + cl.far.p[1] * dir[1], 0.0};
  far.b0 = cl.far.b0 + cl.far.p[0] * x[0] + cl.far.p[1] * x[1];
  std::function<double(const Point&)> ext;
  if (cl.fn) {
    auto fn = cl.fn;
    ext = [fn, x, dir](const Point& t) { return fn({x[0] + t[0] * dir[0], x[1] + t[0] * dir[1]}); };
  }
  Closure line_closure{cl.tag, ext, far};
  std::vector<double> vals(line.size());
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = along(line.node(j));
  StencilOptions o = opts;
  o.window = half / 2;
  const FracOrder ord = FracOrder::make(1, s);
  auto st = std::make_shared<const KernelStencil>(build_stencil(ord, MatrixParams{}, line, o));
  DiscreteOperator op(line, st, line_closure);
  return op.apply(vals, static_cast<std::size_t>(half));
}

void write_operator_csv(const std::string& path, const Domain& domain, const OperatorEval& eval,
                        const MatrixAtlas& atlas, const std::vector<Mode>* mode) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Config, "cannot write " + path);
  os << (domain.n == 1 ? "x," : "x,y,") << "value,argmin_a,argmin_theta,mode\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < eval.value.size(); ++i) {
    const Point x = domain.node(i);
    const auto& e = atlas.entries.at(eval.argmin[i]);
    os << x[0] << ',';
    if (domain.n == 2) os << x[1] << ',';
    const bool contact = mode && (*mode)[i] == Mode::Contact;
    os << eval.value[i] << ',' << e.a << ',' << e.theta << ',' << (contact ? "contact" : "equation") << '\n';
  }
}

}  // namespace fracma
