#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracma/common.hpp"

namespace fracma {

/// Origin-centered box [-R, R]^n with m cells per axis.
struct Domain {
  int n = 1;
  double R = 1.0;
  int m = 8;

  static Domain make(int n, double R, int m);

  double h() const { return 2.0 * R / m; }
  int per_axis() const { return m + 1; }
  std::size_t size() const;

  /// Node multi-index, x-axis fastest.
  std::array<int, 2> index(std::size_t flat) const;
  std::size_t flat(int i0, int i1 = 0) const;
  Point node(std::size_t flat) const;
  Point node(int i0, int i1) const;
  /// Flat index of node(flat) + h*(d0, d1), or nullopt if it leaves the box.
  std::optional<std::size_t> shift(std::size_t flat, int d0, int d1) const;
  bool contains(const Point& x) const;
  bool operator==(const Domain& o) const { return n == o.n && R == o.R && m == o.m; }
};

/// 2x2 symmetric form stored as (a11, a12, a22).
struct SymForm {
  double a11 = 1.0, a12 = 0.0, a22 = 1.0;
  double quad(const Point& z, int n) const;
};

/// Leading asymptotics f(z) ~ cone_coef*sqrt(z'Qz) + p.z + b0 as |z| grows.
/// The cone part is even and 1-homogeneous, so second differences of f at
/// large offsets reduce to 2*cone(y) + 2*(p.x + b0) - 2 f(x).
struct FarField {
  double cone_coef = 0.0;
  SymForm cone_form{};
  Point p{0.0, 0.0};
  double b0 = 0.0;

  double cone(const Point& dir, int n) const;
  FarField operator-(const FarField& o) const;
  FarField operator+(double c) const;
  FarField scaled(double k) const;
};

enum class ClosureTag : std::int32_t { AnalyticPhi = 0, Analytic = 1, Zero = 2 };

/// Rule for evaluating a grid function outside the box.
struct Closure {
  ClosureTag tag = ClosureTag::Zero;
  std::function<double(const Point&)> fn;
  FarField far{};

  double operator()(const Point& x) const { return fn ? fn(x) : 0.0; }

  static Closure zero();
  static Closure analytic(std::function<double(const Point&)> fn, FarField far,
                          ClosureTag tag = ClosureTag::Analytic);
  Closure plus_constant(double c) const;
};

const char* closure_tag_name(ClosureTag tag);

/// Exterior datum phi = Gamma + eta.
struct PhiSpec {
  enum class Family { SmoothedCone, EllipticCone };
  Family family = Family::SmoothedCone;
  double c0 = 1.0;
  /// Quadratic form of the elliptic cone; must be SPD. Ignored for the round cone.
  SymForm q{};
  double sigma = 1.0;

  double value(const Point& x, int n) const;
  FarField far_field() const;
  Closure closure() const;
  /// |eta(x)| <= decay_amplitude * |x|^-decay_exponent for |x| >= 1.
  double decay_amplitude() const;
  double decay_exponent(int n) const;
  double eta(const Point& x, int n) const;
  void check(int n) const;
};

/// Obstacle psi = phi + k + shape(x).
struct PsiSpec {
  enum class Family { PhiPlusConstant, PhiPlusBump, ParaboloidCap };
  Family family = Family::PhiPlusConstant;
  double level = 0.5;
  double amplitude = 0.0;   // bump height or cap curvature q
  double width = 1.0;       // bump width / cap saturation length
  Point center{0.0, 0.0};

  /// psi - phi at x.
  double gap(const Point& x, int n) const;
  double value(const PhiSpec& phi, const Point& x, int n) const;
  Closure closure(const PhiSpec& phi) const;
  /// Infimum of psi - phi over R^n.
  double min_gap() const;
};

/// Grid values plus exterior closure. Immutable after construction.
class GridField {
 public:
  GridField() = default;
  GridField(Domain domain, std::vector<double> values, Closure closure);

  const Domain& domain() const { return domain_; }
  const std::vector<double>& values() const { return values_; }
  const Closure& closure() const { return closure_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// Linear / bilinear interpolation inside the box, closure outside.
  double eval(const Point& x) const;

  GridField with_values(std::vector<double> values) const;
  GridField with_closure(Closure closure) const;

 private:
  Domain domain_{};
  std::vector<double> values_;
  Closure closure_{};
};

GridField build_field(const Domain& domain, const std::function<double(const Point&)>& expr,
                      Closure closure);

/// Lipschitz and semiconcavity budgets plus the bound M0 for L_I phi.
struct RegularityBudget {
  double M0 = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double lip_phi = 0.0, lip_psi = 0.0;
  double sc_phi = 0.0, sc_psi = 0.0;
};

/// Max forward-difference gradient modulus over nodes. A finite radius keeps
/// only differences whose nodes all satisfy |x|_inf <= radius.
double discrete_lipschitz(const GridField& f, double radius = std::numeric_limits<double>::infinity());
/// Max over interior nodes of the positive part of second differences along
/// axes and diagonals, each divided by |y|^2. Radius as above.
double discrete_semiconcavity(const GridField& f, double radius = std::numeric_limits<double>::infinity());

struct FracOrder;
struct StencilOptions;
RegularityBudget estimate_budget(const PhiSpec& phi, const PsiSpec& psi, const Domain& domain,
                                 const FracOrder& order, const StencilOptions& opts);

/// Axis-aligned bounding box of a node set.
struct Box {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  bool empty = true;
  bool contains(const Point& x, int n, double slack = 1e-12) const;
};

struct ValidationReport {
  bool obstacle_inactive = false;
  std::vector<std::string> warnings;
  Box compact_set;           // bounding box of {psi <= ubar}
  std::size_t compact_count = 0;
  double min_gap = 0.0;      // min of psi - phi over samples
};

ValidationReport validate_problem(const GridField& phi, const GridField& psi, const GridField& ubar);
ValidationReport validate_problem(const PhiSpec& phi, const PsiSpec& psi, const GridField& ubar);

void write_csv(const GridField& f, const std::string& path);
void write_binary(const GridField& f, const std::string& path);

struct RawField {
  Domain domain;
  ClosureTag tag = ClosureTag::Zero;
  std::vector<double> values;
};
RawField read_binary(const std::string& path);

}  // namespace fracma
