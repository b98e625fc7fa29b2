#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "fracma/common.hpp"
#include "fracma/kernel_quadrature.hpp"
#include "fracma/oracles.hpp"

using namespace fracma;

namespace {

double kummer_gaussian(int n, double s, double r) {
  const double a = 0.5 * n + s, b = 0.5 * n, z = -r * r;
  long double term = 1.0L, sum = 1.0L;
  for (int k = 0; k < 400; ++k) {
    term *= (a + k) / (b + k) * z / (k + 1);
    sum += term;
    if (std::abs(term) < 1e-19L * std::abs(sum)) break;
  }
  return std::pow(4.0, s) * boost::math::tgamma(a) / boost::math::tgamma(b) * static_cast<double>(sum);
}

}  // namespace

TEST_CASE("Gaussian oracle agrees with the hypergeometric closed form") {
  for (int n : {1, 2}) {
    for (double s : {0.55, 0.75, 0.95}) {
      for (double r : {0.0, 0.4, 1.0, 2.0}) {
        CHECK(oracle_gaussian(n, s, r) == doctest::Approx(kummer_gaussian(n, s, r)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("1D cell weights") {
  const double s = 0.7, h = 0.1;
  for (int j : {1, 2, 5, 40}) {
    const double lo = (j - 0.5) * h, hi = (j + 0.5) * h;
    const double exact = (std::pow(lo, -2.0 * s) - std::pow(hi, -2.0 * s)) / (2.0 * s);
    CHECK(oracle_cell_weight_1d(j, h, s) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("cone oracle at the vertex") {
  const double s = 0.75;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double I = ts.integrate([&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double r = t / (1.0 - t);
    return std::pow(r, 1.0 - 2.0 * s) / (std::hypot(1.0, r) + 1.0) / ((1.0 - t) * (1.0 - t));
  }, 0.0, 1.0);
  const double c = FracOrder::make(1, s).c;
  CHECK(oracle_cone_1d(s, 1.0, 0.0) == doctest::Approx(2.0 * c * I).epsilon(1e-7));
  // convexity keeps L positive; it decays away from the vertex
  CHECK(oracle_cone_1d(s, 1.0, 5.0) > 0.0);
  CHECK(oracle_cone_1d(s, 1.0, 5.0) < oracle_cone_1d(s, 1.0, 0.0));
}

TEST_CASE("atlas counts and named oracles") {
  CHECK(oracle_atlas_counts(2, 0.5, 2, 4, 4) == std::vector<std::size_t>{5, 9, 13, 17});
  CHECK(oracle_atlas_counts(1, 0.5, 2, 4, 3) == std::vector<std::size_t>{1, 1, 1});
  try {
    run_oracle("nope", nlohmann::json::object());
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}
