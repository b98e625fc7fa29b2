#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fracma {

/// (-Delta)^s exp(-|x|^2) at |x| = r from the Fourier side, n in {1, 2}.
double oracle_gaussian(int n, double s, double r);
/// Integral of |y|^{-1-2s} over the 1D cell [(j - 1/2)h, (j + 1/2)h], by adaptive quadrature.
double oracle_cell_weight_1d(int j, double h, double s);
/// L = -(-Delta)^s of the 1D smoothed cone sqrt(c0^2 + x^2) - c0 at x, by adaptive quadrature of the singular integral.
double oracle_cone_1d(double s, double c0, double x);
/// Atlas sizes along the continuation schedule eps0 * 2^-k.
std::vector<std::size_t> oracle_atlas_counts(int n, double eps0, int n_a, int n_theta, int levels);

/// Named oracle with string parameters; unknown kinds are Config errors.
nlohmann::json run_oracle(const std::string& kind, const nlohmann::json& params);

}  // namespace fracma
