#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracma/kernel_quadrature.hpp"

namespace fracma {

/// Discrete stand-in for the matrices with eigenvalues in [eps, 1/eps].
struct MatrixAtlas {
  int n = 1;
  double eps = 1.0;
  int n_a = 1;
  int n_theta = 1;
  double log_step = 0.0;  // spacing of log a, reused when refining
  std::vector<MatrixParams> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t identity_index() const;
  bool contains(const MatrixParams& p, double tol = 1e-12) const;
};

MatrixAtlas build_atlas(int n, double eps, int n_a, int n_theta);
MatrixAtlas refine_atlas(const MatrixAtlas& atlas, double new_eps);

/// Entrywise comparison of the matrices R diag(a,1/a) R^T.
bool same_matrix(const MatrixParams& x, const MatrixParams& y, double tol = 1e-12);

nlohmann::json atlas_to_json(const MatrixAtlas& atlas);
MatrixAtlas atlas_from_json(const nlohmann::json& j);

enum class Mode : std::uint8_t { Equation = 0, Contact = 1 };

/// Per-node active matrix and mode.
struct PolicyField {
  std::vector<std::uint32_t> index;
  std::vector<Mode> mode;
};

}  // namespace fracma
