#include "fracma/matrix_atlas.hpp"

#include <algorithm>
#include <cmath>

namespace fracma {

namespace {
constexpr double kPi = 3.14159265358979323846;

void append_unique(MatrixAtlas& at, const MatrixParams& p) {
  if (!at.contains(p)) at.entries.push_back(p);
}
}  // namespace

bool same_matrix(const MatrixParams& x, const MatrixParams& y, double tol) {
  const Eigen::Matrix2d d = x.matrix() - y.matrix();
  return d.cwiseAbs().maxCoeff() <= tol;
}

bool MatrixAtlas::contains(const MatrixParams& p, double tol) const {
  return std::any_of(entries.begin(), entries.end(), [&](const MatrixParams& e) { return same_matrix(e, p, tol); });
}

std::size_t MatrixAtlas::identity_index() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (same_matrix(entries[i], MatrixParams{})) return i;
  }
  fail(ErrorKind::Invariant, "atlas has no identity entry");
}

MatrixAtlas build_atlas(int n, double eps, int n_a, int n_theta) {
  if (n != 1 && n != 2) fail(ErrorKind::Config, "atlas dimension must be 1 or 2");
  if (!(eps > 0.0) || eps > 1.0) fail(ErrorKind::Config, "atlas eps must lie in (0, 1]");
  if (n_a < 1 || n_theta < 1) fail(ErrorKind::Config, "atlas counts must be positive");
  MatrixAtlas at;
  at.n = n;
  at.eps = eps;
  at.n_a = n_a;
  at.n_theta = n_theta;
  at.log_step = n_a > 1 ? -std::log(eps) / (n_a - 1) : 0.0;
  if (n == 1) {
    at.entries.push_back(MatrixParams{});
    return at;
  }
  at.entries.push_back(MatrixParams{});
  if (eps == 1.0 || n_a == 1) return at;
  // eigenvalues from 1 downward so older (larger) ones keep their indices
  for (int k = n_a - 2; k >= 0; --k) {
    const double a = k == 0 ? eps : std::exp(std::log(eps) * (1.0 - static_cast<double>(k) / (n_a - 1)));
    for (int t = 0; t < n_theta; ++t) append_unique(at, MatrixParams{a, kPi * t / n_theta});
  }
  return at;
}

MatrixAtlas refine_atlas(const MatrixAtlas& atlas, double new_eps) {
  if (!(new_eps > 0.0) || !(new_eps < atlas.eps)) fail(ErrorKind::Config, "refined eps must lie in (0, eps)");
  MatrixAtlas at = atlas;
  at.eps = new_eps;
  if (atlas.n == 1) return at;
  double step = atlas.log_step;
  if (!(step > 0.0)) step = std::log(2.0);  // single-eigenvalue atlas: extend by octaves
  at.log_step = step;
  double a = atlas.eps;
  // continue the log grid below the old floor; the new floor is always included
  for (;;) {
    a *= std::exp(-step);
    if (a <= new_eps * (1.0 + 1e-12)) break;
    for (int t = 0; t < atlas.n_theta; ++t) append_unique(at, MatrixParams{a, kPi * t / atlas.n_theta});
    ++at.n_a;
  }
  for (int t = 0; t < atlas.n_theta; ++t) append_unique(at, MatrixParams{new_eps, kPi * t / atlas.n_theta});
  ++at.n_a;
  return at;
}

nlohmann::json atlas_to_json(const MatrixAtlas& atlas) {
  nlohmann::json j;
  j["n"] = atlas.n;
  j["eps"] = atlas.eps;
  j["n_a"] = atlas.n_a;
  j["n_theta"] = atlas.n_theta;
  j["log_step"] = atlas.log_step;
  auto arr = nlohmann::json::array();
  for (const auto& e : atlas.entries) {
    if (e.scale == 1.0) {
      arr.push_back({e.a, e.theta});
    } else {
      arr.push_back({e.a, e.theta, e.scale});
    }
  }
  j["entries"] = arr;
  return j;
}

MatrixAtlas atlas_from_json(const nlohmann::json& j) {
  MatrixAtlas at;
  at.n = j.at("n").get<int>();
  at.eps = j.at("eps").get<double>();
  at.n_a = j.at("n_a").get<int>();
  at.n_theta = j.at("n_theta").get<int>();
  at.log_step = j.at("log_step").get<double>();
  for (const auto& e : j.at("entries")) {
    MatrixParams p{e.at(0).get<double>(), e.at(1).get<double>()};
    if (e.size() > 2) p.scale = e.at(2).get<double>();
    at.entries.push_back(p);
  }
  return at;
}

}  // namespace fracma
