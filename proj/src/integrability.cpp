#include "tdekit/integrability.hpp"

#include <cmath>

namespace tde {

double jacobi_residual(const FieldSpec& spec, std::span<const double> x,
                       std::array<int, 3> triple, DerivMode mode, double fd_h) {
  for (int idx : triple)
    if (idx < 0 || idx >= spec.n())
      throw std::invalid_argument("jacobi triple index out of range");
  Vec g = spec.eval(x);
  auto J = spec.jacobian(x, mode, fd_h);
  auto d = [&](int i, int j) {
    return J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  };
  int i = triple[0], j = triple[1], k = triple[2];
  auto gi = [&](int t) { return g[static_cast<std::size_t>(t)]; };
  return gi(i) * (d(j, k) - d(k, j)) + gi(j) * (d(k, i) - d(i, k)) +
         gi(k) * (d(i, j) - d(j, i));
}

std::vector<std::array<int, 3>> reduced_triples(int n, int kstar) {
  if (n < 2) throw std::invalid_argument("reduced_triples: n >= 2 required");
  if (kstar < 0 || kstar >= n) throw std::invalid_argument("reduced_triples: pivot out of range");
  std::vector<std::array<int, 3>> out;
  for (int i = 0; i < n; ++i) {
    if (i == kstar) continue;
    for (int j = i + 1; j < n; ++j) {
      if (j == kstar) continue;
      out.push_back({i, j, kstar});
    }
  }
  return out;
}

double symmetry_residual(const FieldSpec& spec, std::span<const double> x, int pivot,
                         std::pair<int, int> pair, DerivMode mode, double fd_h) {
  int i = pair.first, j = pair.second;
  if (pivot < 0 || pivot >= spec.n())
    throw std::invalid_argument("symmetry_residual: pivot out of range");
  if (i == j || i == pivot || j == pivot || i < 0 || j < 0 || i >= spec.n() || j >= spec.n())
    throw std::invalid_argument(
        "symmetry_residual needs distinct indices i, j different from the pivot (no valid "
        "pair exists for n = 2)");
  Vec g = spec.eval(x);
  auto J = spec.jacobian(x, mode, fd_h);
  auto d = [&](int a, int b) {
    return J[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  };
  double gp = g[static_cast<std::size_t>(pivot)];
  if (gp == 0.0) throw std::runtime_error("symmetry_residual: pivot component vanishes");
  auto gv = [&](int t) { return g[static_cast<std::size_t>(t)]; };
  auto f = [&](int t) { return -gv(t) / gp; };
  // df_i/dx_j = -(dg_i/dx_j * g_p - g_i * dg_p/dx_j) / g_p^2
  auto df = [&](int t, int w) { return -(d(t, w) * gp - gv(t) * d(pivot, w)) / (gp * gp); };
  double s_ij = df(i, j) + df(i, pivot) * f(j);
  double s_ji = df(j, i) + df(j, pivot) * f(i);
  return s_ij - s_ji;
}

std::vector<Vec> GridPlan::points() const {
  box.validate();
  if (per_dim < 1) throw std::invalid_argument("grid needs at least one point per axis");
  int n = box.dim();
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_dim);
  pts.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vec x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::size_t k = static_cast<std::size_t>(i);
      x[k] = box.lower[k] + (idx[k] + 1) * box.width(i) / (per_dim + 1);
    }
    pts.push_back(std::move(x));
    for (int i = 0; i < n; ++i) {
      std::size_t k = static_cast<std::size_t>(i);
      if (++idx[k] < per_dim) break;
      idx[k] = 0;
    }
  }
  return pts;
}

IntegrabilityReport check_integrability(const FieldSpec& spec, const GridPlan& grid, double tol,
                                        DerivMode mode, double fd_h, double kink_tol) {
  IntegrabilityReport rep;
  rep.tolerance = tol;
  for (const auto& x : grid.points()) {
    if (spec.kink_near(x, kink_tol)) {
      ++rep.skipped_kink_points;
      continue;
    }
    ++rep.evaluated_points;
    JacobiSample sample;
    sample.point = x;
    sample.triple = {-1, -1, -1};
    if (spec.n() >= 3) {
      Vec g = spec.eval(x);
      int kstar = 0;
      for (int k = 1; k < spec.n(); ++k)
        if (std::fabs(g[static_cast<std::size_t>(k)]) >
            std::fabs(g[static_cast<std::size_t>(kstar)]))
          kstar = k;
      for (const auto& tr : reduced_triples(spec.n(), kstar)) {
        double r = jacobi_residual(spec, x, tr, mode, fd_h);
        if (std::fabs(r) >= std::fabs(sample.residual)) {
          sample.residual = r;
          sample.triple = tr;
        }
      }
    }
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::fabs(sample.residual));
    rep.samples.push_back(std::move(sample));
  }
  rep.pass = rep.max_abs_residual <= tol;
  return rep;
}

nlohmann::json to_json(const IntegrabilityReport& r) {
  nlohmann::json j;
  j["verdict"] = r.pass ? "pass" : "fail";
  j["max_abs_residual"] = r.max_abs_residual;
  j["tolerance"] = r.tolerance;
  j["skipped_kink_points"] = r.skipped_kink_points;
  j["evaluated_points"] = r.evaluated_points;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    nlohmann::json e;
    e["point"] = s.point;
    if (s.triple[0] >= 0)
      e["triple"] = {s.triple[0] + 1, s.triple[1] + 1, s.triple[2] + 1};
    else
      e["triple"] = nlohmann::json::array();
    e["residual"] = s.residual;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  return j;
}

}  // namespace tde
