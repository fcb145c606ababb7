#include "tdekit/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tde {

namespace {

constexpr int kMaxBisect = 200;

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// odometer over the closed cube [c - r, c + r]^d, m points per axis
std::vector<Vec> cube_lattice(const Vec& c, double r, int m) {
  const int d = static_cast<int>(c.size());
  std::vector<Vec> pts;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = c[i] - r + 2.0 * r * idx[i] / (m - 1);
    pts.push_back(std::move(p));
    int i = 0;
    while (i < d && ++idx[i] == m) idx[i++] = 0;
    if (i == d) break;
  }
  return pts;
}

bool eps_box_ok(const FieldSpec& spec, const Vec& xstar, double eps, int pivot,
                double half_center, int per_dim) {
  for (const Vec& p : cube_lattice(xstar, eps, per_dim)) {
    try {
      Vec g = spec.eval(p);
      if (std::fabs(g[pivot]) < half_center) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

// sampled Lipschitz bound for the reduced slopes f_i = -g_i / g_pivot
double reduced_slope_bound(const FieldSpec& spec, const Vec& xstar, double eps,
                           int pivot, int per_dim) {
  const int n = spec.n();
  auto pts = cube_lattice(xstar, eps, per_dim);
  std::vector<Vec> fs;
  fs.reserve(pts.size());
  for (const Vec& p : pts) {
    Vec g = spec.eval(p);
    Vec f;
    f.reserve(n - 1);
    for (int i = 0; i < n; ++i)
      if (i != pivot) f.push_back(-g[i] / g[pivot]);
    fs.push_back(std::move(f));
  }
  double best = 0.0;
  for (size_t a = 0; a < pts.size(); ++a) {
    for (size_t b = a + 1; b < pts.size(); ++b) {
      double dx2 = 0.0, df2 = 0.0;
      for (size_t i = 0; i < pts[a].size(); ++i) {
        double d = pts[a][i] - pts[b][i];
        dx2 += d * d;
      }
      for (size_t i = 0; i < fs[a].size(); ++i) {
        double d = fs[a][i] - fs[b][i];
        df2 += d * d;
      }
      if (dx2 > 0.0) best = std::max(best, std::sqrt(df2 / dx2));
    }
  }
  return best;
}

// all rays from the delta-box lattice must complete inside the guard and the
// bracket endpoints must land strictly beyond the box faces
bool delta_box_ok(const SolutionFunction& sf, const Vec& xstar, int pivot,
                  double delta, double z_lo, double z_hi, int z_count, int red_per_dim) {
  Vec ct = drop_pivot(xstar, pivot);
  const double xp = xstar[pivot];
  for (const Vec& xt : cube_lattice(ct, delta, red_per_dim)) {
    for (int j = 0; j < z_count; ++j) {
      double z = z_lo + (z_hi - z_lo) * j / (z_count - 1);
      double y;
      try {
        y = sf(1.0, xt, z);
      } catch (const std::exception&) {
        return false;
      }
      if (j == 0 && !(y < xp - delta)) return false;
      if (j == z_count - 1 && !(y > xp + delta)) return false;
    }
  }
  return true;
}

// seed of the level graph through x, before the sign normalization
SolutionValue raw_solve(const SolutionChart& ch, const Vec& x) {
  const SolutionFunction& sf = *ch.cfun;
  Vec xt = drop_pivot(x, ch.pivot);
  const double target = x[ch.pivot];
  if (xt == sf.center_tilde()) return {target, 0, 0.0};
  double lo = ch.z_lo, hi = ch.z_hi;
  double flo = sf(1.0, xt, lo) - target;
  double fhi = sf(1.0, xt, hi) - target;
  if (flo > 0.0 || fhi < 0.0)
    throw std::runtime_error("seed bracket does not straddle the target height; chart invariant violated");
  if (flo == 0.0) return {lo, 0, 0.0};
  if (fhi == 0.0) return {hi, 0, 0.0};
  int iters = 0;
  while (hi - lo > ch.tol_z && iters < kMaxBisect) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = sf(1.0, xt, mid) - target;
    ++iters;
    if (fm == 0.0) return {mid, iters, 0.0};
    (fm < 0.0 ? lo : hi) = mid;
  }
  double seed = 0.5 * (lo + hi);
  double res = std::fabs(sf(1.0, xt, seed) - target);
  return {seed, iters, res};
}

}  // namespace

bool SolutionChart::in_delta_box(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != spec.n()) return false;
  const double slack = delta * 1e-12;
  for (size_t i = 0; i < x.size(); ++i)
    if (std::fabs(x[i] - center[i]) > delta + slack) return false;
  return true;
}

SolutionChart build_chart(const FieldSpec& spec, const Vec& xstar, const ChartConfig& cfg) {
  const int n = spec.n();
  if (static_cast<int>(xstar.size()) != n)
    throw std::invalid_argument("chart center dimension mismatch");
  const DomainBox& dom = spec.domain();
  if (!dom.strictly_inside(xstar))
    throw std::runtime_error("chart center must lie strictly inside the domain");
  Vec g0 = spec.eval(xstar);

  int pivot = 0;
  double best = std::fabs(g0[0]);
  for (int k = 1; k < n; ++k) {
    if (std::fabs(g0[k]) > best) {
      best = std::fabs(g0[k]);
      pivot = k;
    }
  }

  double dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k)
    dist = std::min({dist, xstar[k] - dom.lower[k], dom.upper[k] - xstar[k]});

  const double eps_min = cfg.delta_min_factor * dom.min_width();
  const double half_center = 0.5 * std::fabs(g0[pivot]);
  const int per_dim = n <= 2 ? 9 : (n == 3 ? 5 : 3);
  double eps = 0.5 * dist;
  while (!eps_box_ok(spec, xstar, eps, pivot, half_center, per_dim)) {
    eps *= 0.5;
    if (eps < eps_min)
      throw std::runtime_error("chart radius search collapsed: pivot component of the field loses dominance arbitrarily close to the center");
  }

  const double lipschitz = std::max(1.5, 1.25 * reduced_slope_bound(spec, xstar, eps, pivot, per_dim));

  const double z_lo = xstar[pivot] - eps;
  const double z_hi = xstar[pivot] + eps;
  OdeConfig ode = cfg.ode;
  ode.guard = std::make_pair(Vec{xstar[pivot] - cfg.guard_inflate * eps},
                             Vec{xstar[pivot] + cfg.guard_inflate * eps});
  auto cfun = std::make_shared<SolutionFunction>(spec, pivot, xstar, ode);

  const double delta_min = cfg.delta_min_factor * dom.min_width();
  const double flat_cap = 1.0 / (2.0 * lipschitz * lipschitz) / std::sqrt(static_cast<double>(std::max(1, n - 1)));
  const int red_per_dim = n <= 3 ? 5 : 3;
  double delta = 0.5 * eps;
  while (delta > flat_cap || !delta_box_ok(*cfun, xstar, pivot, delta, z_lo, z_hi, 5, red_per_dim)) {
    delta *= 0.5;
    if (delta < delta_min)
      throw std::runtime_error("chart half-width search collapsed: level rays refuse to stay bracketed near the center");
  }

  SolutionChart chart{spec, xstar, pivot, +1, eps, delta, lipschitz, z_lo, z_hi, cfg.tol_z, cfun};

  // orient u so it increases along g: compare raw seeds a small step out and back
  const double t0 = delta / (4.0 * l2(g0));
  Vec xp = xstar, xm = xstar;
  for (int i = 0; i < n; ++i) {
    xp[i] += t0 * g0[i];
    xm[i] -= t0 * g0[i];
  }
  const double a = raw_solve(chart, xp).u;
  const double b = raw_solve(chart, xm).u;
  if (!(a > b) && !(b > a))
    throw std::runtime_error("sign probe is degenerate: the seed does not separate along the field direction");
  chart.sign = a > b ? +1 : -1;
  return chart;
}

SolutionValue eval_solution(const SolutionChart& chart, const Vec& x) {
  if (static_cast<int>(x.size()) != chart.spec.n())
    throw std::invalid_argument("point dimension mismatch");
  if (!chart.in_delta_box(x))
    throw std::runtime_error("point outside the chart delta-box");
  SolutionValue v = raw_solve(chart, x);
  const double c = chart.center[chart.pivot];
  v.u = c + chart.sign * (v.u - c);
  return v;
}

double eval_level_fn(const SolutionChart& chart, double z, const Vec& xtilde) {
  if (static_cast<int>(xtilde.size()) != chart.spec.n() - 1)
    throw std::invalid_argument("reduced point dimension mismatch");
  if (z < chart.z_lo || z > chart.z_hi)
    throw std::runtime_error("seed outside the chart bracket");
  return (*chart.cfun)(1.0, xtilde, z);
}

double recover_lambda(const SolutionChart& chart, const Vec& x, double fd_h) {
  Vec xp = x, xm = x;
  xp[chart.pivot] += fd_h;
  xm[chart.pivot] -= fd_h;
  const double du = (eval_solution(chart, xp).u - eval_solution(chart, xm).u) / (2.0 * fd_h);
  Vec g = chart.spec.eval(x);
  return du / g[chart.pivot];
}

double gradient_alignment_residual(const SolutionChart& chart, const Vec& x, double fd_h) {
  const int n = chart.spec.n();
  Vec grad(n);
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += fd_h;
    xm[i] -= fd_h;
    grad[i] = (eval_solution(chart, xp).u - eval_solution(chart, xm).u) / (2.0 * fd_h);
  }
  Vec g = chart.spec.eval(x);
  const double gn = l2(g);
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += grad[i] * g[i] / gn;
  double num2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = grad[i] - dot * g[i] / gn;
    num2 += r * r;
  }
  const double den = l2(grad);
  if (den == 0.0)
    throw std::runtime_error("numerical gradient vanished; alignment undefined");
  return std::sqrt(num2) / den;
}

nlohmann::json chart_to_json(const SolutionChart& chart) {
  return nlohmann::json{{"field", chart.spec.name()},
                        {"n", chart.spec.n()},
                        {"center", chart.center},
                        {"pivot", chart.pivot + 1},
                        {"sign", chart.sign},
                        {"epsilon", chart.epsilon},
                        {"delta", chart.delta},
                        {"lipschitz", chart.lipschitz},
                        {"seed_range", nlohmann::json::array({chart.z_lo, chart.z_hi})},
                        {"tol_z", chart.tol_z}};
}

}  // namespace tde
