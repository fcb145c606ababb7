#include "tdekit/ode.hpp"

#include <algorithm>
#include <cmath>

namespace tde {

namespace {

bool in_guard(const OdeConfig& cfg, const Vec& y) {
  if (!cfg.guard) return true;
  const auto& [lo, hi] = *cfg.guard;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < lo[i] || y[i] > hi[i]) return false;
  return true;
}

Vec axpy(const Vec& y, double h, const Vec& k) {
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * k[i];
  return out;
}

// classical Fehlberg 4(5) tableau
constexpr double B21 = 1.0 / 4.0;
constexpr double B31 = 3.0 / 32.0, B32 = 9.0 / 32.0;
constexpr double B41 = 1932.0 / 2197.0, B42 = -7200.0 / 2197.0, B43 = 7296.0 / 2197.0;
constexpr double B51 = 439.0 / 216.0, B52 = -8.0, B53 = 3680.0 / 513.0, B54 = -845.0 / 4104.0;
constexpr double B61 = -8.0 / 27.0, B62 = 2.0, B63 = -3544.0 / 2565.0, B64 = 1859.0 / 4104.0,
                 B65 = -11.0 / 40.0;
// 5th order solution weights
constexpr double C1 = 16.0 / 135.0, C3 = 6656.0 / 12825.0, C4 = 28561.0 / 56430.0,
                 C5 = -9.0 / 50.0, C6 = 2.0 / 55.0;
// error weights (5th minus 4th)
constexpr double E1 = 16.0 / 135.0 - 25.0 / 216.0, E3 = 6656.0 / 12825.0 - 1408.0 / 2565.0,
                 E4 = 28561.0 / 56430.0 - 2197.0 / 4104.0, E5 = -9.0 / 50.0 + 1.0 / 5.0,
                 E6 = 2.0 / 55.0;

struct StepResult {
  Vec y;
  double err;  // max component error vs tolerance scale (<= 1 accepts)
};

StepResult rkf45_step(const OdeRhs& rhs, double t, const Vec& y, double h, const Vec& k1,
                      double abs_tol, double rel_tol) {
  Vec k2 = rhs(t + h / 4.0, axpy(y, h * B21, k1));
  Vec y3(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y3[i] = y[i] + h * (B31 * k1[i] + B32 * k2[i]);
  Vec k3 = rhs(t + 3.0 * h / 8.0, y3);
  Vec y4(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y4[i] = y[i] + h * (B41 * k1[i] + B42 * k2[i] + B43 * k3[i]);
  Vec k4 = rhs(t + 12.0 * h / 13.0, y4);
  Vec y5(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y5[i] = y[i] + h * (B51 * k1[i] + B52 * k2[i] + B53 * k3[i] + B54 * k4[i]);
  Vec k5 = rhs(t + h, y5);
  Vec y6(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y6[i] = y[i] + h * (B61 * k1[i] + B62 * k2[i] + B63 * k3[i] + B64 * k4[i] + B65 * k5[i]);
  Vec k6 = rhs(t + h / 2.0, y6);

  StepResult res;
  res.y.resize(y.size());
  res.err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res.y[i] = y[i] + h * (C1 * k1[i] + C3 * k3[i] + C4 * k4[i] + C5 * k5[i] + C6 * k6[i]);
    double ei = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]);
    double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(res.y[i]));
    res.err = std::max(res.err, std::fabs(ei) / scale);
  }
  return res;
}

}  // namespace

Vec Trajectory::at(double ti) const {
  if (t.empty()) throw std::runtime_error("empty trajectory");
  if (ti <= t.front()) return y.front();
  if (ti >= t.back()) return y.back();
  auto it = std::upper_bound(t.begin(), t.end(), ti);
  std::size_t hi = static_cast<std::size_t>(it - t.begin());
  std::size_t lo = hi - 1;
  double h = t[hi] - t[lo];
  double s = (ti - t[lo]) / h;
  // cubic Hermite on [t_lo, t_hi]
  double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  double h10 = s * (1.0 - s) * (1.0 - s);
  double h01 = s * s * (3.0 - 2.0 * s);
  double h11 = s * s * (s - 1.0);
  Vec out(y[lo].size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = h00 * y[lo][i] + h * h10 * dy[lo][i] + h01 * y[hi][i] + h * h11 * dy[hi][i];
  return out;
}

Trajectory integrate(const OdeRhs& rhs, double t0, const Vec& y0, double t1,
                     const OdeConfig& cfg) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 > t0 required");
  Trajectory tr;
  tr.t.push_back(t0);
  tr.y.push_back(y0);
  tr.dy.push_back(rhs(t0, y0));
  if (!in_guard(cfg, y0)) {
    tr.termination = Termination::LeftGuardBox;
    tr.exit_time = t0;
    return tr;
  }

  if (cfg.method == OdeMethod::Rk4Fixed) {
    if (!(cfg.step > 0.0)) throw std::invalid_argument("integrate: fixed step must be positive");
    double t = t0;
    Vec y = y0;
    long steps = 0;
    while (t < t1) {
      if (++steps > cfg.max_steps) {
        tr.termination = Termination::StepLimit;
        tr.exit_time = t;
        return tr;
      }
      double h = std::min(cfg.step, t1 - t);
      Vec k1 = rhs(t, y);
      Vec k2 = rhs(t + h / 2.0, axpy(y, h / 2.0, k1));
      Vec k3 = rhs(t + h / 2.0, axpy(y, h / 2.0, k2));
      Vec k4 = rhs(t + h, axpy(y, h, k3));
      Vec yn(y.size());
      for (std::size_t i = 0; i < y.size(); ++i)
        yn[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
      if (!in_guard(cfg, yn)) {
        tr.termination = Termination::LeftGuardBox;
        tr.exit_time = t;
        return tr;
      }
      y = yn;
      tr.t.push_back(t);
      tr.y.push_back(y);
      tr.dy.push_back(rhs(t, y));
    }
    return tr;
  }

  // RKF45 adaptive
  double t = t0;
  Vec y = y0;
  Vec k1 = tr.dy.back();
  double h = (t1 - t0) / 16.0;
  const double h_min = (t1 - t0) * 1e-14;
  long steps = 0;
  while (t < t1) {
    if (++steps > cfg.max_steps) {
      tr.termination = Termination::StepLimit;
      tr.exit_time = t;
      return tr;
    }
    h = std::min(h, t1 - t);
    StepResult st = rkf45_step(rhs, t, y, h, k1, cfg.abs_tol, cfg.rel_tol);
    if (st.err <= 1.0 || h <= h_min) {
      t += h;
      if (!in_guard(cfg, st.y)) {
        tr.termination = Termination::LeftGuardBox;
        tr.exit_time = t;
        return tr;
      }
      y = std::move(st.y);
      k1 = rhs(t, y);
      tr.t.push_back(t);
      tr.y.push_back(y);
      tr.dy.push_back(k1);
      double grow = st.err > 0.0 ? 0.9 * std::pow(st.err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(st.err, -0.2), 0.2, 0.9);
    }
  }
  return tr;
}

double RayProblem::operator()(double t, double z) const {
  std::size_t m = xtilde.size();
  Vec reduced(m);
  for (std::size_t i = 0; i < m; ++i)
    reduced[i] = (1.0 - t) * xstar_tilde[i] + t * xtilde[i];
  Vec full = insert_pivot(reduced, pivot, z);
  Vec g = spec->eval(full);
  double gp = g[static_cast<std::size_t>(pivot)];
  if (gp == 0.0) throw std::runtime_error("ray rhs: pivot component vanishes");
  double acc = 0.0;
  std::size_t r = 0;
  for (int i = 0; i < spec->n(); ++i) {
    if (i == pivot) continue;
    double fi = -g[static_cast<std::size_t>(i)] / gp;
    acc += fi * (xtilde[r] - xstar_tilde[r]);
    ++r;
  }
  return acc;
}

RayProblem ray_rhs(const FieldSpec& spec, int pivot, Vec xstar_tilde, Vec xtilde) {
  if (pivot < 0 || pivot >= spec.n()) throw std::invalid_argument("ray_rhs: pivot out of range");
  if (static_cast<int>(xstar_tilde.size()) != spec.n() - 1 ||
      static_cast<int>(xtilde.size()) != spec.n() - 1)
    throw std::invalid_argument("ray_rhs: reduced points must have n-1 coordinates");
  return RayProblem{&spec, pivot, std::move(xstar_tilde), std::move(xtilde)};
}

Vec insert_pivot(const Vec& reduced, int pivot, double z) {
  Vec full(reduced.size() + 1);
  std::size_t r = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (static_cast<int>(i) == pivot)
      full[i] = z;
    else
      full[i] = reduced[r++];
  }
  return full;
}

Vec drop_pivot(std::span<const double> x, int pivot) {
  Vec out;
  out.reserve(x.size() - 1);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (static_cast<int>(i) != pivot) out.push_back(x[i]);
  return out;
}

SolutionFunction::SolutionFunction(FieldSpec spec, int pivot, Vec xstar, OdeConfig cfg)
    : spec_(std::move(spec)), pivot_(pivot), xstar_(std::move(xstar)), cfg_(std::move(cfg)) {
  if (pivot_ < 0 || pivot_ >= spec_.n())
    throw std::invalid_argument("solution function: pivot out of range");
  if (static_cast<int>(xstar_.size()) != spec_.n())
    throw std::invalid_argument("solution function: center must have n coordinates");
  xstar_tilde_ = drop_pivot(xstar_, pivot_);
}

double SolutionFunction::operator()(double t, const Vec& xtilde, double z) const {
  if (t < 0.0 || t > 1.0)
    throw std::invalid_argument("solution function: t must lie in [0, 1]");
  if (t == 0.0 || xtilde == xstar_tilde_) return z;  // degenerate ray: c == z

  std::shared_ptr<const Trajectory> traj;
  Key key{xtilde, z};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) traj = it->second;
  }
  if (!traj) {
    RayProblem ray = ray_rhs(spec_, pivot_, xstar_tilde_, xtilde);
    OdeRhs rhs = [&ray](double tt, const Vec& y) { return Vec{ray(tt, y[0])}; };
    auto fresh = std::make_shared<Trajectory>(integrate(rhs, 0.0, Vec{z}, 1.0, cfg_));
    if (fresh->termination == Termination::StepLimit)
      throw std::runtime_error("solution function: step limit exhausted");
    std::lock_guard<std::mutex> lock(mu_);
    traj = memo_.emplace(std::move(key), std::move(fresh)).first->second;
  }
  if (traj->termination == Termination::LeftGuardBox && traj->end_time() < t)
    throw GuardExitError(traj->exit_time);
  return traj->at(t)[0];
}

}  // namespace tde
