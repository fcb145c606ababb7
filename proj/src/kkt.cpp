#include "tdekit/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tdekit/rng.hpp"

namespace tde {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// dense symmetric solve, partial pivoting; m stays tiny (<= constraint count)
bool solve_dense(std::vector<Vec> m, Vec rhs, Vec& out) {
  const size_t k = rhs.size();
  for (size_t c = 0; c < k; ++c) {
    size_t p = c;
    for (size_t r = c + 1; r < k; ++r)
      if (std::fabs(m[r][c]) > std::fabs(m[p][c])) p = r;
    if (std::fabs(m[p][c]) < 1e-14) return false;
    std::swap(m[p], m[c]);
    std::swap(rhs[p], rhs[c]);
    for (size_t r = c + 1; r < k; ++r) {
      double f = m[r][c] / m[c][c];
      for (size_t j = c; j < k; ++j) m[r][j] -= f * m[c][j];
      rhs[r] -= f * rhs[c];
    }
  }
  out.assign(k, 0.0);
  for (size_t c = k; c-- > 0;) {
    double s = rhs[c];
    for (size_t j = c + 1; j < k; ++j) s -= m[c][j] * out[j];
    out[c] = s / m[c][c];
  }
  return true;
}

double max_constraint(const Vec& h) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : h) m = std::max(m, v);
  return m;
}

}  // namespace

ConstraintSet::ConstraintSet(std::vector<ExprPtr> exprs, DomainBox box)
    : exprs_(std::move(exprs)), box_(std::move(box)) {
  box_.validate();
  grads_.resize(exprs_.size());
  for (size_t i = 0; i < exprs_.size(); ++i) {
    if (!exprs_[i]) throw std::invalid_argument("null constraint expression");
    if (exprs_[i]->max_var() >= box_.dim())
      throw std::invalid_argument("constraint uses a variable beyond the box dimension");
    grads_[i].reserve(box_.dim());
    for (int j = 0; j < box_.dim(); ++j) grads_[i].push_back(exprs_[i]->diff(j));
  }
  spot_check_convexity(1000, 0);
}

ConstraintSet ConstraintSet::from_strings(const std::vector<std::string>& exprs,
                                          const DomainBox& box) {
  std::vector<ExprPtr> parsed;
  parsed.reserve(exprs.size());
  for (const auto& s : exprs) parsed.push_back(parse_expr(s, box.dim()));
  return ConstraintSet(std::move(parsed), box);
}

ConstraintSet ConstraintSet::from_json_file(const std::string& path, const DomainBox& box) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open constraints file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (!j.is_array()) throw std::runtime_error("constraints file must hold a JSON array of expression strings");
  std::vector<std::string> exprs;
  for (const auto& e : j) {
    if (!e.is_string()) throw std::runtime_error("constraints file must hold a JSON array of expression strings");
    exprs.push_back(e.get<std::string>());
  }
  return from_strings(exprs, box);
}

double ConstraintSet::value(size_t i, std::span<const double> x) const {
  return exprs_.at(i)->eval(x);
}

Vec ConstraintSet::values(std::span<const double> x) const {
  Vec h(exprs_.size());
  for (size_t i = 0; i < exprs_.size(); ++i) h[i] = exprs_[i]->eval(x);
  return h;
}

Vec ConstraintSet::gradient(size_t i, std::span<const double> x) const {
  const auto& g = grads_.at(i);
  Vec out(g.size());
  for (size_t j = 0; j < g.size(); ++j) out[j] = g[j]->eval(x);
  return out;
}

void ConstraintSet::spot_check_convexity(size_t num_pairs, std::uint64_t seed) const {
  Rng rng(seed);
  const int n = box_.dim();
  for (size_t p = 0; p < num_pairs; ++p) {
    Vec x = rng.point_in(box_);
    Vec y = rng.point_in(box_);
    Vec mid(n);
    for (int i = 0; i < n; ++i) mid[i] = 0.5 * (x[i] + y[i]);
    for (size_t i = 0; i < exprs_.size(); ++i) {
      double hx = exprs_[i]->eval(x), hy = exprs_[i]->eval(y), hm = exprs_[i]->eval(mid);
      if (!std::isfinite(hx) || !std::isfinite(hy) || !std::isfinite(hm))
        throw std::invalid_argument("constraint not finite on the box");
      if (hm > 0.5 * (hx + hy) + 1e-9 * (1.0 + std::fabs(hx) + std::fabs(hy)))
        throw std::invalid_argument("constraint " + std::to_string(i + 1) +
                                    " fails the midpoint convexity spot-check");
      for (double c : gradient(i, mid))
        if (!std::isfinite(c))
          throw std::invalid_argument("constraint " + std::to_string(i + 1) +
                                      " has a non-finite gradient on the box");
    }
  }
}

std::optional<Vec> slater_check(const ConstraintSet& cs, size_t num_samples, std::uint64_t seed,
                                double margin) {
  const int n = cs.n();
  Vec mid(n);
  for (int i = 0; i < n; ++i) mid[i] = 0.5 * (cs.box().lower[i] + cs.box().upper[i]);
  if (max_constraint(cs.values(mid)) < -margin) return mid;
  Rng rng(seed);
  for (size_t s = 0; s < num_samples; ++s) {
    Vec x = rng.point_in(cs.box());
    if (max_constraint(cs.values(x)) < -margin) return x;
  }
  return std::nullopt;
}

Vec nnls(const std::vector<Vec>& cols, const Vec& rhs, int max_iter) {
  const size_t k = cols.size();
  Vec lambda(k, 0.0);
  if (k == 0) return lambda;
  const size_t n = rhs.size();

  double wtol = 0.0;
  for (const auto& c : cols) wtol = std::max(wtol, std::fabs(dot(c, rhs)));
  wtol = 1e-12 * std::max(1.0, wtol);

  std::vector<char> in_set(k, 0);
  auto residual = [&](const Vec& lam) {
    Vec r = rhs;
    for (size_t j = 0; j < k; ++j)
      if (lam[j] != 0.0)
        for (size_t i = 0; i < n; ++i) r[i] -= lam[j] * cols[j][i];
    return r;
  };
  auto solve_subset = [&](Vec& z) {
    std::vector<size_t> idx;
    for (size_t j = 0; j < k; ++j)
      if (in_set[j]) idx.push_back(j);
    std::vector<Vec> gram(idx.size(), Vec(idx.size()));
    Vec b(idx.size());
    for (size_t a = 0; a < idx.size(); ++a) {
      b[a] = dot(cols[idx[a]], rhs);
      for (size_t c = 0; c < idx.size(); ++c) gram[a][c] = dot(cols[idx[a]], cols[idx[c]]);
    }
    Vec sol;
    if (!solve_dense(std::move(gram), std::move(b), sol)) return false;
    z.assign(k, 0.0);
    for (size_t a = 0; a < idx.size(); ++a) z[idx[a]] = sol[a];
    return true;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    Vec r = residual(lambda);
    int best = -1;
    double bestw = wtol;
    for (size_t j = 0; j < k; ++j) {
      if (in_set[j]) continue;
      double w = dot(cols[j], r);
      if (w > bestw) {
        bestw = w;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;
    in_set[best] = 1;

    for (int inner = 0; inner < max_iter; ++inner) {
      Vec z;
      if (!solve_subset(z)) {
        in_set[best] = 0;  // dependent column, drop it and stop
        return lambda;
      }
      bool all_pos = true;
      for (size_t j = 0; j < k; ++j)
        if (in_set[j] && z[j] <= 0.0) all_pos = false;
      if (all_pos) {
        lambda = std::move(z);
        break;
      }
      double alpha = 1.0;
      for (size_t j = 0; j < k; ++j)
        if (in_set[j] && z[j] <= 0.0)
          alpha = std::min(alpha, lambda[j] / (lambda[j] - z[j]));
      for (size_t j = 0; j < k; ++j)
        if (in_set[j]) lambda[j] += alpha * (z[j] - lambda[j]);
      for (size_t j = 0; j < k; ++j)
        if (in_set[j] && lambda[j] <= 1e-14) {
          lambda[j] = 0.0;
          in_set[j] = 0;
        }
    }
  }
  return lambda;
}

KKTCertificate kkt_verify(const FieldSpec& g, const ConstraintSet& cs, const Vec& xstar,
                          const KktTolerances& tols, const QCBundle* qc) {
  if (static_cast<int>(xstar.size()) != cs.n() || g.n() != cs.n())
    throw std::invalid_argument("dimension mismatch between field, constraints, and candidate");

  KKTCertificate cert;
  cert.xstar = xstar;
  cert.lambda.assign(cs.k(), 0.0);
  cert.slackness.assign(cs.k(), 0.0);

  if (qc && (qc->refused || qc->overall == QCVerdict::Violated)) {
    cert.reason = "quasi-convexity";
    return cert;
  }
  if (!slater_check(cs, 2000, 0, tols.slater_margin))
    throw std::runtime_error("constraints admit no strictly feasible point (Slater check failed)");

  Vec h = cs.values(xstar);
  cert.feasibility = max_constraint(h);
  if (cert.feasibility > tols.feas) {
    cert.reason = "feasibility";
    return cert;
  }

  Vec gx = g.eval(xstar);
  std::vector<Vec> cols;
  for (size_t i = 0; i < cs.k(); ++i) {
    if (h[i] >= -tols.act) {
      cert.active.push_back(static_cast<int>(i));
      cols.push_back(cs.gradient(i, xstar));
    }
  }
  Vec rhs(gx.size());
  for (size_t i = 0; i < gx.size(); ++i) rhs[i] = -gx[i];
  Vec lam = nnls(cols, rhs);

  Vec resid = gx;
  for (size_t a = 0; a < cols.size(); ++a) {
    cert.lambda[cert.active[a]] = lam[a];
    for (size_t i = 0; i < resid.size(); ++i) resid[i] += lam[a] * cols[a][i];
  }
  cert.stationarity_residual = norm2(resid);
  for (size_t i = 0; i < cs.k(); ++i) cert.slackness[i] = cert.lambda[i] * h[i];

  if (cert.stationarity_residual <= tols.stat) {
    cert.certified = true;
  } else {
    cert.reason = "stationarity";
  }
  return cert;
}

namespace {

struct ScoredPoint {
  double residual = std::numeric_limits<double>::infinity();
  Vec x;
};

// stationarity residual with activity relaxed to the local grid resolution,
// plus a complementary-slackness penalty so the score only vanishes where the
// multipliers lean on constraints that are genuinely tight
double score_candidate(const FieldSpec& g, const ConstraintSet& cs, const Vec& x, double spacing) {
  Vec h = cs.values(x);
  Vec gx = g.eval(x);
  std::vector<Vec> cols;
  std::vector<size_t> act;
  for (size_t i = 0; i < cs.k(); ++i) {
    Vec gr = cs.gradient(i, x);
    if (h[i] >= -1.5 * norm2(gr) * spacing - 1e-12) {
      act.push_back(i);
      cols.push_back(std::move(gr));
    }
  }
  Vec rhs(gx.size());
  for (size_t i = 0; i < gx.size(); ++i) rhs[i] = -gx[i];
  Vec lam = nnls(cols, rhs);
  Vec resid = gx;
  double slack_pen = 0.0;
  for (size_t a = 0; a < cols.size(); ++a) {
    for (size_t i = 0; i < resid.size(); ++i) resid[i] += lam[a] * cols[a][i];
    slack_pen += lam[a] * std::fabs(h[act[a]]);
  }
  return norm2(resid) + slack_pen;
}

bool feasible_at(const ConstraintSet& cs, const FieldSpec& g, const Vec& x, double feas_tol) {
  if (!g.domain().strictly_inside(x)) return false;
  return max_constraint(cs.values(x)) <= feas_tol;
}

}  // namespace

KktSearchResult kkt_search(const FieldSpec& g, const ConstraintSet& cs,
                           const KktSearchConfig& cfg) {
  if (g.n() != cs.n()) throw std::invalid_argument("field and constraint dimensions differ");
  const int n = cs.n();
  const DomainBox& box = cs.box();
  if (!slater_check(cs, 2000, cfg.seed, cfg.tols.slater_margin))
    throw std::runtime_error("constraints admit no strictly feasible point (Slater check failed)");

  const int m = std::max(2, cfg.grid_per_dim);
  Vec spacing(n);
  for (int i = 0; i < n; ++i) spacing[i] = box.width(i) / (m - 1);
  double spacing_max = *std::max_element(spacing.begin(), spacing.end());

  KktSearchResult result;
  ScoredPoint best;

  // coarse scan
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = box.lower[i] + spacing[i] * idx[i];
    if (feasible_at(cs, g, x, 0.0)) {
      ++result.feasible_points;
      double r = score_candidate(g, cs, x, spacing_max);
      if (r < best.residual) best = {r, x};
    }
    int d = 0;
    while (d < n && ++idx[d] == m) idx[d++] = 0;
    if (d == n) break;
  }
  if (result.feasible_points == 0)
    throw std::runtime_error("search budget exhausted with no feasible point");

  // local refinement, radius halving around the incumbent
  Vec rad = spacing;
  double local_spacing = spacing_max;
  for (int round = 0; round < cfg.refine_rounds; ++round) {
    const int lm = 9;
    std::vector<Vec> axes(n);
    double span_max = 0.0;
    for (int i = 0; i < n; ++i) {
      double lo = std::max(box.lower[i], best.x[i] - rad[i]);
      double hi = std::min(box.upper[i], best.x[i] + rad[i]);
      axes[i].resize(lm);
      for (int j = 0; j < lm; ++j) axes[i][j] = lo + (hi - lo) * j / (lm - 1);
      span_max = std::max(span_max, (hi - lo) / (lm - 1));
    }
    local_spacing = span_max;
    std::vector<int> li(n, 0);
    while (true) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = axes[i][li[i]];
      if (feasible_at(cs, g, x, 0.0)) {
        double r = score_candidate(g, cs, x, local_spacing);
        if (r < best.residual) best = {r, x};
      }
      int d = 0;
      while (d < n && ++li[d] == lm) li[d++] = 0;
      if (d == n) break;
    }
    for (int i = 0; i < n; ++i) rad[i] *= 0.5;
  }

  // snap the incumbent onto its nearly-active constraint boundaries
  {
    Vec h = cs.values(best.x);
    std::vector<size_t> act;
    for (size_t i = 0; i < cs.k(); ++i)
      if (h[i] >= -(3.0 * norm2(cs.gradient(i, best.x)) * local_spacing + cfg.tols.act))
        act.push_back(i);
    if (!act.empty() && act.size() <= static_cast<size_t>(n)) {
      Vec x = best.x;
      bool ok = true;
      for (int it = 0; it < 8 && ok; ++it) {
        Vec ha(act.size());
        std::vector<Vec> jac(act.size());
        double hmax = 0.0;
        for (size_t a = 0; a < act.size(); ++a) {
          ha[a] = cs.value(act[a], x);
          jac[a] = cs.gradient(act[a], x);
          hmax = std::max(hmax, std::fabs(ha[a]));
        }
        if (hmax <= 1e-13) break;
        std::vector<Vec> jjt(act.size(), Vec(act.size()));
        for (size_t a = 0; a < act.size(); ++a)
          for (size_t b = 0; b < act.size(); ++b) jjt[a][b] = dot(jac[a], jac[b]);
        Vec neg(act.size());
        for (size_t a = 0; a < act.size(); ++a) neg[a] = -ha[a];
        Vec y;
        if (!solve_dense(std::move(jjt), std::move(neg), y)) {
          ok = false;
          break;
        }
        for (int i = 0; i < n; ++i) {
          double dx = 0.0;
          for (size_t a = 0; a < act.size(); ++a) dx += jac[a][i] * y[a];
          x[i] += dx;
        }
      }
      bool in_box = true;
      for (int i = 0; i < n; ++i)
        if (x[i] < box.lower[i] || x[i] > box.upper[i]) in_box = false;
      if (ok && in_box && feasible_at(cs, g, x, cfg.tols.feas))
        best.x = x;
    }
  }

  result.certificate = kkt_verify(g, cs, best.x, cfg.tols);

  if (!result.certificate.certified) {
    // walk discrete descent on the coarse lattice: u falls along steps with
    // g . s < 0, so a stall against the box edge flags a boundary minimum.
    // Compound two-axis steps (1:1 up to 1:3) let the walk track a constraint
    // line whose staircase defeats single-axis moves.
    std::vector<Vec> moves;
    for (int i = 0; i < n; ++i)
      for (int si = -1; si <= 1; si += 2) {
        Vec mv(n, 0.0);
        mv[i] = si * spacing[i];
        moves.push_back(mv);
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          for (int sj = -1; sj <= 1; sj += 2)
            for (int k = 1; k <= 3; ++k) {
              Vec mv2 = mv;
              mv2[j] = sj * k * spacing[j];
              moves.push_back(mv2);
            }
        }
      }
    Vec cur = best.x;
    const int max_walk = 10 * m * n;
    for (int walk = 0; walk < max_walk; ++walk) {
      Vec gx = g.eval(cur);
      double best_drop = 0.0;
      Vec best_next;
      for (const Vec& mv : moves) {
        Vec nx = cur;
        double drop = 0.0;
        bool moved = false;
        for (int i = 0; i < n; ++i) {
          double v = std::clamp(cur[i] + mv[i], box.lower[i], box.upper[i]);
          drop += gx[i] * (v - cur[i]);
          if (v != cur[i]) moved = true;
          nx[i] = v;
        }
        if (!moved || drop >= best_drop) continue;
        if (!feasible_at(cs, g, nx, cfg.tols.feas)) continue;
        best_drop = drop;
        best_next = nx;
      }
      if (best_next.empty()) break;
      cur = std::move(best_next);
    }
    Vec gx = g.eval(cur);
    bool pinned = false;
    for (int i = 0; i < n && !pinned; ++i) {
      for (int s = -1; s <= 1; s += 2) {
        double next = cur[i] + s * spacing[i];
        bool off_box = next < box.lower[i] - 1e-12 || next > box.upper[i] + 1e-12;
        if (off_box && gx[i] * s < 0.0) pinned = true;
      }
    }
    if (pinned) {
      result.boundary_minimum = true;
      result.boundary_point = cur;
      result.note = "no certified minimizer in box interior; minimum attained on box boundary";
    } else {
      result.note = "no certificate at tolerance; best stationarity residual reported";
    }
  }
  return result;
}

OracleResult minimize_oracle(const ExprPtr& u, const ConstraintSet& cs, int grid_density) {
  if (!u) throw std::invalid_argument("null expression");
  if (grid_density < 2) throw std::invalid_argument("grid density must be at least 2");
  const int n = cs.n();
  const DomainBox& box = cs.box();

  OracleResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool found = false;

  auto scan = [&](const std::vector<Vec>& axes) {
    std::vector<int> id(n, 0);
    while (true) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = axes[i][id[i]];
      if (max_constraint(cs.values(x)) <= 1e-12) {
        double v = u->eval(x);
        if (std::isfinite(v) && v < best.value) {
          best.value = v;
          best.x = x;
          found = true;
        }
      }
      int d = 0;
      while (d < n && ++id[d] == static_cast<int>(axes[d].size())) id[d++] = 0;
      if (d == n) break;
    }
  };

  std::vector<Vec> axes(n);
  for (int i = 0; i < n; ++i) {
    axes[i].resize(grid_density);
    for (int j = 0; j < grid_density; ++j)
      axes[i][j] = box.lower[i] + box.width(i) * j / (grid_density - 1);
  }
  scan(axes);
  if (!found) throw std::runtime_error("no feasible grid point");

  // spacing halves each round; the window spans two cells of the previous
  // round on each side so a minimizer pinned between constraint boundaries
  // stays inside the window while the incumbent closes in
  Vec spacing(n);
  for (int i = 0; i < n; ++i) spacing[i] = box.width(i) / (grid_density - 1);
  const int lm = 9;
  for (int round = 0; round < 3; ++round) {
    std::vector<Vec> local(n);
    double cell = 0.0;
    Vec next(n);
    for (int i = 0; i < n; ++i) {
      double lo = std::max(box.lower[i], best.x[i] - 2.0 * spacing[i]);
      double hi = std::min(box.upper[i], best.x[i] + 2.0 * spacing[i]);
      local[i].resize(lm);
      for (int j = 0; j < lm; ++j) local[i][j] = lo + (hi - lo) * j / (lm - 1);
      next[i] = (hi - lo) / (lm - 1);
      cell = std::max(cell, next[i]);
    }
    scan(local);
    best.cell = cell;
    spacing = next;
  }
  return best;
}

nlohmann::json to_json(const KKTCertificate& cert) {
  nlohmann::json active = nlohmann::json::array();
  for (int a : cert.active) active.push_back(a + 1);
  return nlohmann::json{{"x", cert.xstar},
                        {"lambda", cert.lambda},
                        {"active", std::move(active)},
                        {"stationarity_residual", cert.stationarity_residual},
                        {"feasibility", cert.feasibility},
                        {"slackness", cert.slackness},
                        {"certified", cert.certified},
                        {"reason", cert.reason}};
}

nlohmann::json to_json(const KktSearchResult& result) {
  nlohmann::json j{{"certificate", to_json(result.certificate)},
                   {"feasible_points", result.feasible_points},
                   {"boundary_minimum", result.boundary_minimum},
                   {"note", result.note}};
  if (result.boundary_minimum) j["boundary_point"] = result.boundary_point;
  return j;
}

}  // namespace tde
