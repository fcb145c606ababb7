#include "tdekit/quasiconvex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tdekit/integrability.hpp"
#include "tdekit/rng.hpp"

namespace tde {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

void require_box_in_domain(const FieldSpec& spec, const DomainBox& box) {
  box.validate();
  if (box.dim() != spec.n()) throw std::invalid_argument("box dimension mismatch");
  const DomainBox& dom = spec.domain();
  for (int i = 0; i < box.dim(); ++i)
    if (box.lower[i] <= dom.lower[i] || box.upper[i] >= dom.upper[i])
      throw std::invalid_argument("sampling box must sit strictly inside the field domain");
}

std::string fmt_point(const Vec& v) {
  std::string s = "(";
  char buf[40];
  for (size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%g", v[i]);
    if (i) s += ',';
    s += buf;
  }
  return s + ")";
}

// direction orthogonal to g at x: rotate for n=2, else project out the g
// component from the axis g is flattest along
Vec tangent_direction(const Vec& g) {
  const size_t n = g.size();
  if (n == 2) return {-g[1], g[0]};
  size_t j = 0;
  for (size_t i = 1; i < n; ++i)
    if (std::fabs(g[i]) < std::fabs(g[j])) j = i;
  double g2 = dot(g, g);
  Vec v(n, 0.0);
  v[j] = 1.0;
  for (int pass = 0; pass < 2; ++pass) {
    double c = dot(v, g) / g2;
    for (size_t i = 0; i < n; ++i) v[i] -= c * g[i];
  }
  return v;
}

}  // namespace

std::string to_string(QCVerdict v) {
  switch (v) {
    case QCVerdict::Holds: return "holds";
    case QCVerdict::Violated: return "violated";
    case QCVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::string to_string(LimsupClass c) {
  switch (c) {
    case LimsupClass::Positive: return "positive";
    case LimsupClass::NonNegative: return "nonneg";
    case LimsupClass::Negative: return "negative";
    case LimsupClass::ZeroMargin: return "zero-margin";
  }
  return "?";
}

PairwiseReport pairwise_condition(const FieldSpec& spec, const DomainBox& box, size_t num_pairs,
                                  bool strict, std::uint64_t seed) {
  require_box_in_domain(spec, box);
  if (num_pairs < 1) throw std::invalid_argument("need at least one pair");
  const int n = spec.n();
  const double diam = box.diameter();
  double wmax = 0.0;
  for (int i = 0; i < n; ++i) wmax = std::max(wmax, box.width(i));

  Rng rng(seed);
  PairwiseReport rep;
  rep.strict = strict;
  rep.num_pairs = num_pairs;
  rep.worst_conclusion = -std::numeric_limits<double>::infinity();

  for (size_t p = 0; p < num_pairs; ++p) {
    Vec x = rng.point_in(box);
    Vec y = rng.point_in(box);
    Vec gx = spec.eval(x);
    // odd pairs: project y onto the hyperplane g(x).(y-x)=0 through x, where
    // the hypothesis is tight, then jitter off it
    if (p % 2 == 1) {
      double g2 = dot(gx, gx);
      double c = (dot(gx, y) - dot(gx, x)) / g2;
      Vec proj(n);
      bool inside = true;
      for (int i = 0; i < n; ++i) {
        proj[i] = y[i] - c * gx[i] + (rng.uniform() - 0.5) * 2e-10 * wmax;
        if (proj[i] <= box.lower[i] || proj[i] >= box.upper[i]) inside = false;
      }
      if (inside) y = std::move(proj);
    }

    double dxy = 0.0;
    for (int i = 0; i < n; ++i) dxy = std::max(dxy, std::fabs(x[i] - y[i]));
    if (dxy <= 1e-12 * (1.0 + diam)) continue;  // x == y tells nothing

    Vec ymx(n), xmy(n);
    for (int i = 0; i < n; ++i) {
      ymx[i] = y[i] - x[i];
      xmy[i] = -ymx[i];
    }
    const double slack_x = 1e-9 * (1.0 + norm2(gx) * diam);
    const double hyp = dot(gx, ymx);
    if (hyp < -slack_x) continue;

    ++rep.hypothesis_pairs;
    Vec gy = spec.eval(y);
    const double concl = dot(gy, xmy);
    const double scale_y = 1.0 + norm2(gy) * diam;
    rep.worst_conclusion = std::max(rep.worst_conclusion, concl);

    bool violated;
    if (strict) {
      const double margin = 1e-8 * scale_y;
      if (concl > margin) {
        violated = true;
      } else if (concl >= -margin) {
        ++rep.zero_band;
        continue;
      } else {
        violated = false;
      }
    } else {
      violated = concl > 1e-9 * scale_y;
    }
    if (violated) {
      ++rep.violations;
      if (rep.witnesses.size() < 16) rep.witnesses.push_back({x, y, hyp, concl});
    }
  }

  if (rep.violations > 0) {
    rep.verdict = QCVerdict::Violated;
  } else if (!strict) {
    rep.verdict = QCVerdict::Holds;
  } else {
    // a heavy zero band means strictness is numerically undecidable here
    const double frac =
        rep.hypothesis_pairs ? double(rep.zero_band) / double(rep.hypothesis_pairs) : 1.0;
    rep.verdict = frac <= 0.05 ? QCVerdict::Holds : QCVerdict::Inconclusive;
  }
  return rep;
}

LimsupReport directional_limsup(const FieldSpec& spec, const Vec& x, const Vec& v,
                                std::vector<double> t_seq, double zero_tol) {
  if (x.size() != v.size() || static_cast<int>(x.size()) != spec.n())
    throw std::invalid_argument("point or direction dimension mismatch");
  Vec g = spec.eval(x);
  const double gn = norm2(g), vn = norm2(v);
  if (vn == 0.0) throw std::invalid_argument("zero direction");
  if (std::fabs(dot(g, v)) > 1e-8 * gn * vn)
    throw std::runtime_error("direction is not tangent: g(x).v != 0");

  if (t_seq.empty())
    for (int k = 4; k <= 20; ++k) t_seq.push_back(std::ldexp(1.0, -k));
  std::sort(t_seq.begin(), t_seq.end(), std::greater<>());

  LimsupReport rep;
  rep.ts = t_seq;
  rep.values.reserve(t_seq.size());
  const int n = spec.n();
  for (double t : t_seq) {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = x[i] + t * v[i];
    rep.values.push_back(dot(v, spec.eval(p)) / t);
  }

  const size_t tail = std::min<size_t>(5, rep.values.size());
  double mx = -std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  for (size_t i = rep.values.size() - tail; i < rep.values.size(); ++i) {
    mx = std::max(mx, rep.values[i]);
    mn = std::min(mn, rep.values[i]);
  }
  rep.estimate = mx;
  rep.margin = mx - mn;
  if (rep.estimate > zero_tol)
    rep.cls = rep.margin <= std::max(0.5 * rep.estimate, zero_tol) ? LimsupClass::Positive
                                                                   : LimsupClass::NonNegative;
  else if (rep.estimate < -zero_tol)
    rep.cls = LimsupClass::Negative;
  else
    rep.cls = LimsupClass::ZeroMargin;
  return rep;
}

QCBundle qc_classify(const FieldSpec& spec, const DomainBox& box, const QCBundleConfig& cfg) {
  require_box_in_domain(spec, box);
  QCBundle bundle;

  if (!cfg.waive_integrability) {
    IntegrabilityReport integ =
        check_integrability(spec, GridPlan{box, cfg.integrability_grid}, cfg.integrability_tol);
    bundle.integrability_residual = integ.max_abs_residual;
    if (!integ.pass) {
      bundle.refused = true;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", integ.max_abs_residual);
      bundle.classification =
          std::string("refused: integrability fails (max residual ") + buf + ")";
      bundle.overall = QCVerdict::Inconclusive;
      return bundle;
    }
  }

  bundle.plain = pairwise_condition(spec, box, cfg.num_pairs, false, cfg.seed);
  bundle.strict = pairwise_condition(spec, box, cfg.num_pairs, true, cfg.seed + 1);

  // directional probes at the box midpoint first (deterministic anchor), then
  // at sampled points, each along a tangent direction
  const int n = spec.n();
  Rng rng(cfg.seed + 2);
  std::vector<Vec> probe_pts;
  Vec mid(n);
  for (int i = 0; i < n; ++i) mid[i] = 0.5 * (box.lower[i] + box.upper[i]);
  probe_pts.push_back(mid);
  while (probe_pts.size() < std::max<size_t>(cfg.limsup_points, 1))
    probe_pts.push_back(rng.point_in(box));

  for (const Vec& x : probe_pts) {
    try {
      Vec g = spec.eval(x);
      Vec v = tangent_direction(g);
      LimsupReport lr = directional_limsup(spec, x, v);
      bundle.limsup.push_back({x, v, std::move(lr)});
    } catch (const std::exception&) {
      continue;  // probe segment left the domain or direction degenerated
    }
  }

  if (bundle.plain.verdict == QCVerdict::Violated) {
    bundle.overall = QCVerdict::Violated;
    bundle.classification = "not quasi-convex: pairwise condition violated at " +
                            fmt_point(bundle.plain.witnesses[0].x) + "," +
                            fmt_point(bundle.plain.witnesses[0].y);
    return bundle;
  }

  size_t positives = 0;
  const LimsupSample* zero_witness = nullptr;
  const LimsupSample* negative_witness = nullptr;
  for (const auto& s : bundle.limsup) {
    if (s.report.cls == LimsupClass::Positive) ++positives;
    if (s.report.cls == LimsupClass::ZeroMargin && !zero_witness) zero_witness = &s;
    if (s.report.cls == LimsupClass::Negative && !negative_witness) negative_witness = &s;
  }

  if (bundle.strict.verdict == QCVerdict::Holds) {
    if (negative_witness) {
      bundle.overall = QCVerdict::Inconclusive;
      bundle.classification =
          "inconclusive: strict pairwise holds but a directional estimate is negative at " +
          fmt_point(negative_witness->x);
      return bundle;
    }
    bundle.overall = QCVerdict::Holds;
    if (!bundle.limsup.empty() && positives == bundle.limsup.size()) {
      bundle.classification = "strictly quasi-convex via (II)";
    } else if (zero_witness) {
      // canonical direction: last nonzero coordinate positive, sup-norm 1
      Vec v = zero_witness->v;
      double mx = 0.0;
      for (double c : v) mx = std::max(mx, std::fabs(c));
      double flip = 1.0;
      for (size_t i = v.size(); i-- > 0;)
        if (v[i] != 0.0) {
          flip = v[i] > 0 ? 1.0 : -1.0;
          break;
        }
      for (double& c : v) c *= flip / mx;
      bundle.classification = "strictly quasi-convex via (I); (II) zero-margin at (" +
                              fmt_point(zero_witness->x) + "," + fmt_point(v) + ")";
    } else {
      bundle.classification = "strictly quasi-convex via (I)";
    }
    return bundle;
  }

  bundle.overall = QCVerdict::Holds;
  bundle.classification = "quasi-convex via (i); strictness inconclusive at sampling resolution";
  return bundle;
}

BruteReport quasiconvexity_bruteforce(const ExprPtr& u, const DomainBox& box, size_t num_triples,
                                      bool strict, std::uint64_t seed) {
  if (!u) throw std::invalid_argument("null expression");
  box.validate();
  const int n = box.dim();
  if (u->max_var() >= n) throw std::invalid_argument("expression uses more variables than the box has");

  Rng rng(seed);
  BruteReport rep;
  rep.strict = strict;
  rep.num_triples = num_triples;
  double wmax = 0.0;
  for (int i = 0; i < n; ++i) wmax = std::max(wmax, box.width(i));

  for (size_t k = 0; k < num_triples; ++k) {
    Vec x = rng.point_in(box);
    Vec y = rng.point_in(box);
    double t = rng.uniform();
    double dxy = 0.0;
    Vec mid(n);
    for (int i = 0; i < n; ++i) {
      mid[i] = (1.0 - t) * x[i] + t * y[i];
      dxy = std::max(dxy, std::fabs(x[i] - y[i]));
    }
    double ux = u->eval(x), uy = u->eval(y);
    double rhs = std::max(ux, uy);
    double lhs = u->eval(mid);
    if (!std::isfinite(lhs) || !std::isfinite(rhs))
      throw std::runtime_error("expression not finite on the box");
    const double tol = 1e-12 * (1.0 + std::fabs(rhs));
    bool bad;
    if (strict) {
      if (dxy <= 1e-9 * wmax || t <= 1e-12 || t >= 1.0 - 1e-12) continue;
      bad = lhs >= rhs - tol;
    } else {
      bad = lhs > rhs + tol;
    }
    if (bad) {
      rep.verdict = QCVerdict::Violated;
      rep.witness = BruteTriple{x, y, t, lhs, rhs};
      return rep;
    }
  }
  rep.verdict = QCVerdict::Holds;
  return rep;
}

nlohmann::json to_json(const QCBundle& bundle) {
  auto pair_json = [](const PairwiseReport& r) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& pw : r.witnesses)
      w.push_back({{"x", pw.x},
                   {"y", pw.y},
                   {"hypothesis", pw.hypothesis},
                   {"conclusion", pw.conclusion}});
    return nlohmann::json{{"strict", r.strict},
                          {"verdict", to_string(r.verdict)},
                          {"num_pairs", r.num_pairs},
                          {"hypothesis_pairs", r.hypothesis_pairs},
                          {"violations", r.violations},
                          {"zero_band", r.zero_band},
                          {"witnesses", std::move(w)}};
  };
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& s : bundle.limsup)
    ls.push_back({{"x", s.x},
                  {"v", s.v},
                  {"estimate", s.report.estimate},
                  {"margin", s.report.margin},
                  {"class", to_string(s.report.cls)}});
  nlohmann::json j{{"refused", bundle.refused},
                   {"classification", bundle.classification},
                   {"overall", to_string(bundle.overall)},
                   {"integrability_residual", bundle.integrability_residual}};
  if (!bundle.refused) {
    j["pairwise"] = pair_json(bundle.plain);
    j["pairwise_strict"] = pair_json(bundle.strict);
    j["directional"] = std::move(ls);
  }
  return j;
}

}  // namespace tde
