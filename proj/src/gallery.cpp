#include "tdekit/gallery.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tdekit/chart.hpp"
#include "tdekit/foliation.hpp"
#include "tdekit/integrability.hpp"
#include "tdekit/quasiconvex.hpp"
#include "tdekit/rng.hpp"

namespace tde {

namespace {

struct CaseDef {
  const char* name;
  std::vector<const char*> components;
  Vec lower, upper;
  const char* u;       // null when no closed form
  const char* lambda;  // null when no closed form
  Vec qc_lo, qc_hi;
  Vec center;
  ExpectedClaims expected;
};

const std::vector<CaseDef>& registry() {
  static const std::vector<CaseDef> defs = {
      {"debreu",
       {"if(x2 >= 0, x2^2/sqrt(1+x2^4), 0)", "if(x2 >= 0, 1/sqrt(1+x2^4), 1)"},
       {-2, -2},
       {2, 2},
       "if(x2 >= 0, x2/(1-x1*x2), x2)",
       "if(x2 >= 0, sqrt(1+x2^4)/(1-x1*x2)^2, 1)",
       {-0.5, -0.5},
       {0.5, 0.5},
       {0, 0},
       {true, "",
        "solutions are C1 but not C2 across x2 = 0; no twice-differentiable "
        "solution exists on any neighborhood of the origin"}},
      {"arrow_enthoven",
       {"1 + (x1+1)/sqrt((x1+1)^2 + 4*x2)", "2/sqrt((x1+1)^2 + 4*x2)"},
       {0.01, 0.01},
       {6, 6},
       "(x1 - 1) + sqrt((x1+1)^2 + 4*x2)",
       "1",
       {0.5, 0.5},
       {2, 2},
       {1, 1},
       {true, "quasi-convex via (i)",
        "level sets are straight lines; every normal solution is quasi-convex "
        "but none is convex"}},
      {"katzner",
       {"-(3*x1^2*x2 + x2^3)", "-(x1^3 + 3*x1*x2^2)"},
       {0.05, 0.05},
       {4, 4},
       "-(x1^3*x2 + x1*x2^3)",
       "1",
       {0.5, 0.5},
       {1.5, 1.5},
       {1, 1},
       {true, "strictly quasi-convex via (I)",
        "the second-order directional test has zero margin along (-1,1) at "
        "(1,1), so first-order strictness does the classifying"}},
      {"grad_product3",
       {"x2*x3", "x1*x3", "x1*x2"},
       {0.5, 0.5, 0.5},
       {2, 2, 2},
       "x1*x2*x3",
       "1",
       {0.75, 0.75, 0.75},
       {1.5, 1.5, 1.5},
       {1, 1, 1},
       {true, "", "exact gradient field of x1*x2*x3"}},
      {"contact3",
       {"x2", "-x1", "1"},
       {-1, -1, -1},
       {1, 1, 1},
       nullptr,
       nullptr,
       {-0.5, -0.5, -0.5},
       {0.5, 0.5, 0.5},
       {0, 0, 0},
       {false, "refused: integrability fails",
        "standard contact field; the cyclic compatibility residual is "
        "identically 2, so no local solution exists anywhere"}},
  };
  return defs;
}

ExampleCase make_case(const CaseDef& d) {
  std::vector<std::string> comps(d.components.begin(), d.components.end());
  FieldSpec field = FieldSpec::from_strings(comps, DomainBox{d.lower, d.upper}, d.name);
  const int n = field.n();
  ExampleCase ex{d.name,
                 std::move(field),
                 d.u ? parse_expr(d.u, n) : nullptr,
                 d.lambda ? parse_expr(d.lambda, n) : nullptr,
                 DomainBox{d.qc_lo, d.qc_hi},
                 d.center,
                 d.expected};
  ex.qc_box.validate();
  return ex;
}

// unit-vector projection residual: how far v points out of span(w)
double parallel_residual(const Vec& v, const Vec& w) {
  double nv = 0.0, nw = 0.0;
  for (double c : v) nv += c * c;
  for (double c : w) nw += c * c;
  nv = std::sqrt(nv);
  nw = std::sqrt(nw);
  if (nv == 0.0 || nw == 0.0) return 1.0;
  double d = 0.0;
  for (size_t i = 0; i < v.size(); ++i) d += (v[i] / nv) * (w[i] / nw);
  double r2 = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    double res = v[i] / nv - d * (w[i] / nw);
    r2 += res * res;
  }
  return std::sqrt(r2);
}

}  // namespace

std::vector<std::string> example_names() {
  std::vector<std::string> names;
  for (const auto& d : registry()) names.push_back(d.name);
  return names;
}

ExampleCase get_example(const std::string& name) {
  for (const auto& d : registry())
    if (name == d.name) return make_case(d);
  throw std::invalid_argument("unknown example: " + name);
}

VerifyReport verify_example(const std::string& name, const VerifyBudget& budget) {
  ExampleCase ex = get_example(name);
  VerifyReport rep;
  rep.name = name;
  char buf[200];
  auto add = [&](const char* check, bool pass, std::string detail) {
    rep.entries.push_back({check, pass, std::move(detail)});
  };

  IntegrabilityReport ir =
      check_integrability(ex.field, GridPlan{ex.field.domain(), budget.integ_grid});
  std::snprintf(buf, sizeof buf, "max residual %.6g, expected %s", ir.max_abs_residual,
                ex.expected.integrable ? "integrable" : "non-integrable");
  add("integrability", ir.pass == ex.expected.integrable, buf);

  if (ex.closed_form_u) {
    Rng rng(budget.seed);
    const int n = ex.field.n();
    double worst = 0.0;
    int used = 0;
    while (used < 50) {
      Vec x = rng.point_in(ex.qc_box);
      if (ex.field.kink_near(x, 1e-4)) continue;
      Vec grad(n);
      for (int i = 0; i < n; ++i) {
        double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        grad[i] = (ex.closed_form_u->eval(xp) - ex.closed_form_u->eval(xm)) / (2.0 * h);
      }
      worst = std::max(worst, parallel_residual(grad, ex.field.eval(x)));
      ++used;
    }
    std::snprintf(buf, sizeof buf, "worst residual %.3g over 50 points", worst);
    add("closed_form_alignment", worst <= 1e-5, buf);
  }

  if (!ir.pass) {
    add("chart", !ex.expected.integrable, "refused: integrability fails; construction skipped");
  } else {
    SolutionChart chart = build_chart(ex.field, ex.chart_center);
    std::snprintf(buf, sizeof buf, "pivot %d, sign %+d, eps %.6g, delta %.6g", chart.pivot + 1,
                  chart.sign, chart.epsilon, chart.delta);
    add("chart", true, buf);

    double level = chart.center[chart.pivot];
    ReducedGrid grid = ReducedGrid::uniform(drop_pivot(chart.center, chart.pivot),
                                            0.9 * chart.delta, budget.trace_per_dim);
    LevelSetTrace trace = trace_level_set(chart, level, grid);
    double tres = tangent_orthogonality_residual(trace);
    std::snprintf(buf, sizeof buf, "%zu failures, tangent residual %.3g", trace.failures, tres);
    add("trace", trace.failures == 0 && tres <= 1e-3, buf);

    if (ex.closed_form_u) {
      Rng rng(budget.seed + 1);
      std::vector<double> constructed, closed;
      for (int i = 0; i < budget.compare_points; ++i) {
        Vec x = chart.center;
        for (double& c : x) c += rng.uniform(-0.9 * chart.delta, 0.9 * chart.delta);
        constructed.push_back(eval_solution(chart, x).u);
        closed.push_back(ex.closed_form_u->eval(x));
      }
      ConcordanceReport cr = compare_solutions(constructed, closed);
      std::snprintf(buf, sizeof buf, "%s over %d points", to_string(cr.verdict).c_str(),
                    budget.compare_points);
      add("concordance", cr.verdict == Concordance::IncreasingTransform, buf);
    }

    Rng rng(budget.seed + 2);
    double worst = 0.0;
    int used = 0;
    while (used < 20) {
      Vec x = chart.center;
      for (double& c : x) c += rng.uniform(-0.9 * chart.delta, 0.9 * chart.delta);
      if (ex.field.kink_near(x, 1e-4)) continue;
      worst = std::max(worst, gradient_alignment_residual(chart, x));
      ++used;
    }
    std::snprintf(buf, sizeof buf, "worst residual %.3g over 20 points", worst);
    add("alignment", worst <= 1e-4, buf);
  }

  QCBundleConfig qcfg;
  qcfg.num_pairs = budget.qc_pairs;
  qcfg.seed = budget.seed;
  QCBundle bundle = qc_classify(ex.field, ex.qc_box, qcfg);
  bool qc_pass = ex.expected.qc_class.empty() ||
                 bundle.classification.find(ex.expected.qc_class) != std::string::npos;
  add("qc", qc_pass, bundle.classification);

  rep.all_pass = true;
  for (const auto& e : rep.entries)
    if (!e.pass) rep.all_pass = false;
  return rep;
}

nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries)
    entries.push_back({{"check", e.check}, {"pass", e.pass}, {"detail", e.detail}});
  return nlohmann::json{
      {"name", report.name}, {"all_pass", report.all_pass}, {"entries", std::move(entries)}};
}

}  // namespace tde
