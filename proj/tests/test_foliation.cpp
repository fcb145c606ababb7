#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tdekit/foliation.hpp"
#include "tdekit/gallery.hpp"
#include "tdekit/rng.hpp"

using namespace tde;

TEST_CASE("reduced grid enumerates axis-0-fastest") {
  ReducedGrid g = ReducedGrid::uniform(Vec{0.0, 10.0}, 1.0, 3);
  CHECK(g.size() == 9);
  CHECK(g.point(0) == Vec{-1.0, 9.0});
  CHECK(g.point(1) == Vec{0.0, 9.0});
  CHECK(g.point(3) == Vec{-1.0, 10.0});
  CHECK(g.point(8) == Vec{1.0, 11.0});
}

TEST_CASE("traced level sets follow the closed-form graph") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  double z = 0.03;  // sign is +1, so the level value equals the raw seed
  ReducedGrid grid = ReducedGrid::uniform(Vec{0.0}, 0.9 * chart.delta, 7);
  LevelSetTrace trace = trace_level_set(chart, z, grid);
  CHECK(trace.failures == 0);
  CHECK(trace.points.size() == 7);
  for (size_t k = 0; k < trace.points.size(); ++k) {
    const TracePoint& pt = trace.points[k];
    REQUIRE(pt.ok);
    double x1 = pt.xtilde[0];
    CHECK(pt.height == doctest::Approx(z / (1.0 + x1 * z)).epsilon(1e-8));
    Vec full = trace.lifted(k);
    CHECK(full[0] == x1);
    CHECK(full[1] == pt.height);
  }
  CHECK(tangent_orthogonality_residual(trace) <= 1e-3);
}

TEST_CASE("level traces refuse seeds outside the bracket") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  ReducedGrid grid = ReducedGrid::uniform(Vec{0.0}, 0.9 * chart.delta, 3);
  CHECK_THROWS_AS(trace_level_set(chart, 5.0, grid), std::runtime_error);
}

TEST_CASE("sections along the field are monotone") {
  ExampleCase ex = get_example("arrow_enthoven");
  SolutionChart chart = build_chart(ex.field, Vec{1.0, 1.0});
  double t1 = 0.5 * chart.delta;
  SectionReport inc = monotone_section(chart, Vec{1.0, 1.0}, Vec{1.0, 0.0}, -t1, t1);
  CHECK(inc.verdict == SectionVerdict::Increasing);
  CHECK(inc.values.size() == inc.ts.size());
  SectionReport dec = monotone_section(chart, Vec{1.0, 1.0}, Vec{-1.0, 0.0}, -t1, t1);
  CHECK(dec.verdict == SectionVerdict::Decreasing);

  // tangent direction: g . v = 0 kills the precondition
  Vec g = ex.field.eval(Vec{1.0, 1.0});
  SectionReport flat = monotone_section(chart, Vec{1.0, 1.0}, Vec{g[1], -g[0]}, -t1, t1);
  CHECK(flat.verdict == SectionVerdict::PreconditionFailed);
}

TEST_CASE("order concordance detects increasing and decreasing remaps") {
  std::vector<double> a{0.0, 1.0, 2.0, 3.0};
  std::vector<double> inc{-5.0, -2.0, 0.5, 9.0};
  std::vector<double> dec{5.0, 2.0, -0.5, -9.0};
  std::vector<double> mixed{0.0, 2.0, 1.0, 3.0};
  CHECK(compare_solutions(a, inc).verdict == Concordance::IncreasingTransform);
  CHECK(compare_solutions(a, dec).verdict == Concordance::DecreasingTransform);
  ConcordanceReport bad = compare_solutions(a, mixed);
  CHECK(bad.verdict == Concordance::NotMonotone);
  // scan stops at the first discordant pair: (2,3) one-based, after 4 comparisons
  CHECK(bad.witness == std::make_pair(2, 3));
  CHECK(bad.compared_pairs == 4);
}

TEST_CASE("chart values and the closed solution are order-concordant") {
  for (const char* name : {"debreu", "arrow_enthoven", "katzner"}) {
    ExampleCase ex = get_example(name);
    SolutionChart chart = build_chart(ex.field, ex.chart_center);
    Rng rng(17);
    std::vector<double> ours, closed;
    for (int k = 0; k < 60; ++k) {
      Vec x = chart.center;
      for (size_t i = 0; i < x.size(); ++i)
        x[i] += 0.9 * chart.delta * (2.0 * rng.uniform() - 1.0);
      ours.push_back(eval_solution(chart, x).u);
      closed.push_back(ex.closed_form_u->eval(x));
    }
    CHECK(compare_solutions(ours, closed).verdict == Concordance::IncreasingTransform);
  }
}

TEST_CASE("CSV and SVG exports carry the sampled manifolds") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  ReducedGrid grid = ReducedGrid::uniform(Vec{0.0}, 0.9 * chart.delta, 5);
  LevelSetTrace t1 = trace_level_set(chart, 0.02, grid);
  LevelSetTrace t2 = trace_level_set(chart, -0.02, grid);

  std::string csv = trace_to_csv(t1);
  CHECK(csv.rfind("level,x1,x2,ok,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows

  std::string svg = traces_to_svg({t1, t2});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);

  ExampleCase gp = get_example("grad_product3");
  SolutionChart c3 = build_chart(gp.field, Vec{1.0, 1.0, 1.0});
  ReducedGrid g3 = ReducedGrid::uniform(Vec{1.0, 1.0}, 0.5 * c3.delta, 3);
  LevelSetTrace t3 = trace_level_set(c3, 1.0, g3);
  CHECK_THROWS_AS(traces_to_svg({t3}), std::runtime_error);

  nlohmann::json j = trace_to_json(t1);
  CHECK(j["level"] == doctest::Approx(0.02));
  CHECK(j["failures"] == 0);
  CHECK(j["points"].size() == 5);
}

TEST_CASE("solution values are stable under seed perturbations of the pivot") {
  // same reduced point, two pivot heights: |u(x~, a) - u(x~, b)| <= 2 |a - b|
  for (const char* name : {"debreu", "arrow_enthoven"}) {
    ExampleCase ex = get_example(name);
    SolutionChart chart = build_chart(ex.field, ex.chart_center);
    Rng rng(23);
    for (int k = 0; k < 50; ++k) {
      Vec x = chart.center;
      for (size_t i = 0; i < x.size(); ++i)
        x[i] += 0.8 * chart.delta * (2.0 * rng.uniform() - 1.0);
      Vec y = x;
      y[chart.pivot] =
          chart.center[chart.pivot] + 0.8 * chart.delta * (2.0 * rng.uniform() - 1.0);
      double du = std::fabs(eval_solution(chart, x).u - eval_solution(chart, y).u);
      CHECK(du <= 2.0 * std::fabs(x[chart.pivot] - y[chart.pivot]) + 1e-8);
    }
  }
}
