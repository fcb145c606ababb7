#include <doctest.h>

#include <cmath>

#include "tdekit/chart.hpp"
#include "tdekit/gallery.hpp"
#include "tdekit/rng.hpp"

using namespace tde;

namespace {

// solve h^3 + h = p by Newton; the cubic is strictly increasing
double cubic_root(double p) {
  double h = p;
  for (int k = 0; k < 60; ++k) {
    double f = h * h * h + h - p;
    h -= f / (3.0 * h * h + 1.0);
  }
  return h;
}

}  // namespace

TEST_CASE("hyperbolic-level chart parameters and values") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  CHECK(chart.pivot == 1);
  CHECK(chart.sign == 1);
  CHECK(chart.epsilon == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chart.delta == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(chart.lipschitz == doctest::Approx(2.1875).epsilon(1e-12));
  CHECK(chart.z_lo == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(chart.z_hi == doctest::Approx(1.0).epsilon(1e-12));

  // upper branch follows x2/(1 - x1 x2), lower branch is flat
  SolutionValue up = eval_solution(chart, Vec{0.05, 0.03});
  CHECK(up.u == doctest::Approx(0.03 / 0.9985).epsilon(1e-8));
  SolutionValue down = eval_solution(chart, Vec{0.05, -0.03});
  CHECK(down.u == doctest::Approx(-0.03).epsilon(1e-8));
  CHECK(std::fabs(up.residual) <= 1e-9);

  // level graph through seed z: x2 = z / (1 + x1 z)
  CHECK(eval_level_fn(chart, 0.5, Vec{0.5}) == doctest::Approx(0.4).epsilon(1e-8));
  CHECK(eval_level_fn(chart, 0.5, Vec{0.2}) == doctest::Approx(0.5 / 1.1).epsilon(1e-8));

  CHECK_THROWS_AS(eval_solution(chart, Vec{0.5, 0.5}), std::runtime_error);
}

TEST_CASE("surplus-style chart reproduces the closed solution") {
  ExampleCase ex = get_example("arrow_enthoven");
  Vec g = ex.field.eval(Vec{1.0, 1.0});
  CHECK(g[0] == doctest::Approx(1.0 + 1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  SolutionChart chart = build_chart(ex.field, Vec{1.0, 1.0});
  CHECK(chart.pivot == 0);
  CHECK(chart.sign == 1);
  CHECK(chart.epsilon == doctest::Approx(0.495).epsilon(1e-12));
  CHECK(chart.delta == doctest::Approx(0.061875).epsilon(1e-12));
  CHECK(chart.lipschitz == doctest::Approx(1.5).epsilon(1e-12));

  // exact along the pivot axis through the center
  CHECK(eval_solution(chart, Vec{1.03, 1.0}).u == doctest::Approx(1.03).epsilon(1e-9));

  // off axis the chart value is a fixed monotone remap of the closed solution:
  // u_chart = ((c + 1)^2 - 5) / (2 (c + 2)) with c the closed-form value
  Vec x{1.01, 1.02};
  double c = (x[0] - 1.0) + std::sqrt((x[0] + 1.0) * (x[0] + 1.0) + 4.0 * x[1]);
  double expect = ((c + 1.0) * (c + 1.0) - 5.0) / (2.0 * (c + 2.0));
  CHECK(eval_solution(chart, x).u == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("odd-cubic chart flips orientation and scales the multiplier") {
  ExampleCase ex = get_example("katzner");
  SolutionChart chart = build_chart(ex.field, Vec{1.0, 1.0});
  CHECK(chart.pivot == 0);
  CHECK(chart.sign == -1);
  CHECK(chart.epsilon == doctest::Approx(0.11875).epsilon(1e-12));
  CHECK(chart.delta == doctest::Approx(0.007421875).epsilon(1e-12));
  CHECK(chart.z_lo == doctest::Approx(0.88125).epsilon(1e-12));
  CHECK(chart.z_hi == doctest::Approx(1.11875).epsilon(1e-12));

  // u_chart = 2 - h where h^3 + h = x1^3 x2 + x1 x2^3
  Vec x{0.999, 1.004};
  double p = x[0] * x[0] * x[0] * x[1] + x[0] * x[1] * x[1] * x[1];
  double expect = 2.0 - cubic_root(p);
  CHECK(eval_solution(chart, x).u == doctest::Approx(expect).epsilon(1e-7));

  // du/dx_pivot / g_pivot at the center
  CHECK(recover_lambda(chart, Vec{1.0, 1.0}) == doctest::Approx(0.25).epsilon(1e-5));
}

TEST_CASE("three-dimensional gradient chart recovers the product") {
  ExampleCase ex = get_example("grad_product3");
  SolutionChart chart = build_chart(ex.field, Vec{1.0, 1.0, 1.0});
  CHECK(chart.pivot == 0);
  CHECK(chart.sign == 1);
  CHECK(chart.epsilon == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(chart.delta == doctest::Approx(0.0078125).epsilon(1e-12));
  CHECK(chart.lipschitz == doctest::Approx(3.110463165).epsilon(1e-6));

  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = 1.0 + 0.9 * chart.delta * (2.0 * rng.uniform() - 1.0);
    CHECK(eval_solution(chart, x).u ==
          doctest::Approx(x[0] * x[1] * x[2]).epsilon(1e-7));
  }
}

TEST_CASE("negating the field flips the chart orientation only") {
  ExampleCase ex = get_example("arrow_enthoven");
  FieldSpec neg = FieldSpec::from_strings(
      {"-(1 + (x1+1)/sqrt((x1+1)^2 + 4*x2))", "-(2/sqrt((x1+1)^2 + 4*x2))"},
      ex.field.domain());
  SolutionChart plus = build_chart(ex.field, Vec{1.0, 1.0});
  SolutionChart minus = build_chart(neg, Vec{1.0, 1.0});
  CHECK(plus.sign == 1);
  CHECK(minus.sign == -1);
  CHECK(minus.delta == doctest::Approx(plus.delta).epsilon(1e-12));
  // same foliation, reversed value: u_minus = 2 * center_pivot - u_plus
  Vec x{1.01, 1.02};
  CHECK(eval_solution(minus, x).u ==
        doctest::Approx(2.0 - eval_solution(plus, x).u).epsilon(1e-7));
}

TEST_CASE("recovered multiplier matches the closed form") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  // lambda = sqrt(1+x2^4)/(1-x1 x2)^2 on the upper branch
  Vec x{0.02, 0.03};
  double lam = std::sqrt(1.0 + std::pow(x[1], 4)) / std::pow(1.0 - x[0] * x[1], 2);
  CHECK(recover_lambda(chart, x) == doctest::Approx(lam).epsilon(1e-4));
  CHECK(ex.closed_form_lambda->eval(Vec{0.1, 0.2}) ==
        doctest::Approx(std::sqrt(1.0016) / 0.9604).epsilon(1e-12));
}

TEST_CASE("constructed gradients stay parallel to the field") {
  for (const char* name : {"debreu", "arrow_enthoven", "katzner", "grad_product3"}) {
    ExampleCase ex = get_example(name);
    SolutionChart chart = build_chart(ex.field, ex.chart_center);
    Rng rng(31);
    for (int k = 0; k < 10; ++k) {
      Vec x = chart.center;
      for (size_t i = 0; i < x.size(); ++i)
        x[i] += 0.9 * chart.delta * (2.0 * rng.uniform() - 1.0);
      if (ex.field.kink_near(x, 1e-3)) continue;
      CHECK(gradient_alignment_residual(chart, x) <= 1e-4);
    }
  }
}

TEST_CASE("chart serialization carries the construction parameters") {
  ExampleCase ex = get_example("debreu");
  SolutionChart chart = build_chart(ex.field, Vec{0.0, 0.0});
  nlohmann::json j = chart_to_json(chart);
  CHECK(j["pivot"] == 2);  // reported one-based
  CHECK(j["sign"] == 1);
  CHECK(j["n"] == 2);
  CHECK(j["delta"] == doctest::Approx(0.0625));
  CHECK(j["seed_range"][0] == doctest::Approx(-1.0));
  CHECK(j["seed_range"][1] == doctest::Approx(1.0));
}

TEST_CASE("chart construction validates its center") {
  ExampleCase ex = get_example("debreu");
  CHECK_THROWS_AS(build_chart(ex.field, Vec{0.0}), std::invalid_argument);
  CHECK_THROWS(build_chart(ex.field, Vec{5.0, 5.0}));  // outside the domain
}
