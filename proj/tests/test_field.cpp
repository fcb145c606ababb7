#include <doctest.h>

#include <cmath>

#include "tdekit/field.hpp"
#include "tdekit/rng.hpp"

using namespace tde;

namespace {
DomainBox box2(double lo, double hi) { return DomainBox{{lo, lo}, {hi, hi}}; }
}  // namespace

TEST_CASE("expression parser evaluates and differentiates") {
  ExprPtr e = parse_expr("x1^2 * sqrt(x2) + min(x1, 2)", 2);
  Vec x{1.5, 4.0};
  CHECK(e->eval(x) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(e->diff(0)->eval(x) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(e->diff(1)->eval(x) == doctest::Approx(0.5625).epsilon(1e-12));

  ExprPtr cond = parse_expr("if(x2 >= 0, x2^2/sqrt(1+x2^4), 0)", 2);
  CHECK(cond->eval(Vec{0.0, 1.0}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(cond->eval(Vec{0.0, -1.0}) == 0.0);
}

TEST_CASE("parser rejects malformed input with a position") {
  CHECK_THROWS_AS(parse_expr("x1 + ", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("x3", 2), ParseError);  // out-of-range variable
  CHECK_THROWS_AS(parse_expr("foo(x1)", 2), ParseError);
}

TEST_CASE("field JSON round trip preserves values") {
  FieldSpec f = FieldSpec::from_strings(
      {"1 + (x1+1)/sqrt((x1+1)^2 + 4*x2)", "2/sqrt((x1+1)^2 + 4*x2)"}, box2(0.01, 6.0),
      "roundtrip");
  FieldSpec g = FieldSpec::from_json_text(f.to_json_text());
  CHECK(g.name() == "roundtrip");
  CHECK(g.n() == 2);
  Rng rng(42);
  for (int k = 0; k < 20; ++k) {
    Vec x = rng.point_in(f.domain());
    Vec a = f.eval(x), b = g.eval(x);
    for (int i = 0; i < 2; ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("field eval guards domain and zeros") {
  FieldSpec f = FieldSpec::from_strings({"x1", "x2"}, box2(-1.0, 1.0));
  CHECK_THROWS(f.eval(Vec{2.0, 0.0}));   // outside the domain
  CHECK_THROWS(f.eval(Vec{0.0, 0.0}));   // vanishing field value
  Vec v = f.eval(Vec{0.5, -0.25});
  CHECK(v[0] == 0.5);
  CHECK(v[1] == -0.25);
}

TEST_CASE("symbolic jacobian matches central differences at second order") {
  FieldSpec f = FieldSpec::from_strings({"x1^3 * x2", "x1 / (1 + x2^2)"}, box2(0.1, 2.0));
  Vec x{1.3, 0.7};
  auto exact = f.jacobian(x);
  // central differences converge at O(h^2): halving h divides the error by ~4
  auto err = [&](double h) {
    auto fd = f.jacobian(x, DerivMode::CentralFd, h);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) worst = std::max(worst, std::fabs(fd[i][j] - exact[i][j]));
    return worst;
  };
  double ratio = err(2e-3) / err(1e-3);
  CHECK(ratio >= 2.67);
  CHECK(ratio <= 6.0);
}

TEST_CASE("jacobian is reported symmetric for gradient fields") {
  FieldSpec f = FieldSpec::from_strings({"x2*x3", "x1*x3", "x1*x2"},
                                        DomainBox{{0.5, 0.5, 0.5}, {2.0, 2.0, 2.0}});
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    Vec x = rng.point_in(f.domain());
    auto J = f.jacobian(x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::fabs(J[i][j] - J[j][i]) <= 1e-12);
  }
}

TEST_CASE("kink detection flags branch boundaries only") {
  FieldSpec f = FieldSpec::from_strings(
      {"if(x2 >= 0, x2^2/sqrt(1+x2^4), 0)", "if(x2 >= 0, 1/sqrt(1+x2^4), 1)"}, box2(-2.0, 2.0));
  CHECK(f.kink_near(Vec{0.5, 0.0}));
  CHECK(f.kink_near(Vec{0.5, 1e-12}));
  CHECK_FALSE(f.kink_near(Vec{0.5, 0.5}));
  CHECK_FALSE(f.kink_near(Vec{-1.0, -0.5}));
}

TEST_CASE("domain box validation") {
  DomainBox bad{{0.0, 1.0}, {1.0, 0.5}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  DomainBox ok = box2(0.0, 1.0);
  ok.validate();
  CHECK(ok.dim() == 2);
  CHECK(ok.min_width() == 1.0);
}

TEST_CASE("seeded rng reproduces its sequence") {
  Rng a(7), b(7);
  for (int k = 0; k < 100; ++k) {
    double ua = a.uniform(), ub = b.uniform();
    CHECK(ua == ub);
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
  }
  Rng c(8);
  CHECK(Rng(7).uniform() != c.uniform());
}
