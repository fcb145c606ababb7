#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "tdekit/gallery.hpp"
#include "tdekit/kkt.hpp"

using namespace tde;

namespace {

DomainBox box2(double lo, double hi) { return DomainBox{{lo, lo}, {hi, hi}}; }

// the half-space tangent to the surplus-style level set at (1, 1)
std::vector<std::string> tangent_constraint() {
  FieldSpec f = get_example("arrow_enthoven").field;
  Vec g = f.eval(Vec{1.0, 1.0});
  double n = std::sqrt(g[0] * g[0] + g[1] * g[1]);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.17g - %.17g*x1 - %.17g*x2", (g[0] + g[1]) / n, g[0] / n,
                g[1] / n);
  return {buf};
}

const std::vector<std::string> corner_constraints{"4 - 3*x1 - x2", "0.25 - x2"};

}  // namespace

TEST_CASE("constraint sets demand convexity and a feasible interior") {
  CHECK_THROWS_AS(ConstraintSet::from_strings({"1 - x1^2 - x2"}, box2(0.25, 3.0)),
                  std::invalid_argument);  // concave in x1

  ConstraintSet ok = ConstraintSet::from_strings({"x1 + x2 - 3"}, box2(0.5, 2.0));
  auto pt = slater_check(ok);
  REQUIRE(pt.has_value());
  CHECK((*pt)[0] == 1.25);  // the box midpoint already works
  CHECK((*pt)[1] == 1.25);

  ConstraintSet never = ConstraintSet::from_strings({"x1 + x2 - 0.5"}, box2(0.5, 2.0));
  CHECK_FALSE(slater_check(never).has_value());

  FieldSpec f = get_example("arrow_enthoven").field;
  CHECK_THROWS_WITH_AS(kkt_verify(f, never, Vec{1.0, 1.0}),
                       "constraints admit no strictly feasible point (Slater check failed)",
                       std::runtime_error);
}

TEST_CASE("non-negative least squares fits inside the cone") {
  std::vector<Vec> cols{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  Vec lam = nnls(cols, Vec{1.0, 2.0});
  REQUIRE(lam.size() == 3);
  Vec fit{0.0, 0.0};
  for (size_t j = 0; j < 3; ++j) {
    CHECK(lam[j] >= 0.0);
    fit[0] += cols[j][0] * lam[j];
    fit[1] += cols[j][1] * lam[j];
  }
  CHECK(fit[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit[1] == doctest::Approx(2.0).epsilon(1e-10));

  // a target outside the cone projects to the origin
  Vec zero = nnls({Vec{1.0, 0.0}}, Vec{-1.0, 0.0});
  CHECK(zero[0] == 0.0);
}

TEST_CASE("a tangent half-space certifies its touching point") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs = ConstraintSet::from_strings(tangent_constraint(), box2(0.25, 3.0));

  KKTCertificate at = kkt_verify(f, cs, Vec{1.0, 1.0});
  CHECK(at.certified);
  CHECK(at.reason.empty());
  REQUIRE(at.lambda.size() == 1);
  // the multiplier equals the field magnitude against the unit normal
  CHECK(at.lambda[0] == doctest::Approx(1.8477590650225735).epsilon(1e-9));
  CHECK(at.stationarity_residual <= 1e-10);
  CHECK(at.active == std::vector<int>{0});
  CHECK(std::fabs(at.slackness[0]) <= 1e-12);

  // strictly infeasible candidate
  KKTCertificate out = kkt_verify(f, cs, Vec{0.8, 0.8});
  CHECK_FALSE(out.certified);
  CHECK(out.reason == "feasibility");

  // feasible but interior: nothing to lean on
  KKTCertificate in = kkt_verify(f, cs, Vec{1.2, 1.2});
  CHECK_FALSE(in.certified);
  CHECK(in.reason == "stationarity");
  CHECK(in.stationarity_residual == doctest::Approx(1.8259674).epsilon(1e-6));

  // every point of the line is a touching point of its own level set
  KKTCertificate on = kkt_verify(f, cs, Vec{0.88519497, 1.2771639});
  CHECK(on.certified);
  CHECK(on.lambda[0] == doctest::Approx(1.7756845).epsilon(1e-6));
}

TEST_CASE("an assessment bundle can veto certification") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs = ConstraintSet::from_strings(tangent_constraint(), box2(0.25, 3.0));
  QCBundle veto;
  veto.refused = true;
  KKTCertificate cert = kkt_verify(f, cs, Vec{1.0, 1.0}, {}, &veto);
  CHECK_FALSE(cert.certified);
  CHECK(cert.reason == "quasi-convexity");

  QCBundle violated;
  violated.overall = QCVerdict::Violated;
  KKTCertificate cert2 = kkt_verify(f, cs, Vec{1.0, 1.0}, {}, &violated);
  CHECK_FALSE(cert2.certified);
  CHECK(cert2.reason == "quasi-convexity");
}

TEST_CASE("grid search pins the constrained corner exactly") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs = ConstraintSet::from_strings(corner_constraints, box2(0.25, 3.0));
  KktSearchResult res = kkt_search(f, cs);
  CHECK(res.certificate.certified);
  CHECK(res.certificate.xstar[0] == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(res.certificate.xstar[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(res.certificate.lambda[0] == doctest::Approx(0.63793718).epsilon(1e-6));
  CHECK(res.certificate.lambda[1] == doctest::Approx(0.17433975).epsilon(1e-6));
  CHECK(res.certificate.stationarity_residual <= 1e-10);
  CHECK(res.certificate.active == std::vector<int>{0, 1});
  CHECK(res.feasible_points == 3275);
  CHECK_FALSE(res.boundary_minimum);
  // both constraints are exactly tight at the corner
  CHECK(std::fabs(res.certificate.slackness[0]) <= 1e-10);
  CHECK(std::fabs(res.certificate.slackness[1]) <= 1e-10);
}

TEST_CASE("the independent grid minimizer lands next to the corner") {
  ExampleCase ex = get_example("arrow_enthoven");
  ConstraintSet cs = ConstraintSet::from_strings(corner_constraints, box2(0.25, 3.0));
  OracleResult r = minimize_oracle(ex.closed_form_u, cs);
  CHECK(r.x[0] == doctest::Approx(1.2484296).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(0.25518216).epsilon(1e-6));
  CHECK(r.value == doctest::Approx(2.7134174).epsilon(1e-6));
  CHECK(r.cell == doctest::Approx(0.001727).epsilon(1e-3));

  // the sampled minimizer passes verification once activity respects the cell
  FieldSpec f = ex.field;
  KktTolerances tols;
  tols.act = std::max(1e-6, 6.0 * r.cell);
  tols.stat = 1e-4;
  KKTCertificate cert = kkt_verify(f, cs, r.x, tols);
  CHECK(cert.certified);

  // a non-minimizing boundary point is rejected for stationarity
  KKTCertificate rej = kkt_verify(f, cs, Vec{0.8, 1.6});
  CHECK_FALSE(rej.certified);
  CHECK(rej.reason == "stationarity");
  CHECK(rej.stationarity_residual == doctest::Approx(0.11154268).epsilon(1e-6));
}

TEST_CASE("searches report boundary minima instead of fake certificates") {
  FieldSpec f = get_example("arrow_enthoven").field;

  // only the slope-3 line: the true minimum sits on the box floor
  ConstraintSet one = ConstraintSet::from_strings({"4 - 3*x1 - x2"}, box2(0.25, 3.0));
  KktSearchResult line = kkt_search(f, one);
  CHECK_FALSE(line.certificate.certified);
  CHECK(line.boundary_minimum);
  CHECK(line.boundary_point[0] == doctest::Approx(1.25).epsilon(1e-3));
  CHECK(line.boundary_point[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(line.note == "no certified minimizer in box interior; minimum attained on box boundary");

  // a steeper line pushes the minimum to the left wall
  ConstraintSet steep = ConstraintSet::from_strings({"3 - x1 - 2*x2"}, box2(0.25, 3.0));
  KktSearchResult wall = kkt_search(f, steep);
  CHECK_FALSE(wall.certificate.certified);
  CHECK(wall.boundary_minimum);
  CHECK(wall.boundary_point[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(wall.boundary_point[1] == doctest::Approx(1.375).epsilon(1e-3));

  // decreasing field: the walk climbs to the far corner and stalls there
  FieldSpec kz = get_example("katzner").field;
  ConstraintSet kcs = ConstraintSet::from_strings({"2 - x1 - x2"}, box2(0.5, 1.5));
  KktSearchResult corner = kkt_search(kz, kcs);
  CHECK_FALSE(corner.certificate.certified);
  CHECK(corner.boundary_minimum);
  CHECK(corner.boundary_point[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(corner.boundary_point[1] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("multipliers scale inversely with the constraint normalization") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs1 = ConstraintSet::from_strings(corner_constraints, box2(0.25, 3.0));
  ConstraintSet cs2 = ConstraintSet::from_strings({"8 - 6*x1 - 2*x2", "0.5 - 2*x2"},
                                                  box2(0.25, 3.0));
  KKTCertificate a = kkt_verify(f, cs1, Vec{1.25, 0.25});
  KKTCertificate b = kkt_verify(f, cs2, Vec{1.25, 0.25});
  REQUIRE(a.certified);
  REQUIRE(b.certified);
  CHECK(b.lambda[0] == doctest::Approx(0.5 * a.lambda[0]).epsilon(1e-9));
  CHECK(b.lambda[1] == doctest::Approx(0.5 * a.lambda[1]).epsilon(1e-9));
}

TEST_CASE("searching is deterministic") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs = ConstraintSet::from_strings(corner_constraints, box2(0.25, 3.0));
  KktSearchResult a = kkt_search(f, cs);
  KktSearchResult b = kkt_search(f, cs);
  CHECK(a.certificate.xstar == b.certificate.xstar);
  CHECK(a.certificate.lambda == b.certificate.lambda);
  CHECK(a.feasible_points == b.feasible_points);
}

TEST_CASE("the sampled minimizer honors plain bound constraints") {
  ConstraintSet cs = ConstraintSet::from_strings({"x1 - 10"}, box2(0.0, 2.0));
  ExprPtr u = parse_expr("(x1-1)^2 + (x2-1)^2", 2);
  OracleResult r = minimize_oracle(u, cs);
  CHECK(std::fabs(r.x[0] - 1.0) <= 2.0 * r.cell);
  CHECK(std::fabs(r.x[1] - 1.0) <= 2.0 * r.cell);
  CHECK(r.value <= 1e-4);

  ConstraintSet never = ConstraintSet::from_strings({"x1 + x2 - 0.5"}, box2(0.5, 2.0));
  CHECK_THROWS_WITH_AS(minimize_oracle(u, never), "no feasible grid point",
                       std::runtime_error);
}

TEST_CASE("certificates serialize with one-based active indices") {
  FieldSpec f = get_example("arrow_enthoven").field;
  ConstraintSet cs = ConstraintSet::from_strings(corner_constraints, box2(0.25, 3.0));
  KktSearchResult res = kkt_search(f, cs);
  nlohmann::json j = to_json(res);
  CHECK(j["certificate"]["certified"] == true);
  CHECK(j["certificate"]["active"][0] == 1);
  CHECK(j["certificate"]["active"][1] == 2);
  CHECK(j["feasible_points"] == 3275);
  CHECK(j["boundary_minimum"] == false);
}
