#include <doctest.h>

#include <cmath>

#include "tdekit/gallery.hpp"
#include "tdekit/quasiconvex.hpp"

using namespace tde;

namespace {
DomainBox box2(double lo, double hi) { return DomainBox{{lo, lo}, {hi, hi}}; }
}  // namespace

TEST_CASE("hyperbolic-level example violates the pairwise condition") {
  ExampleCase ex = get_example("debreu");
  QCBundle b = qc_classify(ex.field, ex.qc_box);
  CHECK_FALSE(b.refused);
  CHECK(b.overall == QCVerdict::Violated);
  CHECK(b.classification.find("not quasi-convex: pairwise condition violated") == 0);
  CHECK(b.plain.violations >= 1);
  REQUIRE_FALSE(b.plain.witnesses.empty());
  // a violating pair triggers the hypothesis yet fails the conclusion
  const PairWitness& w = b.plain.witnesses.front();
  // projected pairs can land a hair below the hyperplane numerically
  CHECK(w.hypothesis >= -1e-9);
  CHECK(w.conclusion > 0.0);
}

TEST_CASE("surplus-style example is quasi-convex but not provably strict") {
  ExampleCase ex = get_example("arrow_enthoven");
  QCBundle b = qc_classify(ex.field, ex.qc_box);
  CHECK(b.overall == QCVerdict::Holds);
  CHECK(b.classification.find("quasi-convex via (i)") == 0);
  CHECK(b.classification.find("strictly") == std::string::npos);
  CHECK(b.plain.violations == 0);
  CHECK(b.strict.zero_band > 0);  // strictness drowns in the sampling band
}

TEST_CASE("odd-cubic example is strictly quasi-convex with a zero-margin direction") {
  ExampleCase ex = get_example("katzner");
  QCBundle b = qc_classify(ex.field, ex.qc_box);
  CHECK(b.overall == QCVerdict::Holds);
  CHECK(b.classification.find("strictly quasi-convex via (I)") == 0);
  CHECK(b.classification.find("zero-margin") != std::string::npos);
  CHECK(b.strict.verdict == QCVerdict::Holds);
  CHECK(b.strict.violations == 0);
}

TEST_CASE("non-integrable fields are refused unless waived") {
  ExampleCase ex = get_example("contact3");
  QCBundle b = qc_classify(ex.field, ex.qc_box);
  CHECK(b.refused);
  CHECK(b.classification.find("refused: integrability fails") == 0);
  CHECK(b.integrability_residual == doctest::Approx(2.0).epsilon(1e-9));

  QCBundleConfig cfg;
  cfg.waive_integrability = true;
  cfg.num_pairs = 2000;
  QCBundle waived = qc_classify(ex.field, ex.qc_box, cfg);
  CHECK_FALSE(waived.refused);
  CHECK_FALSE(waived.classification.empty());
}

TEST_CASE("a gradient of a strictly convex function is strict via the probes") {
  FieldSpec f = FieldSpec::from_strings({"2*x1", "2*x2"}, box2(0.25, 2.5));
  QCBundle b = qc_classify(f, box2(0.5, 2.0));
  CHECK(b.overall == QCVerdict::Holds);
  CHECK(b.classification.find("strictly quasi-convex via (II)") == 0);
  for (const LimsupSample& s : b.limsup) CHECK(s.report.cls == LimsupClass::Positive);
}

TEST_CASE("directional probe evaluates the tangent second-order rate") {
  FieldSpec f = FieldSpec::from_strings({"2*x1", "2*x2"}, box2(0.25, 2.5));
  // along v = (-1, 1) from (1, 1): (1/t) v . g(x + t v) = 4 identically
  LimsupReport r = directional_limsup(f, Vec{1.0, 1.0}, Vec{-1.0, 1.0});
  CHECK(r.cls == LimsupClass::Positive);
  CHECK(r.estimate == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(r.ts.size() == r.values.size());

  // the flat tangent of the odd-cubic example sits exactly at zero
  ExampleCase ex = get_example("katzner");
  LimsupReport flat = directional_limsup(ex.field, Vec{1.0, 1.0}, Vec{-1.0, 1.0});
  CHECK(flat.cls == LimsupClass::ZeroMargin);
  CHECK(std::fabs(flat.estimate) <= 1e-6);

  // non-tangent directions are rejected
  CHECK_THROWS_AS(directional_limsup(ex.field, Vec{1.0, 1.0}, Vec{1.0, 0.0}),
                  std::runtime_error);
}

TEST_CASE("pairwise sampling is deterministic under a fixed seed") {
  ExampleCase ex = get_example("debreu");
  PairwiseReport a = pairwise_condition(ex.field, ex.qc_box, 3000, false, 99);
  PairwiseReport b = pairwise_condition(ex.field, ex.qc_box, 3000, false, 99);
  CHECK(a.violations == b.violations);
  CHECK(a.hypothesis_pairs == b.hypothesis_pairs);
  CHECK(a.worst_conclusion == b.worst_conclusion);
  PairwiseReport c = pairwise_condition(ex.field, ex.qc_box, 3000, false, 100);
  CHECK((a.hypothesis_pairs != c.hypothesis_pairs || a.worst_conclusion != c.worst_conclusion));
}

TEST_CASE("definitional sampling confirms and refutes quasi-convexity") {
  ExprPtr conv = parse_expr("x1^2 + x2^2", 2);
  BruteReport ok = quasiconvexity_bruteforce(conv, box2(-1.0, 1.0), 20000, false, 1);
  CHECK(ok.verdict == QCVerdict::Holds);
  CHECK(ok.num_triples == 20000);
  CHECK_FALSE(ok.witness.has_value());

  ExprPtr conc = parse_expr("-(x1^2) - x2^2", 2);
  BruteReport bad = quasiconvexity_bruteforce(conc, box2(1.0, 2.0), 20000, false, 1);
  CHECK(bad.verdict == QCVerdict::Violated);
  REQUIRE(bad.witness.has_value());
  // the witness interpolates above the endpoint maximum
  CHECK(bad.witness->lhs > bad.witness->rhs);
  CHECK(bad.witness->t > 0.0);
  CHECK(bad.witness->t < 1.0);
}

TEST_CASE("verdict names render stably") {
  CHECK(to_string(QCVerdict::Holds) == "holds");
  CHECK(to_string(QCVerdict::Violated) == "violated");
  CHECK(to_string(QCVerdict::Inconclusive) == "inconclusive");
  CHECK(to_string(LimsupClass::Positive) == "positive");
  CHECK(to_string(LimsupClass::ZeroMargin) == "zero-margin");
}

TEST_CASE("bundle serialization exposes the classification and reports") {
  ExampleCase ex = get_example("arrow_enthoven");
  QCBundleConfig cfg;
  cfg.num_pairs = 2000;
  QCBundle b = qc_classify(ex.field, ex.qc_box, cfg);
  nlohmann::json j = to_json(b);
  CHECK(j["classification"] == b.classification);
  CHECK(j["refused"] == false);
  CHECK(j.contains("pairwise"));
  CHECK(j.contains("pairwise_strict"));
  CHECK(j.contains("directional"));
  CHECK(j["pairwise"]["violations"].get<size_t>() == b.plain.violations);
  CHECK(j["overall"] == to_string(b.overall));
}
