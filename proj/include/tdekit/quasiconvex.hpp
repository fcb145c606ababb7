#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "tdekit/field.hpp"

namespace tde {

enum class QCVerdict { Holds, Violated, Inconclusive };
std::string to_string(QCVerdict v);

struct PairWitness {
  Vec x, y;
  double hypothesis = 0.0;  // g(x).(y-x)
  double conclusion = 0.0;  // g(y).(x-y)
};

struct PairwiseReport {
  bool strict = false;
  QCVerdict verdict = QCVerdict::Inconclusive;
  size_t num_pairs = 0;
  size_t hypothesis_pairs = 0;  // pairs that triggered the implication
  size_t violations = 0;
  size_t zero_band = 0;  // strict mode: conclusions too close to zero to call
  double worst_conclusion = 0.0;
  std::vector<PairWitness> witnesses;  // capped at 16
};

// first-order pairwise condition: g(x).(y-x) >= 0 implies g(y).(x-y) <= 0,
// strict variant demands < 0 for x != y. Half the pairs are projected onto
// the hyperplane g(x).(y-x) = 0 where the implication actually bites.
PairwiseReport pairwise_condition(const FieldSpec& spec, const DomainBox& box, size_t num_pairs,
                                  bool strict, std::uint64_t seed);

enum class LimsupClass { Positive, NonNegative, Negative, ZeroMargin };
std::string to_string(LimsupClass c);

struct LimsupReport {
  double estimate = 0.0;  // max of (1/t) v.g(x+tv) over the smallest sampled t
  double margin = 0.0;    // dispersion over those tail samples
  LimsupClass cls = LimsupClass::ZeroMargin;
  std::vector<double> ts, values;  // the full sampled sequence
};

// second-order probe along a direction v with g(x).v = 0 (checked)
LimsupReport directional_limsup(const FieldSpec& spec, const Vec& x, const Vec& v,
                                std::vector<double> t_seq = {}, double zero_tol = 1e-4);

struct LimsupSample {
  Vec x, v;
  LimsupReport report;
};

struct QCBundleConfig {
  size_t num_pairs = 10000;
  size_t limsup_points = 16;
  std::uint64_t seed = 0;
  bool waive_integrability = false;
  int integrability_grid = 7;
  double integrability_tol = 1e-6;
};

struct QCBundle {
  bool refused = false;
  QCVerdict overall = QCVerdict::Inconclusive;
  std::string classification;
  double integrability_residual = 0.0;
  PairwiseReport plain, strict;
  std::vector<LimsupSample> limsup;
};

// integrability gate, pairwise tests plain and strict, directional probes at
// sampled tangent directions, and the implied classification string
QCBundle qc_classify(const FieldSpec& spec, const DomainBox& box, const QCBundleConfig& cfg = {});

struct BruteTriple {
  Vec x, y;
  double t = 0.0;
  double lhs = 0.0, rhs = 0.0;  // u((1-t)x+ty) vs max(u(x), u(y))
};

struct BruteReport {
  bool strict = false;
  QCVerdict verdict = QCVerdict::Holds;
  size_t num_triples = 0;
  std::optional<BruteTriple> witness;
};

// definitional oracle on an explicit expression, independent of the field
BruteReport quasiconvexity_bruteforce(const ExprPtr& u, const DomainBox& box, size_t num_triples,
                                      bool strict, std::uint64_t seed);

nlohmann::json to_json(const QCBundle& bundle);

}  // namespace tde
