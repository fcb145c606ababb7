#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "tdekit/field.hpp"
#include "tdekit/quasiconvex.hpp"

namespace tde {

// convex differentiable constraints h_i(x) <= 0 on a box; convexity is the
// caller's assertion, spot-checked by midpoint sampling at construction
class ConstraintSet {
 public:
  ConstraintSet(std::vector<ExprPtr> exprs, DomainBox box);
  static ConstraintSet from_strings(const std::vector<std::string>& exprs, const DomainBox& box);
  static ConstraintSet from_json_file(const std::string& path, const DomainBox& box);

  int n() const { return box_.dim(); }
  size_t k() const { return exprs_.size(); }
  const DomainBox& box() const { return box_; }
  const std::vector<ExprPtr>& exprs() const { return exprs_; }

  double value(size_t i, std::span<const double> x) const;
  Vec values(std::span<const double> x) const;
  Vec gradient(size_t i, std::span<const double> x) const;

 private:
  void spot_check_convexity(size_t num_pairs, std::uint64_t seed) const;

  std::vector<ExprPtr> exprs_;
  std::vector<std::vector<ExprPtr>> grads_;
  DomainBox box_;
};

struct KktTolerances {
  double feas = 1e-8;    // max_i h_i at a certified point
  double act = 1e-6;     // |h_i| below which a constraint counts as active
  double stat = 1e-6;    // stationarity residual
  double slack = 1e-10;  // reported complementary-slackness bound
  double slater_margin = 1e-6;
};

struct KKTCertificate {
  Vec xstar;
  Vec lambda;               // one per constraint, zero when inactive
  std::vector<int> active;  // 0-based constraint indices
  double stationarity_residual = std::numeric_limits<double>::quiet_NaN();
  double feasibility = std::numeric_limits<double>::quiet_NaN();  // max_i h_i(x*)
  Vec slackness;                                                  // lambda_i * h_i(x*)
  bool certified = false;
  std::string reason;  // empty | "feasibility" | "stationarity" | "quasi-convexity"
};

// strictly feasible point by midpoint-then-random sampling
std::optional<Vec> slater_check(const ConstraintSet& cs, size_t num_samples = 2000,
                                std::uint64_t seed = 0, double margin = 1e-6);

// min_{lambda >= 0} || cols * lambda - rhs ||, active-set iteration
Vec nnls(const std::vector<Vec>& cols, const Vec& rhs, int max_iter = 200);

// -g(x*) in the cone of active constraint gradients, with feasibility and
// complementary slackness; qc, when given, can veto certification
KKTCertificate kkt_verify(const FieldSpec& g, const ConstraintSet& cs, const Vec& xstar,
                          const KktTolerances& tols = {}, const QCBundle* qc = nullptr);

struct KktSearchConfig {
  int grid_per_dim = 64;
  int refine_rounds = 10;
  KktTolerances tols{1e-8, 1e-6, 1e-4, 1e-10, 1e-6};  // stat loosened for search
  std::uint64_t seed = 0;
};

struct KktSearchResult {
  KKTCertificate certificate;
  size_t feasible_points = 0;
  bool boundary_minimum = false;  // discrete descent stalled against the box
  Vec boundary_point;
  std::string note;
};

// grid scan minimizing the stationarity residual over feasible points, local
// refinement, boundary snap; falls back to discrete descent to detect minima
// pinned to the box edge rather than a constraint tangency
KktSearchResult kkt_search(const FieldSpec& g, const ConstraintSet& cs,
                           const KktSearchConfig& cfg = {});

struct OracleResult {
  Vec x;
  double value = 0.0;
  double cell = 0.0;  // final refined grid spacing
};

// brute-force feasible-grid minimizer of an explicit expression
OracleResult minimize_oracle(const ExprPtr& u, const ConstraintSet& cs, int grid_density = 200);

nlohmann::json to_json(const KKTCertificate& cert);
nlohmann::json to_json(const KktSearchResult& result);

}  // namespace tde
