#pragma once

#include <memory>

#include <json.hpp>

#include "tdekit/ode.hpp"

namespace tde {

struct ChartConfig {
  double tol_z = 1e-10;          // bisection width tolerance on the seed value
  double guard_inflate = 1.1;    // guard interval = bracket radius inflated by this
  double delta_min_factor = 1e-6;  // delta_min = factor * min domain width
  OdeConfig ode;                 // defaults: adaptive, abs=rel=1e-10
};

// Local solution patch around a center x*: on the delta-box the scalar u with
// u(x* ) = x*_pivot solves grad u = lambda g after the sign normalization that
// makes u increase along g. Seeds z live in [z_lo, z_hi] = x*_pivot +- eps.
struct SolutionChart {
  FieldSpec spec;
  Vec center;
  int pivot = 0;     // 0-based
  int sign = 1;      // +1 if the raw level seed already increases along g
  double epsilon = 0.0;
  double delta = 0.0;
  double lipschitz = 0.0;  // sampled bound for the reduced slopes f
  double z_lo = 0.0, z_hi = 0.0;
  double tol_z = 1e-10;
  std::shared_ptr<const SolutionFunction> cfun;

  bool in_delta_box(std::span<const double> x) const;
};

// Pivot selection, eps halving until |g_pivot| stays above half its center
// value on the sampled eps-box, Lipschitz estimation, delta halving until the
// rays complete inside the guard, the seed bracket straddles the delta-box,
// and delta * sqrt(n-1) <= 1/(2 L^2).
SolutionChart build_chart(const FieldSpec& spec, const Vec& xstar, const ChartConfig& cfg = {});

struct SolutionValue {
  double u = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |c(1; x~, z) - x_pivot| at the returned seed
};

// u(x) for x in the closed delta-box, by bisecting the seed z of the level
// graph through x. Exact (residual 0) on the pivot axis through the center.
SolutionValue eval_solution(const SolutionChart& chart, const Vec& x);

// Level-graph height E^z(x~) = c(1; x~, z) for a raw seed z in the bracket.
double eval_level_fn(const SolutionChart& chart, double z, const Vec& xtilde);

// lambda(x) = (du/dx_pivot) / g_pivot via central differences of eval_solution.
double recover_lambda(const SolutionChart& chart, const Vec& x, double fd_h = 1e-5);

// || grad u - (grad u . g^) g^ || / || grad u || with grad u from central
// differences; near zero iff the constructed level sets are orthogonal to g.
double gradient_alignment_residual(const SolutionChart& chart, const Vec& x, double fd_h = 1e-5);

nlohmann::json chart_to_json(const SolutionChart& chart);

}  // namespace tde
