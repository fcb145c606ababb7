#pragma once

#include <array>
#include <optional>
#include <utility>

#include <json.hpp>

#include "tdekit/field.hpp"

namespace tde {

// Cyclic three-index compatibility residual at x (indices 0-based):
//   g_i (dg_j/dx_k - dg_k/dx_j) + g_j (dg_k/dx_i - dg_i/dx_k)
//   + g_k (dg_i/dx_j - dg_j/dx_i).
// Vanishing over all triples characterizes local solvability of the level-set
// equation for non-vanishing Lipschitz fields.
double jacobi_residual(const FieldSpec& spec, std::span<const double> x,
                       std::array<int, 3> triple, DerivMode mode = DerivMode::Exact,
                       double fd_h = 1e-5);

// The triples (i, j, kstar), i < j, i,j != kstar, that suffice at a point where
// |g_kstar| is maximal; every other triple's residual is bounded by C times the
// worst of these with C = n * max_k |g_k| / |g_kstar|. Empty for n = 2 (the
// condition is vacuous there).
std::vector<std::array<int, 3>> reduced_triples(int n, int kstar);

// Asymmetry s_ij - s_ji of the reduced slope functions f_i = -g_i/g_pivot,
// s_ij = df_i/dx_j + (df_i/dx_pivot) f_j. Requires i != j, both != pivot.
// Equals -(1/g_pivot^2) * jacobi_residual(i, j, pivot).
double symmetry_residual(const FieldSpec& spec, std::span<const double> x, int pivot,
                         std::pair<int, int> pair, DerivMode mode = DerivMode::Exact,
                         double fd_h = 1e-5);

// Equispaced lattice strictly interior to box: per axis, m points at
// lo + (k+1)(hi-lo)/(m+1).
struct GridPlan {
  DomainBox box;
  int per_dim = 5;

  std::vector<Vec> points() const;
};

struct JacobiSample {
  Vec point;
  std::array<int, 3> triple;  // worst triple at this point; {-1,-1,-1} if none
  double residual = 0.0;
};

struct IntegrabilityReport {
  bool pass = false;
  double max_abs_residual = 0.0;
  double tolerance = 0.0;
  int skipped_kink_points = 0;
  int evaluated_points = 0;
  std::vector<JacobiSample> samples;
};

// Sweep the grid; at each smooth point take the pivot with maximal |g_k| and
// evaluate all reduced triples. Kink points (within kink_tol of a branch
// boundary) are skipped and counted, matching the almost-everywhere reading.
IntegrabilityReport check_integrability(const FieldSpec& spec, const GridPlan& grid,
                                        double tol = 1e-6, DerivMode mode = DerivMode::Exact,
                                        double fd_h = 1e-5, double kink_tol = 1e-9);

nlohmann::json to_json(const IntegrabilityReport& r);

}  // namespace tde
