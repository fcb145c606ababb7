#pragma once

#include <limits>
#include <string>
#include <utility>

#include <json.hpp>

#include "tdekit/chart.hpp"

namespace tde {

// rectangular sample grid in the reduced coordinates (pivot dropped)
struct ReducedGrid {
  std::vector<std::vector<double>> axes;

  static ReducedGrid uniform(const Vec& center, double radius, int per_dim);
  size_t size() const;
  Vec point(size_t flat) const;  // axis 0 varies fastest
};

struct TracePoint {
  Vec xtilde;
  double height = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

// one integral manifold, sampled as the graph x_pivot = E(x~) over the grid
struct LevelSetTrace {
  SolutionChart chart;
  double level = 0.0;  // value of u on the manifold
  double seed = 0.0;   // raw seed fed to the ray ODE
  ReducedGrid grid;
  std::vector<TracePoint> points;
  size_t failures = 0;

  Vec lifted(size_t i) const;  // full-space point for an ok entry
};

LevelSetTrace trace_level_set(const SolutionChart& chart, double level, const ReducedGrid& grid);

// max over interior grid nodes and directions of |g^ . t^| where t is the
// central-difference tangent e_i + (dE/dx_i) e_pivot; zero means the traced
// manifold is orthogonal to the field
double tangent_orthogonality_residual(const LevelSetTrace& trace);

enum class SectionVerdict { Increasing, Decreasing, PreconditionFailed, NotMonotone };
std::string to_string(SectionVerdict v);

struct SectionReport {
  SectionVerdict verdict = SectionVerdict::PreconditionFailed;
  std::vector<double> ts;
  std::vector<double> values;  // u along the section; empty when the precondition fails
  int bad_index = -1;          // sample where g.v vanished or monotonicity broke
};

// u restricted to t -> x + t v; Increasing/Decreasing when g.v keeps a sign
SectionReport monotone_section(const SolutionChart& chart, const Vec& x, const Vec& v,
                               double t0, double t1, int samples = 21);

enum class Concordance { IncreasingTransform, DecreasingTransform, NotMonotone };
std::string to_string(Concordance c);

struct ConcordanceReport {
  Concordance verdict = Concordance::NotMonotone;
  std::pair<int, int> witness{-1, -1};  // 1-based indices of the violating pair
  size_t compared_pairs = 0;
};

// all-pairs order concordance of two value sequences sampled at the same points
ConcordanceReport compare_solutions(const std::vector<double>& a, const std::vector<double>& b,
                                    double gap_tol = 1e-8);

std::string trace_to_csv(const LevelSetTrace& trace);
std::string traces_to_svg(const std::vector<LevelSetTrace>& traces, int width = 640,
                          int height = 480);
nlohmann::json trace_to_json(const LevelSetTrace& trace);

}  // namespace tde
