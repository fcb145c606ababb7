#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "tdekit/field.hpp"

namespace tde {

enum class OdeMethod { Rk4Fixed, Rkf45Adaptive };

struct OdeConfig {
  OdeMethod method = OdeMethod::Rkf45Adaptive;
  double step = 1e-2;        // fixed-step size (Rk4Fixed)
  double abs_tol = 1e-10;    // adaptive controls
  double rel_tol = 1e-10;
  long max_steps = 1000000;
  // optional state guard; integration stops (structured, not an error) when a
  // step would leave it
  std::optional<std::pair<Vec, Vec>> guard;
};

enum class Termination { Completed, LeftGuardBox, StepLimit };

// Accepted steps with derivatives, dense-evaluable via cubic Hermite.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> y;
  std::vector<Vec> dy;
  Termination termination = Termination::Completed;
  double exit_time = 0.0;  // set when termination != Completed

  double end_time() const { return t.back(); }
  Vec at(double ti) const;
};

using OdeRhs = std::function<Vec(double, const Vec&)>;

// Integrate y' = rhs(t, y) from (t0, y0) to t1 > t0.
Trajectory integrate(const OdeRhs& rhs, double t0, const Vec& y0, double t1,
                     const OdeConfig& cfg);

struct GuardExitError : std::runtime_error {
  GuardExitError(double when)
      : std::runtime_error("integration left the guard box at t = " + std::to_string(when)),
        exit_time(when) {}
  double exit_time;
};

// Scalar ODE for the pivot coordinate along the segment x~* -> x~:
//   c'(t) = f((1-t) x~* + t x~, c(t)) . (x~ - x~*),
// where f_i = -g_i/g_pivot over the non-pivot coordinates and the full point
// is assembled by inserting the state at the pivot slot.
struct RayProblem {
  const FieldSpec* spec;
  int pivot;
  Vec xstar_tilde, xtilde;

  double operator()(double t, double z) const;
};

RayProblem ray_rhs(const FieldSpec& spec, int pivot, Vec xstar_tilde, Vec xtilde);

Vec insert_pivot(const Vec& reduced, int pivot, double z);
Vec drop_pivot(std::span<const double> x, int pivot);

// Memoizing evaluator for c(t; x~, z). c(0; x~, z) = z bitwise and
// c(t; x~*, z) = z identically (degenerate ray). Thread-safe.
class SolutionFunction {
 public:
  SolutionFunction(FieldSpec spec, int pivot, Vec xstar, OdeConfig cfg);

  // throws GuardExitError if the trajectory left the guard before t
  double operator()(double t, const Vec& xtilde, double z) const;

  const FieldSpec& spec() const { return spec_; }
  int pivot() const { return pivot_; }
  const Vec& center() const { return xstar_; }
  const Vec& center_tilde() const { return xstar_tilde_; }
  const OdeConfig& config() const { return cfg_; }

 private:
  FieldSpec spec_;
  int pivot_;
  Vec xstar_, xstar_tilde_;
  OdeConfig cfg_;
  using Key = std::pair<Vec, double>;
  mutable std::mutex mu_;
  mutable std::map<Key, std::shared_ptr<const Trajectory>> memo_;
};

}  // namespace tde
