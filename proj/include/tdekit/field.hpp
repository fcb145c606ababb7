#pragma once

#include <string>
#include <vector>

#include "tdekit/expr.hpp"

namespace tde {

using Vec = std::vector<double>;

// Open axis-aligned box; all field evaluation happens strictly inside it.
struct DomainBox {
  Vec lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double width(int i) const { return upper[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)]; }
  double min_width() const;
  double diameter() const;
  bool strictly_inside(std::span<const double> x) const;
  void validate() const;  // throws if upper <= lower anywhere or sizes differ
};

enum class DerivMode { Exact, CentralFd };

// A non-vanishing vector field g: domain -> R^n given by n expression
// components over x1..xn. Immutable after construction; symbolic partials are
// precomputed so evaluation is safe from many threads.
class FieldSpec {
 public:
  FieldSpec(std::vector<ExprPtr> components, DomainBox domain, std::string name = "");

  static FieldSpec from_strings(const std::vector<std::string>& comps, DomainBox domain,
                                std::string name = "");
  // {"n":2,"components":[...],"domain":{"lower":[...],"upper":[...]},"name":"..."}
  static FieldSpec from_json_text(const std::string& text);
  static FieldSpec from_json_file(const std::string& path);
  std::string to_json_text() const;

  int n() const { return n_; }
  const std::string& name() const { return name_; }
  const DomainBox& domain() const { return domain_; }
  const std::vector<ExprPtr>& components() const { return comps_; }

  // g(x); throws if x is outside the domain, g(x) = 0, or any component is
  // non-finite.
  Vec eval(std::span<const double> x) const;

  // J[i][j] = dg_i/dx_j. Exact mode uses the precomputed symbolic partials and
  // refuses kink points; central differences use h_j = h*max(1,|x_j|) and need
  // the stencil inside the domain.
  std::vector<Vec> jacobian(std::span<const double> x, DerivMode mode = DerivMode::Exact,
                            double h = 1e-5, double kink_tol = 1e-9) const;

  bool kink_near(std::span<const double> x, double kink_tol = 1e-9) const;

 private:
  int n_;
  std::vector<ExprPtr> comps_;
  std::vector<std::vector<ExprPtr>> partials_;  // [i][j] = dg_i/dx_j
  DomainBox domain_;
  std::string name_;
};

}  // namespace tde
