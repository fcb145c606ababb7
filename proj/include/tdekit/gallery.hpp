#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdekit/field.hpp"

namespace tde {

struct ExpectedClaims {
  bool integrable = true;
  std::string qc_class;  // substring the classification must contain; empty means no claim
  std::string notes;     // documentation-only claims, not testable by sampling
};

struct ExampleCase {
  std::string name;
  FieldSpec field;
  ExprPtr closed_form_u;       // null when no closed form is known
  ExprPtr closed_form_lambda;  // null when no closed form is known
  DomainBox qc_box;            // recommended box for classification and sampling
  Vec chart_center;
  ExpectedClaims expected;
};

std::vector<std::string> example_names();
ExampleCase get_example(const std::string& name);

struct VerifyBudget {
  int integ_grid = 5;
  size_t qc_pairs = 4000;
  int trace_per_dim = 9;
  int compare_points = 60;
  std::uint64_t seed = 0;
};

struct VerifyEntry {
  std::string check;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string name;
  bool all_pass = false;
  std::vector<VerifyEntry> entries;
};

// Full pipeline against the case's expectations: integrability, closed-form
// gradient alignment, chart build, level trace, concordance of the built
// solution with the closed form, and qc classification.
VerifyReport verify_example(const std::string& name, const VerifyBudget& budget = {});

nlohmann::json to_json(const VerifyReport& report);

}  // namespace tde
