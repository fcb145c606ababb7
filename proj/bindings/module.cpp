#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "tdekit/chart.hpp"
#include "tdekit/foliation.hpp"
#include "tdekit/gallery.hpp"
#include "tdekit/integrability.hpp"
#include "tdekit/kkt.hpp"
#include "tdekit/quasiconvex.hpp"

namespace py = pybind11;
using namespace tde;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
      return py::int_(j.get<long long>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case json::value_t::number_float:
      return py::float_(j.get<double>());
    case json::value_t::string:
      return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& e : j) out.append(json_to_py(e));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (auto it = j.begin(); it != j.end(); ++it)
        out[py::str(it.key())] = json_to_py(it.value());
      return out;
    }
    default:
      return py::none();
  }
}

DomainBox make_box(const Vec& lower, const Vec& upper) {
  DomainBox box{lower, upper};
  box.validate();
  return box;
}

// empty lower/upper means "inherit the field's domain"
DomainBox box_or_domain(const FieldSpec& f, const Vec& lower, const Vec& upper) {
  if (lower.empty() && upper.empty()) return f.domain();
  return make_box(lower, upper);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "charts, level sets, quasi-convexity and KKT certificates for "
            "non-vanishing vector fields on boxes";

  py::class_<FieldSpec>(m, "Field")
      .def_static(
          "from_components",
          [](const std::vector<std::string>& comps, const Vec& lower, const Vec& upper,
             const std::string& name) {
            return FieldSpec::from_strings(comps, make_box(lower, upper), name);
          },
          py::arg("components"), py::arg("lower"), py::arg("upper"), py::arg("name") = "")
      .def_static("from_json", &FieldSpec::from_json_text, py::arg("text"))
      .def_static("from_file", &FieldSpec::from_json_file, py::arg("path"))
      .def_static(
          "builtin", [](const std::string& name) { return get_example(name).field; },
          py::arg("name"))
      .def_property_readonly("n", &FieldSpec::n)
      .def_property_readonly("name", &FieldSpec::name)
      .def_property_readonly("lower", [](const FieldSpec& f) { return f.domain().lower; })
      .def_property_readonly("upper", [](const FieldSpec& f) { return f.domain().upper; })
      .def(
          "__call__", [](const FieldSpec& f, const Vec& x) { return f.eval(x); }, py::arg("x"))
      .def(
          "jacobian", [](const FieldSpec& f, const Vec& x) { return f.jacobian(x); },
          py::arg("x"))
      .def("to_json", &FieldSpec::to_json_text)
      .def("__repr__", [](const FieldSpec& f) {
        return "<Field '" + f.name() + "' n=" + std::to_string(f.n()) + ">";
      });

  py::class_<SolutionChart>(m, "Chart")
      .def_property_readonly("pivot",
                             [](const SolutionChart& c) { return c.pivot + 1; })  // 1-based
      .def_readonly("sign", &SolutionChart::sign)
      .def_readonly("epsilon", &SolutionChart::epsilon)
      .def_readonly("delta", &SolutionChart::delta)
      .def_readonly("lipschitz", &SolutionChart::lipschitz)
      .def_readonly("center", &SolutionChart::center)
      .def_property_readonly(
          "seed_range",
          [](const SolutionChart& c) { return py::make_tuple(c.z_lo, c.z_hi); })
      .def(
          "contains", [](const SolutionChart& c, const Vec& x) { return c.in_delta_box(x); },
          py::arg("x"))
      .def(
          "u", [](const SolutionChart& c, const Vec& x) { return eval_solution(c, x).u; },
          py::arg("x"))
      .def(
          "level_height",
          [](const SolutionChart& c, double z, const Vec& xtilde) {
            return eval_level_fn(c, z, xtilde);
          },
          py::arg("z"), py::arg("xtilde"))
      .def(
          "lambda_at",
          [](const SolutionChart& c, const Vec& x, double fd_h) {
            return recover_lambda(c, x, fd_h);
          },
          py::arg("x"), py::arg("fd_h") = 1e-5)
      .def(
          "alignment",
          [](const SolutionChart& c, const Vec& x, double fd_h) {
            return gradient_alignment_residual(c, x, fd_h);
          },
          py::arg("x"), py::arg("fd_h") = 1e-5)
      .def("to_dict", [](const SolutionChart& c) { return json_to_py(chart_to_json(c)); })
      .def("__repr__", [](const SolutionChart& c) {
        return "<Chart pivot=" + std::to_string(c.pivot + 1) +
               " delta=" + std::to_string(c.delta) + ">";
      });

  m.def(
      "build_chart",
      [](const FieldSpec& f, const Vec& center) { return build_chart(f, center); },
      py::arg("field"), py::arg("center"));

  m.def(
      "check_integrability",
      [](const FieldSpec& f, int per_dim, double tol) {
        GridPlan plan{f.domain(), per_dim};
        return json_to_py(to_json(check_integrability(f, plan, tol)));
      },
      py::arg("field"), py::arg("per_dim") = 5, py::arg("tol") = 1e-6);

  m.def(
      "qc_classify",
      [](const FieldSpec& f, const Vec& lower, const Vec& upper, size_t num_pairs,
         std::uint64_t seed, bool waive_integrability) {
        QCBundleConfig cfg;
        cfg.num_pairs = num_pairs;
        cfg.seed = seed;
        cfg.waive_integrability = waive_integrability;
        return json_to_py(to_json(qc_classify(f, box_or_domain(f, lower, upper), cfg)));
      },
      py::arg("field"), py::arg("lower") = Vec{}, py::arg("upper") = Vec{},
      py::arg("num_pairs") = size_t{10000}, py::arg("seed") = std::uint64_t{0},
      py::arg("waive_integrability") = false);

  m.def(
      "brute_force_qc",
      [](const std::string& expr, const Vec& lower, const Vec& upper, size_t num_triples,
         bool strict, std::uint64_t seed) {
        DomainBox box = make_box(lower, upper);
        ExprPtr u = parse_expr(expr, static_cast<int>(box.dim()));
        BruteReport r = quasiconvexity_bruteforce(u, box, num_triples, strict, seed);
        py::dict d;
        d["strict"] = r.strict;
        d["verdict"] = to_string(r.verdict);
        d["num_triples"] = r.num_triples;
        if (r.witness) {
          py::dict w;
          w["x"] = r.witness->x;
          w["y"] = r.witness->y;
          w["t"] = r.witness->t;
          w["lhs"] = r.witness->lhs;
          w["rhs"] = r.witness->rhs;
          d["witness"] = w;
        } else {
          d["witness"] = py::none();
        }
        return d;
      },
      py::arg("expr"), py::arg("lower"), py::arg("upper"),
      py::arg("num_triples") = size_t{20000}, py::arg("strict") = false,
      py::arg("seed") = std::uint64_t{0});

  m.def(
      "trace_level_set",
      [](const SolutionChart& chart, double level, double radius, int per_dim) {
        Vec reduced;
        for (size_t i = 0; i < chart.center.size(); ++i)
          if (static_cast<int>(i) != chart.pivot) reduced.push_back(chart.center[i]);
        if (radius <= 0.0) radius = 0.9 * chart.delta;
        ReducedGrid grid = ReducedGrid::uniform(reduced, radius, per_dim);
        return json_to_py(trace_to_json(trace_level_set(chart, level, grid)));
      },
      py::arg("chart"), py::arg("level"), py::arg("radius") = -1.0, py::arg("per_dim") = 9);

  m.def(
      "compare_values",
      [](const std::vector<double>& a, const std::vector<double>& b, double gap_tol) {
        ConcordanceReport r = compare_solutions(a, b, gap_tol);
        py::dict d;
        d["verdict"] = to_string(r.verdict);
        d["witness"] = py::make_tuple(r.witness.first, r.witness.second);
        d["compared_pairs"] = r.compared_pairs;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("gap_tol") = 1e-8);

  m.def(
      "kkt_verify",
      [](const FieldSpec& f, const std::vector<std::string>& constraints, const Vec& x,
         const Vec& lower, const Vec& upper, double feas_tol, double act_tol,
         double stat_tol) {
        ConstraintSet cs =
            ConstraintSet::from_strings(constraints, box_or_domain(f, lower, upper));
        KktTolerances tols;
        tols.feas = feas_tol;
        tols.act = act_tol;
        tols.stat = stat_tol;
        return json_to_py(to_json(kkt_verify(f, cs, x, tols)));
      },
      py::arg("field"), py::arg("constraints"), py::arg("x"), py::arg("lower") = Vec{},
      py::arg("upper") = Vec{}, py::arg("feas_tol") = 1e-8, py::arg("act_tol") = 1e-6,
      py::arg("stat_tol") = 1e-6);

  m.def(
      "kkt_search",
      [](const FieldSpec& f, const std::vector<std::string>& constraints, const Vec& lower,
         const Vec& upper, int grid_per_dim, std::uint64_t seed) {
        ConstraintSet cs =
            ConstraintSet::from_strings(constraints, box_or_domain(f, lower, upper));
        KktSearchConfig cfg;
        cfg.grid_per_dim = grid_per_dim;
        cfg.seed = seed;
        return json_to_py(to_json(kkt_search(f, cs, cfg)));
      },
      py::arg("field"), py::arg("constraints"), py::arg("lower") = Vec{},
      py::arg("upper") = Vec{}, py::arg("grid_per_dim") = 64,
      py::arg("seed") = std::uint64_t{0});

  m.def(
      "grid_minimum",
      [](const std::string& expr, const std::vector<std::string>& constraints,
         const Vec& lower, const Vec& upper, int density) {
        DomainBox box = make_box(lower, upper);
        ConstraintSet cs = ConstraintSet::from_strings(constraints, box);
        ExprPtr u = parse_expr(expr, static_cast<int>(box.dim()));
        OracleResult r = minimize_oracle(u, cs, density);
        py::dict d;
        d["x"] = r.x;
        d["value"] = r.value;
        d["cell"] = r.cell;
        return d;
      },
      py::arg("expr"), py::arg("constraints"), py::arg("lower"), py::arg("upper"),
      py::arg("density") = 200);

  m.def("example_names", &example_names);

  m.def(
      "verify_example",
      [](const std::string& name, int integ_grid, size_t qc_pairs, int trace_per_dim,
         int compare_points, std::uint64_t seed) {
        VerifyBudget budget;
        budget.integ_grid = integ_grid;
        budget.qc_pairs = qc_pairs;
        budget.trace_per_dim = trace_per_dim;
        budget.compare_points = compare_points;
        budget.seed = seed;
        return json_to_py(to_json(verify_example(name, budget)));
      },
      py::arg("name"), py::arg("integ_grid") = 5, py::arg("qc_pairs") = size_t{4000},
      py::arg("trace_per_dim") = 9, py::arg("compare_points") = 60,
      py::arg("seed") = std::uint64_t{0});
}
