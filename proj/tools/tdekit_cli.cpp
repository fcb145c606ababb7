#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdekit/chart.hpp"
#include "tdekit/foliation.hpp"
#include "tdekit/gallery.hpp"
#include "tdekit/integrability.hpp"
#include "tdekit/kkt.hpp"
#include "tdekit/quasiconvex.hpp"

using namespace tde;

namespace {

struct Options {
  std::string builtin, field_file, constraints_file, out, plot_out, svg_out, example;
  std::vector<double> at, levels, box_vals, candidate;
  int grid = 0;
  double grid_radius = -1.0;
  double tol = 1e-6;
  std::size_t pairs = 10000;
  std::uint64_t seed = 0;
  bool waive = false;
  bool as_json = false;
};

FieldSpec load_field(const Options& opt) {
  if (!opt.builtin.empty() && !opt.field_file.empty())
    throw std::invalid_argument("--builtin and --field are mutually exclusive");
  if (!opt.builtin.empty()) return get_example(opt.builtin).field;
  if (!opt.field_file.empty()) {
    std::ifstream probe(opt.field_file);
    if (!probe) throw std::invalid_argument("cannot open field file: " + opt.field_file);
    return FieldSpec::from_json_file(opt.field_file);
  }
  throw std::invalid_argument("one of --builtin or --field is required");
}

// --box a,b applies [a,b] on every axis; --box l1,u1,l2,u2,... sets each axis
DomainBox parse_box(const std::vector<double>& vals, int n) {
  DomainBox box;
  if (vals.size() == 2) {
    box.lower.assign(n, vals[0]);
    box.upper.assign(n, vals[1]);
  } else if (vals.size() == 2 * static_cast<size_t>(n)) {
    for (int i = 0; i < n; ++i) {
      box.lower.push_back(vals[2 * i]);
      box.upper.push_back(vals[2 * i + 1]);
    }
  } else {
    throw std::invalid_argument("--box needs 2 values or 2 per dimension");
  }
  box.validate();
  return box;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot write file: " + path);
  os << text;
}

void emit_json(const nlohmann::json& j, const std::string& out_file) {
  std::string text = j.dump(2) + "\n";
  if (out_file.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text(out_file, text);
}

// refuse chart and trace work on fields that fail the integrability test
void integrability_gate(const FieldSpec& f, bool waived) {
  if (waived || f.n() < 3) return;
  IntegrabilityReport rep = check_integrability(f, GridPlan{f.domain(), 5});
  if (!rep.pass) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "refused: integrability fails (max residual %g)",
                  rep.max_abs_residual);
    throw std::runtime_error(buf);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local scalar potentials for non-vanishing vector fields on boxes"};
  app.require_subcommand(1);
  Options opt;
  int rc = 0;

  auto add_field_opts = [&](CLI::App* sub) {
    sub->add_option("--builtin", opt.builtin, "built-in example field");
    sub->add_option("--field", opt.field_file, "field spec JSON file");
  };

  // check: integrability test on an interior grid
  auto* check = app.add_subcommand("check", "test the integrability condition on a grid");
  add_field_opts(check);
  check->add_option("--grid", opt.grid, "interior grid points per axis")->default_val(5);
  check->add_option("--tol", opt.tol, "residual tolerance")->default_val(1e-6);
  check->callback([&] {
    FieldSpec f = load_field(opt);
    IntegrabilityReport rep = check_integrability(f, GridPlan{f.domain(), opt.grid}, opt.tol);
    std::printf("%s max residual %.6f\n", rep.pass ? "PASS" : "FAIL", rep.max_abs_residual);
    std::printf("evaluated %d points, skipped %d kink points, tolerance %g\n",
                rep.evaluated_points, rep.skipped_kink_points, rep.tolerance);
    rc = rep.pass ? 0 : 1;
  });

  // solve: construct a local solution chart
  auto* solve = app.add_subcommand("solve", "construct a local solution chart at a point");
  add_field_opts(solve);
  solve->add_option("--at", opt.at, "chart center x1,x2,...")->delimiter(',');
  solve->add_option("--out", opt.out, "write chart JSON to a file instead of stdout");
  solve->add_flag("--waive-integrability", opt.waive, "skip the integrability gate");
  solve->callback([&] {
    FieldSpec f = load_field(opt);
    Vec center = opt.at;
    if (center.empty() && !opt.builtin.empty()) center = get_example(opt.builtin).chart_center;
    if (center.empty()) throw std::invalid_argument("--at is required");
    integrability_gate(f, opt.waive);
    SolutionChart chart = build_chart(f, center);
    emit_json(chart_to_json(chart), opt.out);
  });

  // level: trace integral manifolds over a reduced grid
  auto* level = app.add_subcommand("level", "trace level sets of the constructed solution");
  add_field_opts(level);
  level->add_option("--at", opt.at, "chart center x1,x2,...")->delimiter(',');
  level->add_option("--levels", opt.levels, "solution values to trace, z1,z2,...")
      ->delimiter(',')
      ->required();
  level->add_option("--grid", opt.grid, "reduced grid points per axis")->default_val(9);
  level->add_option("--grid-radius", opt.grid_radius,
                    "reduced grid half-width (default 0.9 * delta)");
  level->add_option("--plot-out", opt.plot_out, "write sampled points as CSV");
  level->add_option("--svg-out", opt.svg_out, "write an SVG plot (two dimensions only)");
  level->add_option("--out", opt.out, "write trace JSON to a file instead of stdout");
  level->add_flag("--waive-integrability", opt.waive, "skip the integrability gate");
  level->callback([&] {
    FieldSpec f = load_field(opt);
    Vec center = opt.at;
    if (center.empty() && !opt.builtin.empty()) center = get_example(opt.builtin).chart_center;
    if (center.empty()) throw std::invalid_argument("--at is required");
    integrability_gate(f, opt.waive);
    SolutionChart chart = build_chart(f, center);
    Vec reduced;
    for (size_t i = 0; i < center.size(); ++i)
      if (static_cast<int>(i) != chart.pivot) reduced.push_back(center[i]);
    double radius = opt.grid_radius > 0.0 ? opt.grid_radius : 0.9 * chart.delta;
    ReducedGrid grid = ReducedGrid::uniform(reduced, radius, opt.grid);

    std::vector<LevelSetTrace> traces;
    nlohmann::json summary = nlohmann::json::array();
    for (double z : opt.levels) {
      traces.push_back(trace_level_set(chart, z, grid));
      summary.push_back(trace_to_json(traces.back()));
    }
    if (!opt.plot_out.empty()) {
      std::string csv = trace_to_csv(traces[0]);
      for (size_t i = 1; i < traces.size(); ++i) {
        std::string s = trace_to_csv(traces[i]);
        csv += s.substr(s.find('\n') + 1);
      }
      write_text(opt.plot_out, csv);
    }
    if (!opt.svg_out.empty()) write_text(opt.svg_out, traces_to_svg(traces));
    emit_json(summary, opt.out);
    for (const auto& t : traces)
      if (t.failures > 0) rc = 1;
  });

  // qc: quasi-convexity classification
  auto* qc = app.add_subcommand("qc", "classify quasi-convexity of the induced solution");
  add_field_opts(qc);
  qc->add_option("--box", opt.box_vals, "classification box (2 or 2n values)")->delimiter(',');
  qc->add_option("--pairs", opt.pairs, "sample pairs for the first-order test")
      ->default_val(10000);
  qc->add_option("--seed", opt.seed, "RNG seed")->default_val(0);
  qc->add_flag("--waive-integrability", opt.waive, "classify even if integrability fails");
  qc->add_option("--out", opt.out, "write classification JSON to a file instead of stdout");
  qc->callback([&] {
    FieldSpec f = load_field(opt);
    DomainBox box = f.domain();
    if (!opt.box_vals.empty())
      box = parse_box(opt.box_vals, f.n());
    else if (!opt.builtin.empty())
      box = get_example(opt.builtin).qc_box;
    QCBundleConfig cfg;
    cfg.num_pairs = opt.pairs;
    cfg.seed = opt.seed;
    cfg.waive_integrability = opt.waive;
    QCBundle bundle = qc_classify(f, box, cfg);
    emit_json(to_json(bundle), opt.out);
    if (bundle.refused || bundle.overall == QCVerdict::Violated) rc = 1;
  });

  // kkt: verify a candidate or search the feasible box
  auto* kkt = app.add_subcommand("kkt", "verify or search KKT certificates under constraints");
  add_field_opts(kkt);
  kkt->add_option("--constraints", opt.constraints_file,
                  "JSON file with an array of constraint expressions h_i(x) <= 0")
      ->required();
  kkt->add_option("--box", opt.box_vals, "optimization box (2 or 2n values)")->delimiter(',');
  kkt->add_option("--candidate", opt.candidate, "candidate minimizer x1,x2,... to verify")
      ->delimiter(',');
  kkt->add_option("--grid", opt.grid, "search grid points per axis")->default_val(64);
  kkt->add_option("--seed", opt.seed, "RNG seed")->default_val(0);
  kkt->add_option("--out", opt.out, "write certificate JSON to a file instead of stdout");
  kkt->callback([&] {
    FieldSpec f = load_field(opt);
    DomainBox box = opt.box_vals.empty() ? f.domain() : parse_box(opt.box_vals, f.n());
    std::ifstream probe(opt.constraints_file);
    if (!probe) throw std::invalid_argument("cannot open constraints file: " + opt.constraints_file);
    ConstraintSet cs = ConstraintSet::from_json_file(opt.constraints_file, box);
    if (!opt.candidate.empty()) {
      KKTCertificate cert = kkt_verify(f, cs, opt.candidate);
      emit_json(to_json(cert), opt.out);
      rc = cert.certified ? 0 : 1;
    } else {
      KktSearchConfig cfg;
      cfg.grid_per_dim = opt.grid;
      cfg.seed = opt.seed;
      KktSearchResult res = kkt_search(f, cs, cfg);
      emit_json(to_json(res), opt.out);
      rc = res.certificate.certified ? 0 : 1;
    }
  });

  // examples: gallery access
  auto* ex = app.add_subcommand("examples", "built-in example gallery");
  ex->require_subcommand(1);
  auto* ex_list = ex->add_subcommand("list", "list example names");
  ex_list->callback([&] {
    for (const auto& name : example_names()) std::printf("%s\n", name.c_str());
  });
  auto* ex_run = ex->add_subcommand("run", "run the verification pipeline for one example");
  ex_run->add_option("name", opt.example, "example name")->required();
  ex_run->add_flag("--json", opt.as_json, "emit the report as JSON");
  ex_run->add_option("--seed", opt.seed, "RNG seed")->default_val(0);
  ex_run->add_option("--out", opt.out, "write report JSON to a file");
  ex_run->callback([&] {
    VerifyBudget budget;
    budget.seed = opt.seed;
    VerifyReport rep = verify_example(opt.example, budget);
    if (opt.as_json) {
      emit_json(to_json(rep), opt.out);
    } else {
      for (const auto& e : rep.entries)
        std::printf("[%s] %s: %s\n", e.pass ? "ok" : "FAIL", e.check.c_str(),
                    e.detail.c_str());
      std::printf("%s: %s\n", rep.name.c_str(), rep.all_pass ? "all checks passed" : "FAILED");
      if (!opt.out.empty()) emit_json(to_json(rep), opt.out);
    }
    rc = rep.all_pass ? 0 : 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
