#include "tdekit/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tde {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ReducedGrid ReducedGrid::uniform(const Vec& center, double radius, int per_dim) {
  if (per_dim < 1) throw std::invalid_argument("grid needs at least one point per axis");
  ReducedGrid g;
  g.axes.resize(center.size());
  for (size_t i = 0; i < center.size(); ++i) {
    if (per_dim == 1) {
      g.axes[i] = {center[i]};
      continue;
    }
    g.axes[i].resize(per_dim);
    for (int j = 0; j < per_dim; ++j)
      g.axes[i][j] = center[i] - radius + 2.0 * radius * j / (per_dim - 1);
  }
  return g;
}

size_t ReducedGrid::size() const {
  size_t s = 1;
  for (const auto& ax : axes) s *= ax.size();
  return s;
}

Vec ReducedGrid::point(size_t flat) const {
  Vec p(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) {
    p[i] = axes[i][flat % axes[i].size()];
    flat /= axes[i].size();
  }
  return p;
}

Vec LevelSetTrace::lifted(size_t i) const {
  return insert_pivot(points[i].xtilde, chart.pivot, points[i].height);
}

LevelSetTrace trace_level_set(const SolutionChart& chart, double level, const ReducedGrid& grid) {
  if (static_cast<int>(grid.axes.size()) != chart.spec.n() - 1)
    throw std::invalid_argument("grid dimension must be n-1");
  if (grid.size() == 0) throw std::invalid_argument("empty grid");
  const double cp = chart.center[chart.pivot];
  const double seed = cp + chart.sign * (level - cp);
  if (seed < chart.z_lo || seed > chart.z_hi)
    throw std::runtime_error("level outside the chart bracket");

  LevelSetTrace trace{chart, level, seed, grid, {}, 0};
  const Vec ct = drop_pivot(chart.center, chart.pivot);
  trace.points.reserve(grid.size());
  for (size_t k = 0; k < grid.size(); ++k) {
    TracePoint pt;
    pt.xtilde = grid.point(k);
    bool in_box = true;
    for (size_t i = 0; i < ct.size(); ++i)
      if (std::fabs(pt.xtilde[i] - ct[i]) > chart.epsilon) in_box = false;
    if (!in_box) {
      pt.error = "outside chart box";
    } else {
      try {
        double h = (*chart.cfun)(1.0, pt.xtilde, seed);
        if (std::fabs(h - cp) > chart.epsilon) {
          pt.error = "outside chart box";
        } else {
          pt.height = h;
          pt.ok = true;
        }
      } catch (const GuardExitError& e) {
        pt.exit_time = e.exit_time;
        pt.error = "left guard box";
      } catch (const std::exception& e) {
        pt.error = e.what();
      }
    }
    if (!pt.ok) ++trace.failures;
    trace.points.push_back(std::move(pt));
  }
  return trace;
}

double tangent_orthogonality_residual(const LevelSetTrace& trace) {
  const auto& axes = trace.grid.axes;
  const int rdim = static_cast<int>(axes.size());
  const int pivot = trace.chart.pivot;
  const int n = trace.chart.spec.n();

  std::vector<size_t> stride(rdim, 1);
  for (int d = 1; d < rdim; ++d) stride[d] = stride[d - 1] * axes[d - 1].size();

  double worst = -1.0;
  for (size_t k = 0; k < trace.points.size(); ++k) {
    if (!trace.points[k].ok) continue;
    // multi-index of k
    std::vector<size_t> mi(rdim);
    size_t rem = k;
    for (int d = 0; d < rdim; ++d) {
      mi[d] = rem % axes[d].size();
      rem /= axes[d].size();
    }
    Vec x = trace.lifted(k);
    Vec g;
    try {
      g = trace.chart.spec.eval(x);
    } catch (const std::exception&) {
      continue;
    }
    double gn = 0.0;
    for (double c : g) gn += c * c;
    gn = std::sqrt(gn);
    for (int d = 0; d < rdim; ++d) {
      if (mi[d] == 0 || mi[d] + 1 >= axes[d].size()) continue;
      const TracePoint& lo = trace.points[k - stride[d]];
      const TracePoint& hi = trace.points[k + stride[d]];
      if (!lo.ok || !hi.ok) continue;
      double dx = axes[d][mi[d] + 1] - axes[d][mi[d] - 1];
      if (dx == 0.0) continue;
      double slope = (hi.height - lo.height) / dx;
      const int full = d < pivot ? d : d + 1;
      // tangent e_full + slope * e_pivot
      double tn = std::sqrt(1.0 + slope * slope);
      double dot = (g[full] + slope * g[pivot]) / (gn * tn);
      worst = std::max(worst, std::fabs(dot));
    }
  }
  if (worst < 0.0)
    throw std::runtime_error("trace too coarse for tangent residuals (need 3 ok points per line)");
  (void)n;
  return worst;
}

std::string to_string(SectionVerdict v) {
  switch (v) {
    case SectionVerdict::Increasing: return "increasing";
    case SectionVerdict::Decreasing: return "decreasing";
    case SectionVerdict::PreconditionFailed: return "precondition_failed";
    case SectionVerdict::NotMonotone: return "not_monotone";
  }
  return "?";
}

SectionReport monotone_section(const SolutionChart& chart, const Vec& x, const Vec& v,
                               double t0, double t1, int samples) {
  const int n = chart.spec.n();
  if (static_cast<int>(x.size()) != n || static_cast<int>(v.size()) != n)
    throw std::invalid_argument("point or direction dimension mismatch");
  if (samples < 2) throw std::invalid_argument("need at least two samples");

  SectionReport rep;
  rep.ts.resize(samples);
  std::vector<Vec> pts(samples, Vec(n));
  for (int j = 0; j < samples; ++j) {
    rep.ts[j] = t0 + (t1 - t0) * j / (samples - 1);
    for (int i = 0; i < n; ++i) pts[j][i] = x[i] + rep.ts[j] * v[i];
    if (!chart.in_delta_box(pts[j]))
      throw std::invalid_argument("section leaves the chart delta-box");
  }

  double vn = 0.0;
  for (double c : v) vn += c * c;
  vn = std::sqrt(vn);
  for (int j = 0; j < samples; ++j) {
    Vec g = chart.spec.eval(pts[j]);
    double gn = 0.0, dot = 0.0;
    for (int i = 0; i < n; ++i) {
      gn += g[i] * g[i];
      dot += g[i] * v[i];
    }
    gn = std::sqrt(gn);
    if (std::fabs(dot) <= 1e-12 * gn * vn) {
      rep.verdict = SectionVerdict::PreconditionFailed;
      rep.bad_index = j;
      return rep;
    }
  }

  rep.values.resize(samples);
  for (int j = 0; j < samples; ++j) rep.values[j] = eval_solution(chart, pts[j]).u;
  bool inc = true, dec = true;
  for (int j = 1; j < samples; ++j) {
    if (!(rep.values[j] > rep.values[j - 1])) inc = false;
    if (!(rep.values[j] < rep.values[j - 1])) dec = false;
    if (!inc && !dec) {
      rep.verdict = SectionVerdict::NotMonotone;
      rep.bad_index = j;
      return rep;
    }
  }
  rep.verdict = inc ? SectionVerdict::Increasing : SectionVerdict::Decreasing;
  return rep;
}

std::string to_string(Concordance c) {
  switch (c) {
    case Concordance::IncreasingTransform: return "increasing-transform";
    case Concordance::DecreasingTransform: return "decreasing-transform";
    case Concordance::NotMonotone: return "not-monotone";
  }
  return "?";
}

ConcordanceReport compare_solutions(const std::vector<double>& a, const std::vector<double>& b,
                                    double gap_tol) {
  if (a.size() != b.size()) throw std::invalid_argument("value sequences differ in length");
  if (a.size() < 2) throw std::invalid_argument("need at least two values");
  ConcordanceReport rep;
  int expected = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = i + 1; j < a.size(); ++j) {
      double da = a[i] - a[j], db = b[i] - b[j];
      if (std::fabs(da) <= gap_tol || std::fabs(db) <= gap_tol) continue;
      ++rep.compared_pairs;
      int s = ((da > 0) == (db > 0)) ? 1 : -1;
      if (expected == 0) {
        expected = s;
      } else if (s != expected) {
        rep.verdict = Concordance::NotMonotone;
        rep.witness = {static_cast<int>(i) + 1, static_cast<int>(j) + 1};
        return rep;
      }
    }
  }
  if (rep.compared_pairs == 0)
    throw std::runtime_error("no value pairs separated beyond gap_tol");
  rep.verdict = expected > 0 ? Concordance::IncreasingTransform : Concordance::DecreasingTransform;
  return rep;
}

std::string trace_to_csv(const LevelSetTrace& trace) {
  const int n = trace.chart.spec.n();
  std::ostringstream out;
  out << "level";
  for (int i = 0; i < n; ++i) out << ",x" << (i + 1);
  out << ",ok,error\n";
  for (size_t k = 0; k < trace.points.size(); ++k) {
    const TracePoint& pt = trace.points[k];
    Vec x = insert_pivot(pt.xtilde, trace.chart.pivot, pt.height);
    out << fmt(trace.level);
    for (int i = 0; i < n; ++i) out << ',' << fmt(x[i]);
    out << ',' << (pt.ok ? 1 : 0) << ',' << pt.error << '\n';
  }
  return out.str();
}

std::string traces_to_svg(const std::vector<LevelSetTrace>& traces, int width, int height) {
  if (traces.empty()) throw std::invalid_argument("no traces to plot");
  for (const auto& t : traces)
    if (t.chart.spec.n() != 2)
      throw std::runtime_error("SVG export supports two-dimensional charts only");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  size_t total_ok = 0;
  for (const auto& t : traces) {
    for (size_t k = 0; k < t.points.size(); ++k) {
      if (!t.points[k].ok) continue;
      Vec p = t.lifted(k);
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]);
      ymax = std::max(ymax, p[1]);
      ++total_ok;
    }
  }
  if (total_ok == 0) throw std::runtime_error("nothing to plot: every traced point failed");
  double spanx = xmax - xmin, spany = ymax - ymin;
  if (spanx <= 0) spanx = 1.0;
  if (spany <= 0) spany = 1.0;
  xmin -= 0.08 * spanx;
  xmax += 0.08 * spanx;
  ymin -= 0.08 * spany;
  ymax += 0.08 * spany;

  auto px = [&](double x) { return (x - xmin) / (xmax - xmin) * width; };
  auto py = [&](double y) { return height - (y - ymin) / (ymax - ymin) * height; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\" stroke=\"#888888\"/>\n";
  for (size_t ti = 0; ti < traces.size(); ++ti) {
    const auto& t = traces[ti];
    const char* color = palette[ti % 5];
    std::vector<std::pair<double, double>> run;
    auto flush = [&]() {
      if (run.size() >= 2) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < run.size(); ++i) {
          if (i) out << ' ';
          out << fmt6(run[i].first) << ',' << fmt6(run[i].second);
        }
        out << "\"/>\n";
      }
      run.clear();
    };
    std::pair<double, double> last{0, 0};
    bool any = false;
    for (size_t k = 0; k < t.points.size(); ++k) {
      if (!t.points[k].ok) {
        flush();
        continue;
      }
      Vec p = t.lifted(k);
      last = {px(p[0]), py(p[1])};
      run.push_back(last);
      any = true;
    }
    flush();
    if (any)
      out << "<text x=\"" << fmt6(last.first + 4) << "\" y=\"" << fmt6(last.second - 4)
          << "\" font-size=\"11\" fill=\"" << color << "\">u=" << fmt6(t.level) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

nlohmann::json trace_to_json(const LevelSetTrace& trace) {
  nlohmann::json pts = nlohmann::json::array();
  for (size_t k = 0; k < trace.points.size(); ++k) {
    const TracePoint& pt = trace.points[k];
    nlohmann::json j{{"xtilde", pt.xtilde}, {"ok", pt.ok}};
    if (pt.ok) {
      j["height"] = pt.height;
      j["x"] = trace.lifted(k);
    } else {
      j["error"] = pt.error;
      if (std::isfinite(pt.exit_time)) j["exit_time"] = pt.exit_time;
    }
    pts.push_back(std::move(j));
  }
  return nlohmann::json{{"level", trace.level},
                        {"seed", trace.seed},
                        {"pivot", trace.chart.pivot + 1},
                        {"failures", trace.failures},
                        {"points", std::move(pts)}};
}

}  // namespace tde
