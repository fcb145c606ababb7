#include "tdekit/field.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tde {

namespace {

std::string point_str(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

double DomainBox::min_width() const {
  double w = upper[0] - lower[0];
  for (int i = 1; i < dim(); ++i) w = std::min(w, width(i));
  return w;
}

double DomainBox::diameter() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += width(i) * width(i);
  return std::sqrt(s);
}

bool DomainBox::strictly_inside(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    std::size_t k = static_cast<std::size_t>(i);
    if (!(x[k] > lower[k] && x[k] < upper[k])) return false;
  }
  return true;
}

void DomainBox::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw std::invalid_argument("domain box: mismatched or empty bounds");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]))
      throw std::invalid_argument("domain box: lower must be strictly below upper");
}

FieldSpec::FieldSpec(std::vector<ExprPtr> components, DomainBox domain, std::string name)
    : n_(static_cast<int>(components.size())),
      comps_(std::move(components)),
      domain_(std::move(domain)),
      name_(std::move(name)) {
  if (n_ < 2) throw std::invalid_argument("field needs n >= 2 components");
  domain_.validate();
  if (domain_.dim() != n_)
    throw std::invalid_argument("domain dimension does not match component count");
  for (const auto& c : comps_)
    if (c->max_var() >= n_)
      throw std::invalid_argument("component references variable beyond x" + std::to_string(n_));
  partials_.resize(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    partials_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j)
      partials_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          comps_[static_cast<std::size_t>(i)]->diff(j);
  }
}

FieldSpec FieldSpec::from_strings(const std::vector<std::string>& comps, DomainBox domain,
                                  std::string name) {
  std::vector<ExprPtr> es;
  es.reserve(comps.size());
  int n = static_cast<int>(comps.size());
  for (const auto& s : comps) es.push_back(parse_expr(s, n));
  return FieldSpec(std::move(es), std::move(domain), std::move(name));
}

FieldSpec FieldSpec::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int n = j.at("n").get<int>();
  auto comps = j.at("components").get<std::vector<std::string>>();
  if (static_cast<int>(comps.size()) != n)
    throw std::invalid_argument("field spec: n does not match component count");
  DomainBox box;
  box.lower = j.at("domain").at("lower").get<Vec>();
  box.upper = j.at("domain").at("upper").get<Vec>();
  std::string name = j.value("name", "");
  return from_strings(comps, std::move(box), std::move(name));
}

FieldSpec FieldSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string FieldSpec::to_json_text() const {
  nlohmann::json j;
  j["n"] = n_;
  std::vector<std::string> comps;
  for (const auto& c : comps_) comps.push_back(c->to_string());
  j["components"] = comps;
  j["domain"]["lower"] = domain_.lower;
  j["domain"]["upper"] = domain_.upper;
  j["name"] = name_;
  return j.dump(2);
}

Vec FieldSpec::eval(std::span<const double> x) const {
  if (!domain_.strictly_inside(x))
    throw std::domain_error("field evaluation outside domain at " + point_str(x));
  Vec g(static_cast<std::size_t>(n_));
  double norm2 = 0.0;
  for (int i = 0; i < n_; ++i) {
    double v = comps_[static_cast<std::size_t>(i)]->eval(x);
    if (!std::isfinite(v))
      throw std::runtime_error("field component " + std::to_string(i + 1) +
                               " non-finite at " + point_str(x));
    g[static_cast<std::size_t>(i)] = v;
    norm2 += v * v;
  }
  if (norm2 == 0.0)
    throw std::runtime_error("field vanishes at " + point_str(x));
  return g;
}

std::vector<Vec> FieldSpec::jacobian(std::span<const double> x, DerivMode mode, double h,
                                     double kink_tol) const {
  std::vector<Vec> J(static_cast<std::size_t>(n_), Vec(static_cast<std::size_t>(n_)));
  if (mode == DerivMode::Exact) {
    if (kink_near(x, kink_tol))
      throw std::runtime_error("exact jacobian at a kink point " + point_str(x) +
                               "; use finite differences or skip the point");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            partials_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->eval(x);
    return J;
  }
  Vec xp(x.begin(), x.end());
  for (int j = 0; j < n_; ++j) {
    std::size_t k = static_cast<std::size_t>(j);
    double hj = h * std::max(1.0, std::fabs(x[k]));
    double orig = xp[k];
    xp[k] = orig + hj;
    if (!domain_.strictly_inside(xp))
      throw std::domain_error("finite-difference stencil leaves domain at " + point_str(x));
    Vec gp = eval(xp);
    xp[k] = orig - hj;
    if (!domain_.strictly_inside(xp))
      throw std::domain_error("finite-difference stencil leaves domain at " + point_str(x));
    Vec gm = eval(xp);
    xp[k] = orig;
    for (int i = 0; i < n_; ++i)
      J[static_cast<std::size_t>(i)][k] =
          (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * hj);
  }
  return J;
}

bool FieldSpec::kink_near(std::span<const double> x, double kink_tol) const {
  for (const auto& c : comps_)
    if (c->kink_near(x, kink_tol)) return true;
  return false;
}

}  // namespace tde
