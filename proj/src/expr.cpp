#include "tdekit/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace tde {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_const(const ExprPtr& e, double v) {
  return e->kind == Expr::Kind::Constant && e->value == v;
}

}  // namespace

ExprPtr Expr::constant(double c) {
  Expr e;
  e.kind = Kind::Constant;
  e.value = c;
  return make(std::move(e));
}

ExprPtr Expr::variable(int idx0) {
  Expr e;
  e.kind = Kind::Var;
  e.var = idx0;
  return make(std::move(e));
}

ExprPtr Expr::binary(BinOp op, ExprPtr l, ExprPtr r) {
  // light folding only; keeps derivative trees small, no CAS ambitions
  if (l->kind == Kind::Constant && r->kind == Kind::Constant) {
    double lv = l->value, rv = r->value;
    switch (op) {
      case BinOp::Add: return constant(lv + rv);
      case BinOp::Sub: return constant(lv - rv);
      case BinOp::Mul: return constant(lv * rv);
      case BinOp::Div: if (rv != 0.0) return constant(lv / rv); break;
      case BinOp::Pow: return constant(std::pow(lv, rv));
    }
  }
  switch (op) {
    case BinOp::Add:
      if (is_const(l, 0.0)) return r;
      if (is_const(r, 0.0)) return l;
      break;
    case BinOp::Sub:
      if (is_const(r, 0.0)) return l;
      if (is_const(l, 0.0)) return neg(r);
      break;
    case BinOp::Mul:
      if (is_const(l, 0.0) || is_const(r, 0.0)) return constant(0.0);
      if (is_const(l, 1.0)) return r;
      if (is_const(r, 1.0)) return l;
      break;
    case BinOp::Div:
      if (is_const(l, 0.0)) return constant(0.0);
      if (is_const(r, 1.0)) return l;
      break;
    case BinOp::Pow:
      if (is_const(r, 1.0)) return l;
      if (is_const(r, 0.0)) return constant(1.0);
      break;
  }
  Expr e;
  e.kind = Kind::Binary;
  e.bin_op = op;
  e.a = std::move(l);
  e.b = std::move(r);
  return make(std::move(e));
}

ExprPtr Expr::neg(ExprPtr x) {
  if (x->kind == Kind::Constant) return constant(-x->value);
  if (x->kind == Kind::Neg) return x->a;
  Expr e;
  e.kind = Kind::Neg;
  e.a = std::move(x);
  return make(std::move(e));
}

ExprPtr Expr::sqrt_of(ExprPtr x) {
  Expr e;
  e.kind = Kind::Sqrt;
  e.a = std::move(x);
  return make(std::move(e));
}

ExprPtr Expr::abs_of(ExprPtr x) {
  Expr e;
  e.kind = Kind::Abs;
  e.a = std::move(x);
  return make(std::move(e));
}

ExprPtr Expr::min_of(ExprPtr l, ExprPtr r) {
  Expr e;
  e.kind = Kind::Min;
  e.a = std::move(l);
  e.b = std::move(r);
  return make(std::move(e));
}

ExprPtr Expr::max_of(ExprPtr l, ExprPtr r) {
  Expr e;
  e.kind = Kind::Max;
  e.a = std::move(l);
  e.b = std::move(r);
  return make(std::move(e));
}

ExprPtr Expr::cond(CmpOp op, ExprPtr cl, ExprPtr cr, ExprPtr then_e, ExprPtr else_e) {
  Expr e;
  e.kind = Kind::Cond;
  e.cmp_op = op;
  e.cmp_lhs = std::move(cl);
  e.cmp_rhs = std::move(cr);
  e.a = std::move(then_e);
  e.b = std::move(else_e);
  return make(std::move(e));
}

double Expr::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Var: return x[static_cast<std::size_t>(var)];
    case Kind::Neg: return -a->eval(x);
    case Kind::Sqrt: return std::sqrt(a->eval(x));
    case Kind::Abs: return std::fabs(a->eval(x));
    case Kind::Min: return std::fmin(a->eval(x), b->eval(x));
    case Kind::Max: return std::fmax(a->eval(x), b->eval(x));
    case Kind::Binary: {
      double lv = a->eval(x);
      double rv = b->eval(x);
      switch (bin_op) {
        case BinOp::Add: return lv + rv;
        case BinOp::Sub: return lv - rv;
        case BinOp::Mul: return lv * rv;
        case BinOp::Div: return lv / rv;
        case BinOp::Pow: return std::pow(lv, rv);
      }
      return 0.0;
    }
    case Kind::Cond: {
      double lv = cmp_lhs->eval(x);
      double rv = cmp_rhs->eval(x);
      bool taken = false;
      switch (cmp_op) {
        case CmpOp::Lt: taken = lv < rv; break;
        case CmpOp::Le: taken = lv <= rv; break;
        case CmpOp::Gt: taken = lv > rv; break;
        case CmpOp::Ge: taken = lv >= rv; break;
      }
      return taken ? a->eval(x) : b->eval(x);
    }
  }
  return 0.0;
}

ExprPtr Expr::diff(int v) const {
  switch (kind) {
    case Kind::Constant: return constant(0.0);
    case Kind::Var: return constant(var == v ? 1.0 : 0.0);
    case Kind::Neg: return neg(a->diff(v));
    case Kind::Sqrt: {
      // a' / (2 sqrt(a))
      auto self = sqrt_of(a);
      return binary(BinOp::Div, a->diff(v), binary(BinOp::Mul, constant(2.0), self));
    }
    case Kind::Abs:
      // branch derivative: sign(a) * a'
      return cond(CmpOp::Ge, a, constant(0.0), a->diff(v), neg(a->diff(v)));
    case Kind::Min:
      return cond(CmpOp::Le, a, b, a->diff(v), b->diff(v));
    case Kind::Max:
      return cond(CmpOp::Ge, a, b, a->diff(v), b->diff(v));
    case Kind::Binary: {
      switch (bin_op) {
        case BinOp::Add: return binary(BinOp::Add, a->diff(v), b->diff(v));
        case BinOp::Sub: return binary(BinOp::Sub, a->diff(v), b->diff(v));
        case BinOp::Mul:
          return binary(BinOp::Add, binary(BinOp::Mul, a->diff(v), b),
                        binary(BinOp::Mul, a, b->diff(v)));
        case BinOp::Div: {
          auto num = binary(BinOp::Sub, binary(BinOp::Mul, a->diff(v), b),
                            binary(BinOp::Mul, a, b->diff(v)));
          auto den = binary(BinOp::Pow, b, constant(2.0));
          return binary(BinOp::Div, num, den);
        }
        case BinOp::Pow: {
          // exponent is constant by parser construction: c * a^(c-1) * a'
          double c = b->value;
          auto body = binary(BinOp::Mul, constant(c),
                             binary(BinOp::Pow, a, constant(c - 1.0)));
          return binary(BinOp::Mul, body, a->diff(v));
        }
      }
      return constant(0.0);
    }
    case Kind::Cond:
      return cond(cmp_op, cmp_lhs, cmp_rhs, a->diff(v), b->diff(v));
  }
  return constant(0.0);
}

bool Expr::kink_near(std::span<const double> x, double tol) const {
  switch (kind) {
    case Kind::Constant:
    case Kind::Var:
      return false;
    case Kind::Neg:
    case Kind::Sqrt:
      return a->kink_near(x, tol);
    case Kind::Abs:
      return std::fabs(a->eval(x)) < tol || a->kink_near(x, tol);
    case Kind::Min:
    case Kind::Max:
      return std::fabs(a->eval(x) - b->eval(x)) < tol || a->kink_near(x, tol) ||
             b->kink_near(x, tol);
    case Kind::Binary:
      return a->kink_near(x, tol) || b->kink_near(x, tol);
    case Kind::Cond: {
      if (std::fabs(cmp_lhs->eval(x) - cmp_rhs->eval(x)) < tol) return true;
      if (cmp_lhs->kink_near(x, tol) || cmp_rhs->kink_near(x, tol)) return true;
      double lv = cmp_lhs->eval(x), rv = cmp_rhs->eval(x);
      bool taken = false;
      switch (cmp_op) {
        case CmpOp::Lt: taken = lv < rv; break;
        case CmpOp::Le: taken = lv <= rv; break;
        case CmpOp::Gt: taken = lv > rv; break;
        case CmpOp::Ge: taken = lv >= rv; break;
      }
      return taken ? a->kink_near(x, tol) : b->kink_near(x, tol);
    }
  }
  return false;
}

int Expr::max_var() const {
  int m = -1;
  switch (kind) {
    case Kind::Constant: return -1;
    case Kind::Var: return var;
    case Kind::Neg:
    case Kind::Sqrt:
    case Kind::Abs:
      return a->max_var();
    case Kind::Min:
    case Kind::Max:
    case Kind::Binary:
      return std::max(a->max_var(), b->max_var());
    case Kind::Cond:
      m = std::max(cmp_lhs->max_var(), cmp_rhs->max_var());
      m = std::max(m, a->max_var());
      m = std::max(m, b->max_var());
      return m;
  }
  return m;
}

namespace {

// precedence levels for printing
int prec_of(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary:
      switch (e.bin_op) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 4;
      }
      return 1;
    case Expr::Kind::Neg: return 3;
    default: return 5;  // atoms and function calls
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* cmp_str(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "<";
}

void print(const Expr& e, std::string& out);

// wrap child in parens if binding would change; right children of
// same-precedence ops are parenthesized so the tree round-trips exactly
void print_child(const Expr& child, int parent_prec, bool is_right, std::string& out) {
  int cp = prec_of(child);
  bool need = cp < parent_prec || (is_right && cp == parent_prec);
  if (need) out += '(';
  print(child, out);
  if (need) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Constant: {
      if (e.value < 0.0 || std::signbit(e.value)) {
        out += '(' + fmt_double(e.value) + ')';
      } else {
        out += fmt_double(e.value);
      }
      return;
    }
    case Expr::Kind::Var:
      out += 'x' + std::to_string(e.var + 1);
      return;
    case Expr::Kind::Neg:
      out += '-';
      print_child(*e.a, 3, true, out);
      return;
    case Expr::Kind::Sqrt:
      out += "sqrt(";
      print(*e.a, out);
      out += ')';
      return;
    case Expr::Kind::Abs:
      out += "abs(";
      print(*e.a, out);
      out += ')';
      return;
    case Expr::Kind::Min:
    case Expr::Kind::Max:
      out += e.kind == Expr::Kind::Min ? "min(" : "max(";
      print(*e.a, out);
      out += ", ";
      print(*e.b, out);
      out += ')';
      return;
    case Expr::Kind::Binary: {
      int p = prec_of(e);
      const char* op = "+";
      switch (e.bin_op) {
        case BinOp::Add: op = " + "; break;
        case BinOp::Sub: op = " - "; break;
        case BinOp::Mul: op = "*"; break;
        case BinOp::Div: op = "/"; break;
        case BinOp::Pow: op = "^"; break;
      }
      print_child(*e.a, p, false, out);
      out += op;
      print_child(*e.b, p, true, out);
      return;
    }
    case Expr::Kind::Cond:
      out += "if(";
      print(*e.cmp_lhs, out);
      out += ' ';
      out += cmp_str(e.cmp_op);
      out += ' ';
      print(*e.cmp_rhs, out);
      out += ", ";
      print(*e.a, out);
      out += ", ";
      print(*e.b, out);
      out += ')';
      return;
  }
}

// ---- recursive descent parser ----

struct Parser {
  std::string_view s;
  std::size_t pos = 0;
  int n;

  explicit Parser(std::string_view text, int nvars) : s(text), n(nvars) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool peek(char c) {
    skip_ws();
    return pos < s.size() && s[pos] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected ") + what, pos);
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) { throw ParseError(msg, at); }

  ExprPtr parse() {
    auto e = expr();
    skip_ws();
    if (pos != s.size()) fail("unexpected trailing input", pos);
    return e;
  }

  ExprPtr expr() {
    auto lhs = term();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        lhs = Expr::binary(BinOp::Add, lhs, term());
      } else if (peek('-')) {
        ++pos;
        lhs = Expr::binary(BinOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    auto lhs = factor();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        lhs = Expr::binary(BinOp::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::binary(BinOp::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    auto base = unary();
    skip_ws();
    if (accept('^')) {
      std::size_t at = pos;
      auto ex = unary();  // right-associative via recursion inside unary^...
      skip_ws();
      if (peek('^')) fail("chained '^' needs parentheses", pos);
      if (ex->max_var() >= 0) fail("exponent must be constant", at);
      double v = ex->eval(std::span<const double>{});
      return Expr::binary(BinOp::Pow, base, Expr::constant(v));
    }
    return base;
  }

  ExprPtr unary() {
    skip_ws();
    if (accept('-')) return Expr::neg(unary());
    return primary();
  }

  ExprPtr primary() {
    skip_ws();
    if (pos >= s.size()) fail("expected expression", pos);
    char c = s[pos];
    if (c == '(') {
      ++pos;
      auto e = expr();
      expect(')', "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail("expected expression", pos);
  }

  ExprPtr number() {
    const char* begin = s.data() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("invalid number", pos);
    pos += static_cast<std::size_t>(end - begin);
    return Expr::constant(v);
  }

  ExprPtr ident() {
    std::size_t at = pos;
    std::size_t e = pos;
    while (e < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[e])) || s[e] == '_'))
      ++e;
    std::string name(s.substr(pos, e - pos));
    pos = e;

    if (name.size() >= 2 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      int idx = std::atoi(name.c_str() + 1);
      if (idx < 1 || idx > n)
        fail("variable " + name + " out of range (n=" + std::to_string(n) + ")", at);
      return Expr::variable(idx - 1);
    }
    if (name == "sqrt" || name == "abs") {
      expect('(', "'('");
      auto arg = expr();
      expect(')', "')'");
      return name == "sqrt" ? Expr::sqrt_of(arg) : Expr::abs_of(arg);
    }
    if (name == "min" || name == "max") {
      expect('(', "'('");
      auto l = expr();
      expect(',', "','");
      auto r = expr();
      expect(')', "')'");
      return name == "min" ? Expr::min_of(l, r) : Expr::max_of(l, r);
    }
    if (name == "if") {
      expect('(', "'('");
      auto cl = expr();
      skip_ws();
      CmpOp op;
      if (accept('<')) {
        op = accept('=') ? CmpOp::Le : CmpOp::Lt;
      } else if (accept('>')) {
        op = accept('=') ? CmpOp::Ge : CmpOp::Gt;
      } else {
        fail("expected comparison (< <= > >=)", pos);
      }
      auto cr = expr();
      expect(',', "','");
      auto t = expr();
      expect(',', "','");
      auto f = expr();
      expect(')', "')'");
      return Expr::cond(op, cl, cr, t, f);
    }
    fail("unknown identifier '" + name + "'", at);
  }
};

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

ExprPtr parse_expr(std::string_view text, int n) {
  std::string owned(text);  // strtod needs a terminated buffer
  Parser p(owned, n);
  return p.parse();
}

}  // namespace tde
