#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tde {

// Thrown by parse_expr; offset is the byte position in the input text.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
  std::size_t offset;
};

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class CmpOp { Lt, Le, Gt, Ge };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree over variables x1..xn: real constants, + - * /,
// ^ with constant exponent, unary minus, sqrt, abs, min, max, and a branch
// node if(lhs CMP rhs, then, else). Derivatives are taken per branch; kinks
// (branch boundaries, |arg| ~ 0 for abs, ties for min/max) are detectable
// pointwise via kink_near.
class Expr {
 public:
  enum class Kind { Constant, Var, Binary, Neg, Sqrt, Abs, Min, Max, Cond };

  Kind kind;
  double value = 0.0;  // Constant payload; for Pow the exponent lives in b
  int var = -1;        // Var payload, 0-based
  BinOp bin_op = BinOp::Add;
  CmpOp cmp_op = CmpOp::Lt;
  ExprPtr a, b;               // operands / children
  ExprPtr cmp_lhs, cmp_rhs;   // Cond comparison operands

  double eval(std::span<const double> x) const;

  // Symbolic partial derivative d/dx_{var0} (0-based). Branch nodes
  // differentiate each branch; the result is exact away from kinks.
  ExprPtr diff(int var0) const;

  // True if some branch boundary / abs argument / min-max tie at x is within
  // tol, i.e. the tree may be non-differentiable within a tol-neighborhood.
  bool kink_near(std::span<const double> x, double tol) const;

  int max_var() const;  // largest 0-based variable index, -1 if none

  std::string to_string() const;

  static ExprPtr constant(double c);
  static ExprPtr variable(int idx0);
  static ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r);
  static ExprPtr neg(ExprPtr e);
  static ExprPtr sqrt_of(ExprPtr e);
  static ExprPtr abs_of(ExprPtr e);
  static ExprPtr min_of(ExprPtr l, ExprPtr r);
  static ExprPtr max_of(ExprPtr l, ExprPtr r);
  static ExprPtr cond(CmpOp op, ExprPtr cl, ExprPtr cr, ExprPtr then_e, ExprPtr else_e);
};

// Parse an expression over x1..xn. Syntax errors, unknown identifiers, and
// variable indexes above n raise ParseError with a byte offset. The exponent
// of '^' must be a variable-free subexpression (folded to a constant).
ExprPtr parse_expr(std::string_view text, int n);

}  // namespace tde
