#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cartan/types.hpp"

namespace cartan {

// Scalar expressions in variables x1..xn. Immutable DAG, exact symbolic
// differentiation. Grammar (parse()):
//   expr   := ('-')? term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' signed_rational)?
//   base   := number | variable | func '(' expr ')' | '(' expr ')'
//   func   in {sin, cos, tan, exp, log, sqrt},  variable := 'x' digit+
//
// bump1 is internal (not parseable): bump1(q) = exp(1 - 1/(1-q)) for q < 1,
// 0 otherwise. C^inf in q, support q <= 1, bump1(0) = 1. Its derivatives
// stay in the family, so metrics built from it differentiate cleanly.

class ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

class Expr {
 public:
  Expr() = default;  // empty; only assignment is valid afterwards
  explicit Expr(ExprPtr n) : node_(std::move(n)) {}

  static Expr number(double v);
  static Expr variable(int index);  // 0-based: variable(0) is x1
  static Expr constant_pi();

  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator*(const Expr& o) const;
  Expr operator/(const Expr& o) const;
  Expr operator-() const;
  Expr pow(long num, long den = 1) const;  // rational exponent num/den

  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);
  static Expr tan(const Expr& a);
  static Expr exp(const Expr& a);
  static Expr log(const Expr& a);
  static Expr sqrt(const Expr& a);
  static Expr bump1(const Expr& q);

  double eval(const double* x) const;
  double eval(const Vec& x) const { return eval(x.data()); }

  /// Exact derivative with respect to x_{index+1}.
  Expr diff(int index) const;

  /// Largest variable index used, plus one (0 for constants).
  int num_vars() const;

  /// Parseable except for bump1 terms, which print as bump1/bump1_d<k>.
  std::string to_string() const;

  bool is_zero() const;
  const ExprNode* node() const { return node_.get(); }

 private:
  ExprPtr node_;
};

/// Parses the grammar above. Throws invalid_input with a character offset
/// on syntax errors. max_var limits acceptable variable indices (0 = any).
Expr parse_expr(const std::string& text, int max_var = 0);

}  // namespace cartan
