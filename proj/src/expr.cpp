#include "cartan/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace cartan {

enum class Op {
  Num, Var, Add, Sub, Mul, Div, Neg, Pow,
  Sin, Cos, Tan, Exp, Log, Sqrt, Bump
};

class ExprNode {
 public:
  Op op;
  double value = 0.0;       // Num
  int var = 0;              // Var
  long pnum = 1, pden = 1;  // Pow exponent
  int bump_order = 0;       // Bump: derivative order
  ExprPtr a, b;

  explicit ExprNode(Op o) : op(o) {}
};

namespace {

ExprPtr make_num(double v) {
  auto n = std::make_shared<ExprNode>(Op::Num);
  n->value = v;
  return n;
}

bool is_const(const ExprPtr& n, double v) {
  return n->op == Op::Num && n->value == v;
}

// Derivatives of bump1 stay of the form exp(1-w) * R_k(w), w = 1/(1-q).
// R_0 = 1, R_{k+1}(w) = (R_k'(w) - R_k(w)) * w^2.
const std::vector<double>& bump_poly(int k) {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> t;
    t.push_back({1.0});
    for (int ord = 1; ord <= 14; ++ord) {
      const auto& r = t.back();
      std::vector<double> d(r.size() + 1, 0.0);  // R' - R, before the shift
      for (size_t j = 0; j < r.size(); ++j) {
        if (j + 1 < r.size()) d[j] += (double)(j + 1) * r[j + 1];
        d[j] -= r[j];
      }
      std::vector<double> next(r.size() + 2, 0.0);
      for (size_t j = 0; j < r.size(); ++j) next[j + 2] = d[j];
      t.push_back(std::move(next));
    }
    return t;
  }();
  if (k < 0 || k >= (int)table.size())
    throw numerical_error("bump1 derivative order out of range");
  return table[k];
}

double eval_bump(int k, double q) {
  if (q >= 1.0) return 0.0;
  const double w = 1.0 / (1.0 - q);
  const double e = std::exp(1.0 - w);
  if (e == 0.0) return 0.0;
  const auto& poly = bump_poly(k);
  double p = 0.0;
  for (size_t j = poly.size(); j-- > 0;) p = p * w + poly[j];
  return e * p;
}

double eval_pow(double base, long num, long den) {
  if (den == 1) {
    switch (num) {
      case 0: return 1.0;
      case 1: return base;
      case 2: return base * base;
      case 3: return base * base * base;
      case 4: { double s = base * base; return s * s; }
      case -1: return 1.0 / base;
      case -2: return 1.0 / (base * base);
      case -3: return 1.0 / (base * base * base);
      case -4: { double s = base * base; return 1.0 / (s * s); }
      default: break;
    }
  }
  return std::pow(base, (double)num / (double)den);
}

}  // namespace

double Expr::eval(const double* x) const {
  const ExprNode* n = node_.get();
  switch (n->op) {
    case Op::Num: return n->value;
    case Op::Var: return x[n->var];
    case Op::Add: return Expr(n->a).eval(x) + Expr(n->b).eval(x);
    case Op::Sub: return Expr(n->a).eval(x) - Expr(n->b).eval(x);
    case Op::Mul: return Expr(n->a).eval(x) * Expr(n->b).eval(x);
    case Op::Div: return Expr(n->a).eval(x) / Expr(n->b).eval(x);
    case Op::Neg: return -Expr(n->a).eval(x);
    case Op::Pow: return eval_pow(Expr(n->a).eval(x), n->pnum, n->pden);
    case Op::Sin: return std::sin(Expr(n->a).eval(x));
    case Op::Cos: return std::cos(Expr(n->a).eval(x));
    case Op::Tan: return std::tan(Expr(n->a).eval(x));
    case Op::Exp: return std::exp(Expr(n->a).eval(x));
    case Op::Log: return std::log(Expr(n->a).eval(x));
    case Op::Sqrt: return std::sqrt(Expr(n->a).eval(x));
    case Op::Bump: return eval_bump(n->bump_order, Expr(n->a).eval(x));
  }
  return 0.0;
}

Expr Expr::number(double v) { return Expr(make_num(v)); }

Expr Expr::variable(int index) {
  if (index < 0) throw invalid_input("variable index must be >= 0");
  auto n = std::make_shared<ExprNode>(Op::Var);
  n->var = index;
  return Expr(n);
}

Expr Expr::constant_pi() { return number(M_PI); }

bool Expr::is_zero() const { return is_const(node_, 0.0); }

Expr Expr::operator+(const Expr& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  if (node_->op == Op::Num && o.node_->op == Op::Num)
    return number(node_->value + o.node_->value);
  auto n = std::make_shared<ExprNode>(Op::Add);
  n->a = node_; n->b = o.node_;
  return Expr(n);
}

Expr Expr::operator-(const Expr& o) const {
  if (o.is_zero()) return *this;
  if (is_zero()) return -o;
  if (node_->op == Op::Num && o.node_->op == Op::Num)
    return number(node_->value - o.node_->value);
  auto n = std::make_shared<ExprNode>(Op::Sub);
  n->a = node_; n->b = o.node_;
  return Expr(n);
}

Expr Expr::operator*(const Expr& o) const {
  if (is_zero() || o.is_zero()) return number(0.0);
  if (is_const(node_, 1.0)) return o;
  if (is_const(o.node_, 1.0)) return *this;
  if (node_->op == Op::Num && o.node_->op == Op::Num)
    return number(node_->value * o.node_->value);
  auto n = std::make_shared<ExprNode>(Op::Mul);
  n->a = node_; n->b = o.node_;
  return Expr(n);
}

Expr Expr::operator/(const Expr& o) const {
  if (is_zero()) return number(0.0);
  if (is_const(o.node_, 1.0)) return *this;
  if (node_->op == Op::Num && o.node_->op == Op::Num && o.node_->value != 0.0)
    return number(node_->value / o.node_->value);
  auto n = std::make_shared<ExprNode>(Op::Div);
  n->a = node_; n->b = o.node_;
  return Expr(n);
}

Expr Expr::operator-() const {
  if (node_->op == Op::Num) return number(-node_->value);
  if (node_->op == Op::Neg) return Expr(node_->a);
  auto n = std::make_shared<ExprNode>(Op::Neg);
  n->a = node_;
  return Expr(n);
}

Expr Expr::pow(long num, long den) const {
  if (den == 0) throw invalid_input("zero denominator in exponent");
  if (den < 0) { den = -den; num = -num; }
  if (num == 0) return number(1.0);
  if (num == 1 && den == 1) return *this;
  if (node_->op == Op::Num) {
    double v = eval_pow(node_->value, num, den);
    if (std::isfinite(v)) return number(v);
  }
  auto n = std::make_shared<ExprNode>(Op::Pow);
  n->a = node_; n->pnum = num; n->pden = den;
  return Expr(n);
}

namespace {
// Constant folding for unary functions. Returns false when the argument is
// not a literal or the folded value is not finite (keep the node so error
// reporting happens at evaluation sites with context).
bool fold_fun(Op op, double x, double* out) {
  double v;
  switch (op) {
    case Op::Sin: v = std::sin(x); break;
    case Op::Cos: v = std::cos(x); break;
    case Op::Tan: v = std::tan(x); break;
    case Op::Exp: v = std::exp(x); break;
    case Op::Log: v = std::log(x); break;
    case Op::Sqrt: v = std::sqrt(x); break;
    case Op::Bump: v = eval_bump(0, x); break;
    default: return false;
  }
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}
}  // namespace

#define CARTAN_FUN(Name, OpName)                                      \
  Expr Expr::Name(const Expr& a) {                                    \
    double folded;                                                    \
    if (a.node_->op == Op::Num &&                                     \
        fold_fun(Op::OpName, a.node_->value, &folded))                \
      return number(folded);                                          \
    auto n = std::make_shared<ExprNode>(Op::OpName);                  \
    n->a = a.node_;                                                   \
    return Expr(n);                                                   \
  }

CARTAN_FUN(sin, Sin)
CARTAN_FUN(cos, Cos)
CARTAN_FUN(tan, Tan)
CARTAN_FUN(exp, Exp)
CARTAN_FUN(log, Log)
CARTAN_FUN(sqrt, Sqrt)
#undef CARTAN_FUN

Expr Expr::bump1(const Expr& q) {
  if (q.node_->op == Op::Num) return number(eval_bump(0, q.node_->value));
  auto n = std::make_shared<ExprNode>(Op::Bump);
  n->a = q.node_;
  n->bump_order = 0;
  return Expr(n);
}

Expr Expr::diff(int index) const {
  const ExprNode* n = node_.get();
  Expr A = n->a ? Expr(n->a) : Expr();
  Expr B = n->b ? Expr(n->b) : Expr();
  switch (n->op) {
    case Op::Num: return number(0.0);
    case Op::Var: return number(n->var == index ? 1.0 : 0.0);
    case Op::Add: return A.diff(index) + B.diff(index);
    case Op::Sub: return A.diff(index) - B.diff(index);
    case Op::Mul: return A.diff(index) * B + A * B.diff(index);
    case Op::Div:
      return (A.diff(index) * B - A * B.diff(index)) / (B * B);
    case Op::Neg: return -A.diff(index);
    case Op::Pow: {
      // d/dx b^(p/q) = (p/q) b^(p/q - 1) b'
      Expr coeff = number((double)n->pnum / (double)n->pden);
      return coeff * A.pow(n->pnum - n->pden, n->pden) * A.diff(index);
    }
    case Op::Sin: return cos(A) * A.diff(index);
    case Op::Cos: return -(sin(A) * A.diff(index));
    case Op::Tan: return (number(1.0) + tan(A) * tan(A)) * A.diff(index);
    case Op::Exp: return Expr(node_) * A.diff(index);
    case Op::Log: return A.diff(index) / A;
    case Op::Sqrt: return A.diff(index) / (number(2.0) * Expr(node_));
    case Op::Bump: {
      auto d = std::make_shared<ExprNode>(Op::Bump);
      d->a = n->a;
      d->bump_order = n->bump_order + 1;
      return Expr(d) * A.diff(index);
    }
  }
  return number(0.0);
}

int Expr::num_vars() const {
  const ExprNode* n = node_.get();
  int m = 0;
  if (n->op == Op::Var) m = n->var + 1;
  if (n->a) m = std::max(m, Expr(n->a).num_vars());
  if (n->b) m = std::max(m, Expr(n->b).num_vars());
  return m;
}

std::string Expr::to_string() const {
  const ExprNode* n = node_.get();
  std::ostringstream os;
  os.precision(17);
  auto s = [](const ExprPtr& p) { return Expr(p).to_string(); };
  switch (n->op) {
    case Op::Num:
      if (n->value < 0) os << "(" << n->value << ")";
      else os << n->value;
      break;
    case Op::Var: os << "x" << (n->var + 1); break;
    case Op::Add: os << "(" << s(n->a) << "+" << s(n->b) << ")"; break;
    case Op::Sub: os << "(" << s(n->a) << "-" << s(n->b) << ")"; break;
    case Op::Mul: os << "(" << s(n->a) << "*" << s(n->b) << ")"; break;
    case Op::Div: os << "(" << s(n->a) << "/" << s(n->b) << ")"; break;
    case Op::Neg: os << "(0-" << s(n->a) << ")"; break;
    case Op::Pow:
      os << "(" << s(n->a) << ")^";
      if (n->pden == 1) os << n->pnum;
      else os << n->pnum << "/" << n->pden;
      break;
    case Op::Sin: os << "sin(" << s(n->a) << ")"; break;
    case Op::Cos: os << "cos(" << s(n->a) << ")"; break;
    case Op::Tan: os << "tan(" << s(n->a) << ")"; break;
    case Op::Exp: os << "exp(" << s(n->a) << ")"; break;
    case Op::Log: os << "log(" << s(n->a) << ")"; break;
    case Op::Sqrt: os << "sqrt(" << s(n->a) << ")"; break;
    case Op::Bump:
      if (n->bump_order == 0) os << "bump1(" << s(n->a) << ")";
      else os << "bump1_d" << n->bump_order << "(" << s(n->a) << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------- parser --

namespace {

struct Parser {
  std::string text;
  size_t pos = 0;
  int max_var;

  explicit Parser(std::string t, int mv) : text(std::move(t)), max_var(mv) {
    // Normalize U+2212 (minus sign) to ASCII '-', preserving offsets.
    const std::string u2212 = "\xe2\x88\x92";
    size_t p;
    while ((p = text.find(u2212)) != std::string::npos)
      text.replace(p, 3, " - ");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw invalid_input("parse error at position " + std::to_string(pos) +
                        ": " + what);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
  }

  bool peek(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  bool accept(char c) {
    if (peek(c)) { ++pos; return true; }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  Expr expr() {
    bool neg = false;
    skip_ws();
    if (accept('-')) neg = true;
    Expr e = term();
    if (neg) e = -e;
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else break;
    }
    return e;
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) e = e * factor();
      else if (accept('/')) e = e / factor();
      else break;
    }
    return e;
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      auto [num, den] = signed_rational();
      b = b.pow(num, den);
    }
    return b;
  }

  std::pair<long, long> signed_rational() {
    skip_ws();
    bool neg = accept('-');
    long num = integer("exponent");
    long den = 1;
    if (accept('/')) den = integer("exponent denominator");
    return {neg ? -num : num, den};
  }

  long integer(const char* what) {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
    if (pos == start) fail(std::string("expected ") + what);
    return std::strtol(text.substr(start, pos - start).c_str(), nullptr, 10);
  }

  Expr base() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (std::isdigit((unsigned char)c) || c == '.') return number();
    if (c == '(') {
      ++pos;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha((unsigned char)c)) return identifier();
    fail("unexpected character");
  }

  Expr number() {
    size_t start = pos;
    while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
    }
    if (pos == start || (pos == start + 1 && text[start] == '.'))
      fail("malformed number");
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      size_t mark = pos++;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
      if (pos < text.size() && std::isdigit((unsigned char)text[pos])) {
        while (pos < text.size() && std::isdigit((unsigned char)text[pos]))
          ++pos;
      } else {
        pos = mark;  // not an exponent suffix; leave it for the caller
      }
    }
    return Expr::number(std::strtod(text.substr(start, pos - start).c_str(),
                                    nullptr));
  }

  Expr identifier() {
    size_t start = pos;
    while (pos < text.size() && (std::isalnum((unsigned char)text[pos])))
      ++pos;
    std::string id = text.substr(start, pos - start);
    if (id[0] == 'x' && id.size() > 1 &&
        std::all_of(id.begin() + 1, id.end(),
                    [](char ch) { return std::isdigit((unsigned char)ch); })) {
      int idx = std::atoi(id.c_str() + 1);
      if (idx < 1) { pos = start; fail("variable indices start at x1"); }
      if (max_var > 0 && idx > max_var) {
        pos = start;
        fail("variable " + id + " exceeds dimension " +
             std::to_string(max_var));
      }
      return Expr::variable(idx - 1);
    }
    Expr arg = [&] {
      expect('(');
      Expr e = expr();
      expect(')');
      return e;
    }();
    if (id == "sin") return Expr::sin(arg);
    if (id == "cos") return Expr::cos(arg);
    if (id == "tan") return Expr::tan(arg);
    if (id == "exp") return Expr::exp(arg);
    if (id == "log") return Expr::log(arg);
    if (id == "sqrt") return Expr::sqrt(arg);
    pos = start;
    fail("unknown function '" + id + "'");
  }
};

}  // namespace

Expr parse_expr(const std::string& text, int max_var) {
  Parser p(text, max_var);
  Expr e = p.expr();
  if (!p.at_end()) p.fail("trailing input");
  return e;
}

}  // namespace cartan
