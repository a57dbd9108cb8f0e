#include "cartan/bch.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "cartan/chart.hpp"
#include "cartan/curvature.hpp"

namespace cartan {
namespace {

using WordPoly = std::map<std::string, Rational>;

bool is_lyndon(const std::string& w) {
  if (w.empty()) return false;
  for (size_t i = 1; i < w.size(); ++i)
    if (w.substr(i) <= w) return false;  // every proper suffix strictly greater
  return true;
}

void axpy(WordPoly& dst, const Rational& c, const WordPoly& src) {
  if (c == 0) return;
  for (const auto& [w, v] : src) {
    Rational& t = dst[w];
    t += c * v;
    if (t == 0) dst.erase(w);
  }
}

WordPoly mul(const WordPoly& a, const WordPoly& b, int max_len) {
  WordPoly out;
  for (const auto& [wa, ca] : a)
    for (const auto& [wb, cb] : b) {
      if (int(wa.size() + wb.size()) > max_len) continue;
      Rational& t = out[wa + wb];
      t += ca * cb;
      if (t == 0) out.erase(wa + wb);
    }
  return out;
}

// Word expansion of the Lyndon bracketing of w. Lex-least word is w itself,
// with coefficient 1; all other words are lex-greater.
const WordPoly& lyndon_expansion(const std::string& w) {
  static std::map<std::string, WordPoly> memo;
  auto it = memo.find(w);
  if (it != memo.end()) return it->second;
  WordPoly e;
  if (w.size() == 1) {
    e[w] = 1;
  } else {
    auto [u, v] = lyndon_factorize(w);
    const WordPoly eu = lyndon_expansion(u);
    const WordPoly ev = lyndon_expansion(v);
    e = mul(eu, ev, int(w.size()));
    axpy(e, -1, mul(ev, eu, int(w.size())));
  }
  return memo.emplace(w, std::move(e)).first->second;
}

// Rewrites a homogeneous Lie element (given by its word expansion) in Lyndon
// coordinates, by lex-triangular elimination. Throws if the input is not a
// Lie element of the free algebra.
std::map<std::string, Rational> reduce_to_lyndon(WordPoly p) {
  std::map<std::string, Rational> coords;
  while (!p.empty()) {
    const auto [w, c] = *p.begin();
    if (!is_lyndon(w))
      throw std::logic_error("reduce_to_lyndon: leading word " + w +
                             " is not Lyndon; input is not a Lie element");
    coords[w] = c;
    axpy(p, -c, lyndon_expansion(w));
  }
  return coords;
}

Rational factorial(int n) {
  Rational f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::pair<std::string, std::string> lyndon_factorize(const std::string& word) {
  if (word.size() < 2)
    throw invalid_input("lyndon_factorize: need at least two letters");
  // v = lexicographically least proper suffix (it is Lyndon).
  size_t best = 1;
  for (size_t i = 2; i < word.size(); ++i)
    if (word.substr(i) < word.substr(best)) best = i;
  return {word.substr(0, best), word.substr(best)};
}

std::string lyndon_bracket_string(const std::string& word) {
  if (word.size() == 1) return word;
  auto [u, v] = lyndon_factorize(word);
  return "[" + lyndon_bracket_string(u) + "," + lyndon_bracket_string(v) + "]";
}

std::string BracketPolynomial::to_string() const {
  if (terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [w, c] : terms) {
    if (!first) os << " + ";
    first = false;
    os << c << "*" << lyndon_bracket_string(w);
  }
  return os.str();
}

std::vector<BracketPolynomial> bch_terms(int k_max) {
  if (k_max < 1 || k_max > 8)
    throw invalid_input("bch_terms: k_max must be in 1..8");
  // P = e^x e^y - 1 truncated past degree k_max.
  WordPoly P;
  for (int i = 0; i <= k_max; ++i)
    for (int j = 0; j + i <= k_max; ++j) {
      if (i + j == 0) continue;
      P[std::string(i, 'x') + std::string(j, 'y')] =
          1 / (factorial(i) * factorial(j));
    }
  // Z = log(1 + P) = sum (-1)^{n+1} P^n / n.
  WordPoly Z, Pn = P;
  for (int n = 1; n <= k_max; ++n) {
    if (n > 1) Pn = mul(Pn, P, k_max);
    axpy(Z, Rational((n % 2) ? 1 : -1, n), Pn);
  }
  std::vector<BracketPolynomial> out;
  for (int d = 1; d <= k_max; ++d) {
    WordPoly Zd;
    for (const auto& [w, c] : Z)
      if (int(w.size()) == d) Zd[w] = c;
    BracketPolynomial poly;
    poly.order = d;
    const Rational scale = factorial(d);
    for (auto& [w, c] : reduce_to_lyndon(std::move(Zd)))
      poly.terms[w] = c * scale;
    out.push_back(std::move(poly));
  }
  return out;
}

Vec evaluate_in_algebra(const BracketPolynomial& poly, const LieAlgebraSpec& lie,
                        const Vec& X, const Vec& Y) {
  std::map<std::string, Vec> memo;
  std::function<const Vec&(const std::string&)> value =
      [&](const std::string& w) -> const Vec& {
    auto it = memo.find(w);
    if (it != memo.end()) return it->second;
    Vec v;
    if (w == "x")
      v = X;
    else if (w == "y")
      v = Y;
    else {
      auto [u, s] = lyndon_factorize(w);
      v = lie.bracket(value(u), value(s));
    }
    return memo.emplace(w, std::move(v)).first->second;
  };
  Vec out = Vec::Zero(lie.dim());
  for (const auto& [w, c] : poly.terms) out += c.convert_to<double>() * value(w);
  return out;
}

BracketPolynomial swap_letters(const BracketPolynomial& poly) {
  WordPoly words;
  for (const auto& [w, c] : poly.terms) axpy(words, c, lyndon_expansion(w));
  WordPoly swapped;
  for (const auto& [w, c] : words) {
    std::string s = w;
    for (char& ch : s) ch = (ch == 'x') ? 'y' : 'x';
    swapped[s] = c;
  }
  BracketPolynomial out;
  out.order = poly.order;
  for (auto& [w, c] : reduce_to_lyndon(std::move(swapped))) out.terms[w] = c;
  return out;
}

TaylorFitResult taylor_fit_zeta(const CartanChart& chart, const Vec& b,
                                const Vec& X, const Vec& Y, int k_max,
                                double h, int half_points, double ode_tol) {
  if (k_max < 1) throw invalid_input("taylor_fit_zeta: k_max must be >= 1");
  if (half_points < k_max + 2)
    throw invalid_input("taylor_fit_zeta: need half_points >= k_max + 2");
  const int N = chart.dim();
  const int rows = 2 * half_points;
  // Guard columns absorb orders above k_max so they do not alias downward.
  const int cols = std::min(k_max + 4, rows - 2);

  FlowOptions fopts;
  fopts.tol = ode_tol;
  LogOptions lopts;
  lopts.ode_tol = ode_tol;
  lopts.tol = std::max(1e-12, 10 * ode_tol);

  std::vector<double> ts(rows);
  Mat Z(rows, N);
  for (int side = 0; side < 2; ++side) {
    Vec warm;  // previous log, rescaled as Newton seed for the next t
    double prev_t = 0;
    for (int j = 1; j <= half_points; ++j) {
      const double t = (side ? -j : j) * h;
      const int row = side * half_points + j - 1;
      ts[row] = t;
      const Vec mid = flow(chart, b, t * X, 1.0, fopts).endpoint;
      const Vec end = flow(chart, mid, t * Y, 1.0, fopts).endpoint;
      lopts.initial_guess =
          (warm.size() == N) ? Vec(warm * (t / prev_t)) : Vec(t * (X + Y));
      warm = chart_log(chart, b, end, lopts);
      prev_t = t;
      Z.row(row) = warm.transpose();
    }
  }

  // Column-scaled Vandermonde in t (no constant column: zeta(0,0) = 0).
  const double s = h * half_points;
  Mat A(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double p = 1.0;
    for (int k = 1; k <= cols; ++k) {
      p *= ts[r] / s;
      A(r, k - 1) = p;
    }
  }
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  Mat C = qr.solve(Z);                    // scaled coefficients, per component
  const Mat resid = A * C - Z;
  const Mat gram_inv = (A.transpose() * A).inverse();

  TaylorFitResult out;
  out.rms_residual = std::sqrt(resid.squaredNorm() / (rows * N));
  const int dof = std::max(1, rows - cols);
  double kfact = 1.0;
  double spow = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    kfact *= k;
    spow *= s;
    out.z.push_back(kfact / spow * C.row(k - 1).transpose());
    double err2 = 0;
    for (int i = 0; i < N; ++i)
      err2 += gram_inv(k - 1, k - 1) * resid.col(i).squaredNorm() / dof;
    out.z_err.push_back(kfact / spow * std::sqrt(err2));
  }
  return out;
}

namespace {

// ((X~+Y~).K)(X,Y) at b: first curvature jet contracted against X+Y, then
// pair-evaluated on (X,Y) over the base slots.
Vec curvature_derivative_pair(const CartanChart& chart, const Vec& b,
                              const Vec& X, const Vec& Y) {
  const auto& lie = *chart.lie;
  const int N = lie.dim();
  const int n = lie.n();
  const CurvatureJet jet = omega_jet(chart, b, 1);
  const Vec dK = contract(jet, 1, Vec(X + Y));
  Vec out = Vec::Zero(N);
  for (int a = 0; a < n; ++a)
    for (int c = a + 1; c < n; ++c)
      out += (X[a] * Y[c] - X[c] * Y[a]) *
             dK.segment(lie.pair_index(a, c) * N, N);
  return out;
}

// Field of chart-coordinate tangent vectors; supports nested FD brackets.
using Field = std::function<Vec(const Vec&)>;

Field constant_field(const CartanChart& chart, const Vec& X) {
  return [&chart, X](const Vec& q) -> Vec {
    return chart.frame_at(q) * X;
  };
}

// [F,G](q) = DG(q) F(q) - DF(q) G(q), directional central differences.
Field bracket_field(Field F, Field G, double h) {
  return [F, G, h](const Vec& q) -> Vec {
    auto dir = [&](const Field& T, const Vec& u) -> Vec {
      const double nu = u.norm();
      if (nu == 0) return Vec::Zero(q.size());
      const Vec e = u / nu;
      return nu / (12 * h) *
             (-T(q + 2 * h * e) + 8 * T(q + h * e) - 8 * T(q - h * e) +
              T(q - 2 * h * e));
    };
    return dir(G, F(q)) - dir(F, G(q));
  };
}

// Step grows with nesting depth: each level divides noise by h again.
double word_step(size_t len) {
  switch (len) {
    case 2: return 2e-3;
    case 3: return 1e-2;
    default: return 3e-2;
  }
}

Vec curved_word_value(const CartanChart& chart, const std::string& w,
                      const Vec& b, const Vec& X, const Vec& Y,
                      std::map<std::string, Vec>& memo) {
  auto it = memo.find(w);
  if (it != memo.end()) return it->second;
  std::function<Field(const std::string&)> make = [&](const std::string& u) {
    if (u == "x") return constant_field(chart, X);
    if (u == "y") return constant_field(chart, Y);
    auto [l, r] = lyndon_factorize(u);
    return bracket_field(make(l), make(r), word_step(u.size()));
  };
  Vec val = chart.omega_at(b) * make(w)(b);
  memo.emplace(w, val);
  return val;
}

}  // namespace

BchVerifyReport verify_prop_bch(const CartanChart& chart, const Vec& b,
                                const Vec& X, const Vec& Y, int k_max,
                                double tol) {
  const int k_eff = chart.flat_model ? k_max : std::min(k_max, 3);
  const auto terms = bch_terms(k_eff);
  // Inhomogeneous charts: the series coefficients grow with the local
  // curvature-variation scale, so the fit grid shrinks well below it
  // (wide spans alias high orders downward).
  const double h = chart.flat_model ? 5e-2 : 5e-3;
  const auto fit = taylor_fit_zeta(chart, b, X, Y, k_eff, h);

  std::map<std::string, Vec> memo;
  BchVerifyReport report;
  report.passed = true;
  for (int k = 1; k <= k_eff; ++k) {
    BchOrderCheck chk;
    chk.k = k;
    chk.z_fit = fit.z[k - 1];
    if (chart.flat_model) {
      chk.a_eval = evaluate_in_algebra(terms[k - 1], *chart.lie, X, Y);
    } else {
      chk.a_eval = Vec::Zero(chart.dim());
      for (const auto& [w, c] : terms[k - 1].terms)
        chk.a_eval += c.convert_to<double>() *
                      curved_word_value(chart, w, b, X, Y, memo);
      if (k == 3) {
        // The order-3 recursion freezes z_2 into an omega-constant field;
        // trading it for the honest bracket field [X~,Y~] leaves the
        // derivative of their difference behind:
        //   z_3 = omega_b(a_3(X~,Y~)) - 3/2 ((X~+Y~).K)(X,Y).
        // The correction vanishes exactly where DK does (flat models,
        // locally symmetric charts).
        chk.a_eval -= 1.5 * curvature_derivative_pair(chart, b, X, Y);
      }
    }
    chk.rel_err = (chk.z_fit - chk.a_eval).norm() /
                  std::max(1.0, chk.a_eval.norm());
    chk.pass = chk.rel_err <= tol;
    report.passed = report.passed && chk.pass;
    report.orders.push_back(std::move(chk));
  }
  return report;
}

}  // namespace cartan
