#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "cartan/bch.hpp"
#include "cartan/frontends.hpp"

using namespace cartan;

namespace {

Vec random_unit(int n, std::mt19937& rng) {
  std::normal_distribution<double> gauss;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  v.normalize();
  return v;
}

Mat realize(const std::vector<Mat>& basis, const Vec& X) {
  Mat M = Mat::Zero(basis[0].rows(), basis[0].cols());
  for (int i = 0; i < (int)basis.size(); ++i) M += X[i] * basis[i];
  return M;
}

Vec decompose(const std::vector<Mat>& basis, const Mat& M) {
  const int N = (int)basis.size(), sz = (int)M.size();
  Mat A(sz, N);
  for (int i = 0; i < N; ++i)
    A.col(i) = Eigen::Map<const Vec>(basis[i].data(), sz);
  return A.colPivHouseholderQr().solve(Eigen::Map<const Vec>(M.data(), sz));
}

// Taylor coefficients (rescaled by k!) of log(e^{tX} e^{tY}) in the matrix
// group, fitted over a symmetric t-grid. Fully independent of the chart and
// flow machinery: only Eigen's exp/log enter.
std::vector<Vec> matrix_group_series(const std::vector<Mat>& basis,
                                     const Vec& X, const Vec& Y, int k_max,
                                     double h = 0.05, int half_points = 8) {
  const int N = (int)basis.size();
  const Mat Xm = realize(basis, X), Ym = realize(basis, Y);
  std::vector<double> ts;
  for (int j = half_points; j >= 1; --j) ts.push_back(-j * h);
  for (int j = 1; j <= half_points; ++j) ts.push_back(j * h);
  const int rows = (int)ts.size();
  // guard columns beyond k_max absorb the series tail instead of letting it
  // alias into the compared coefficients
  const int cols = std::min(k_max + 3, rows - 2);
  Mat A(rows, cols);
  Mat rhs(rows, N);
  for (int r = 0; r < rows; ++r) {
    const double t = ts[r];
    Mat Z = (Mat((t * Xm).exp() * (t * Ym).exp())).log();
    rhs.row(r) = decompose(basis, Z).transpose();
    double p = 1.0, fact = 1.0;
    for (int k = 1; k <= cols; ++k) {
      p *= t;
      fact *= k;
      A(r, k - 1) = p / fact;
    }
  }
  Mat C = A.colPivHouseholderQr().solve(rhs);
  std::vector<Vec> out;
  for (int k = 0; k < k_max; ++k) out.push_back(C.row(k).transpose());
  return out;
}

Rational coeff(const BracketPolynomial& p, const std::string& w) {
  auto it = p.terms.find(w);
  return it == p.terms.end() ? Rational(0) : it->second;
}

}  // namespace

TEST_CASE("low orders are the classical bracket polynomials") {
  auto a = bch_terms(4);
  REQUIRE(a.size() == 4);
  for (int k = 1; k <= 4; ++k) CHECK(a[k - 1].order == k);

  CHECK(a[0].terms.size() == 2);
  CHECK(coeff(a[0], "x") == Rational(1));
  CHECK(coeff(a[0], "y") == Rational(1));

  CHECK(a[1].terms.size() == 1);
  CHECK(coeff(a[1], "xy") == Rational(1));

  CHECK(a[2].terms.size() == 2);
  CHECK(coeff(a[2], "xxy") == Rational(1, 2));
  CHECK(coeff(a[2], "xyy") == Rational(1, 2));

  // classical degree-4 term -[Y,[X,[X,Y]]]/24, i.e. [x,[[x,y],y]]/24;
  // rescaled by 4! it is exactly the xxyy Lyndon basis element
  CHECK(a[3].terms.size() == 1);
  CHECK(coeff(a[3], "xxyy") == Rational(1));
}

TEST_CASE("term keys are Lyndon words of the right degree") {
  auto a = bch_terms(8);
  for (const auto& poly : a) {
    for (const auto& [w, c] : poly.terms) {
      CHECK((int)w.size() == poly.order);
      CHECK(c != 0);
      // Lyndon: strictly smaller than every proper suffix
      for (size_t i = 1; i < w.size(); ++i) CHECK(w < w.substr(i));
      for (char ch : w) CHECK((ch == 'x' || ch == 'y'));
    }
  }
  CHECK_THROWS_AS(bch_terms(9), invalid_input);
  CHECK_THROWS_AS(bch_terms(0), invalid_input);
}

TEST_CASE("letter swap gives the (-1)^(k+1) symmetry") {
  // log(e^x e^y) = -log(e^{-y} e^{-x}) forces a_k(y,x) = (-1)^(k+1) a_k(x,y)
  auto a = bch_terms(6);
  for (const auto& poly : a) {
    BracketPolynomial swapped = swap_letters(poly);
    BracketPolynomial expect = poly;
    if (poly.order % 2 == 0)
      for (auto& [w, c] : expect.terms) c = -c;
    CHECK(swapped == expect);
  }
}

TEST_CASE("lyndon helpers") {
  CHECK(lyndon_bracket_string("x") == "x");
  CHECK(lyndon_bracket_string("xy") == "[x,y]");
  CHECK(lyndon_bracket_string("xxy") == "[x,[x,y]]");
  CHECK(lyndon_factorize("xxyy") == std::pair<std::string, std::string>{"x", "xyy"});
  CHECK(lyndon_factorize("xyyy") == std::pair<std::string, std::string>{"xyy", "y"});
  CHECK(lyndon_factorize("xy") == std::pair<std::string, std::string>{"x", "y"});
  auto a3 = bch_terms(3);
  CHECK(a3[2].to_string().find("[x,[x,y]]") != std::string::npos);
}

TEST_CASE("matrix-group oracle confirms orders 1..5") {
  // truncation of the guarded fit grows toward the guard boundary; the
  // ladder still pins every rational coefficient (smallest gap ~1/720)
  const double tol[5] = {1e-8, 1e-8, 1e-5, 1e-5, 1e-3};
  for (const char* name : {"so3", "sl2", "heis3"}) {
    CAPTURE(name);
    LieAlgebraPtr lie = builtin_algebra(name);
    std::vector<Mat> basis = builtin_matrix_basis(name);
    auto a = bch_terms(5);
    std::mt19937 rng(31);
    for (int trial = 0; trial < 3; ++trial) {
      Vec X = random_unit(3, rng), Y = random_unit(3, rng);
      auto fitted = matrix_group_series(basis, X, Y, 5, 0.03);
      for (int k = 1; k <= 5; ++k) {
        CAPTURE(k);
        Vec want = evaluate_in_algebra(a[k - 1], *lie, X, Y);
        CHECK(rel_err(fitted[k - 1], want) <= tol[k - 1]);
      }
    }
  }
}

TEST_CASE("evaluate_in_algebra is degree-k homogeneous") {
  LieAlgebraPtr lie = builtin_algebra("sl2");
  auto a = bch_terms(4);
  std::mt19937 rng(41);
  Vec X = random_unit(3, rng), Y = random_unit(3, rng);
  const double s = 0.7;
  for (int k = 1; k <= 4; ++k) {
    Vec scaled = evaluate_in_algebra(a[k - 1], *lie, Vec(s * X), Vec(s * Y));
    Vec plain = evaluate_in_algebra(a[k - 1], *lie, X, Y);
    CHECK(rel_err(scaled, Vec(std::pow(s, k) * plain), 1e-12) <= 1e-12);
  }
}

TEST_CASE("two-step nilpotency truncates the series") {
  LieAlgebraPtr lie = builtin_algebra("heis3");
  auto a = bch_terms(5);
  std::mt19937 rng(43);
  Vec X = random_unit(3, rng), Y = random_unit(3, rng);
  CHECK(rel_err(evaluate_in_algebra(a[1], *lie, X, Y), lie->bracket(X, Y),
                1e-12) <= 1e-12);
  for (int k = 3; k <= 5; ++k)
    CHECK(evaluate_in_algebra(a[k - 1], *lie, X, Y).norm() <= 1e-14);
}

TEST_CASE("zeta series on an abelian chart is X + Y and stops") {
  CartanChart chart = klein_chart("r2");
  Vec b = Vec::Zero(chart.dim());
  std::mt19937 rng(47);
  Vec X = random_unit(2, rng), Y = random_unit(2, rng);
  TaylorFitResult fit = taylor_fit_zeta(chart, b, X, Y, 3);
  CHECK((fit.z[0] - (X + Y)).norm() <= 1e-9);
  CHECK(fit.z[1].norm() <= 1e-7);
  CHECK(fit.z[2].norm() <= 1e-5);
  CHECK(fit.rms_residual <= 1e-9);
}

TEST_CASE("zeta series matches the algebra terms on a Klein chart") {
  CartanChart chart = klein_chart("heis3");
  LieAlgebraPtr lie = chart.lie;
  Vec b = Vec::Zero(chart.dim());
  auto a = bch_terms(3);
  std::mt19937 rng(53);
  Vec X = random_unit(3, rng), Y = random_unit(3, rng);
  TaylorFitResult fit = taylor_fit_zeta(chart, b, X, Y, 3);
  for (int k = 1; k <= 3; ++k) {
    Vec want = evaluate_in_algebra(a[k - 1], *lie, X, Y);
    CHECK(rel_err(fit.z[k - 1], want) <= 1e-6);
  }
  BchVerifyReport rep = verify_prop_bch(chart, b, X, Y, 4, 1e-5);
  CHECK(rep.passed);
  REQUIRE(rep.orders.size() == 4);
  for (const auto& chk : rep.orders) CHECK(chk.pass);
}

TEST_CASE("fit errors are reported and small on a clean chart") {
  CartanChart chart = klein_chart("so3");
  Vec b = Vec::Zero(chart.dim());
  std::mt19937 rng(59);
  Vec X = random_unit(3, rng), Y = random_unit(3, rng);
  TaylorFitResult fit = taylor_fit_zeta(chart, b, X, Y, 4);
  REQUIRE(fit.z_err.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(fit.z_err[k] >= 0.0);
    CHECK(fit.z_err[k] <= 1e-4);
  }
}
