#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "cartan/chart.hpp"
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

}  // namespace

TEST_CASE("omega-constant fields: zero, linearity, frame consistency") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << 0.1, 0.2, 0.15;
  CHECK(chart.omega_constant_field(b, Vec::Zero(3)).norm() == 0.0);
  std::mt19937 rng(3);
  Vec X = random_unit(3, rng), Y = random_unit(3, rng);
  Vec lin = chart.omega_constant_field(b, Vec(2.0 * X - 0.5 * Y));
  Vec parts = 2.0 * chart.omega_constant_field(b, X) -
              0.5 * chart.omega_constant_field(b, Y);
  CHECK((lin - parts).norm() <= 1e-12);
  // frame columns are the coordinate-basis fields; W recovers coordinates
  Mat F = chart.frame_at(b), W = chart.omega_at(b);
  CHECK((W * F - Mat::Identity(3, 3)).norm() <= 1e-10);
  CHECK((W * chart.omega_constant_field(b, X) - X).norm() <= 1e-10);
  CHECK(chart.condition_at(b) >= 1.0);
  CHECK(chart.condition_at(b) < 1e8);
}

TEST_CASE("Maurer-Cartan at the identity is the identity map") {
  CartanChart chart = klein_chart("so3");
  Vec e = Vec::Zero(3);
  std::mt19937 rng(5);
  Vec X = random_unit(3, rng);
  CHECK((chart.omega_constant_field(e, X) - X).norm() <= 1e-12);
}

TEST_CASE("flow basics: t = 0, group law, reversibility") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << -0.2, 0.1, 0.05;
  std::mt19937 rng(7);
  Vec X = random_unit(3, rng);

  FlowOptions fo;
  fo.with_pushforward = true;
  FlowResult zero = flow(chart, b, X, 0.0, fo);
  CHECK((zero.endpoint - b).norm() <= 1e-14);
  CHECK((zero.pushforward - Mat::Identity(3, 3)).norm() <= 1e-12);

  const double s = 0.12, t = 0.2, tol = 1e-10;
  Vec two_leg = flow(chart, flow(chart, b, X, s).endpoint, X, t).endpoint;
  Vec one_leg = flow(chart, b, X, s + t).endpoint;
  CHECK((two_leg - one_leg).norm() <= 10 * tol);

  Vec back = flow(chart, flow(chart, b, X, t).endpoint, X, -t).endpoint;
  CHECK((back - b).norm() <= 10 * tol);

  FlowResult fr = flow(chart, b, X, t);
  CHECK(fr.diag.accepted_steps > 0);
  CHECK(fr.diag.max_omega_residual <= 1e-8);
}

TEST_CASE("Klein flows are group translations (matrix oracle)") {
  for (const char* name : {"so3", "sl2", "heis3"}) {
    CAPTURE(name);
    CartanChart chart = klein_chart(name);
    auto basis = builtin_matrix_basis(name);
    std::mt19937 rng(11);
    Vec b = 0.2 * random_unit(3, rng), X = random_unit(3, rng);
    const double t = 0.35;
    Vec q = flow(chart, b, X, t).endpoint;
    Mat want = Mat(realize(basis, b).exp() * realize(basis, Vec(t * X)).exp());
    CHECK((Mat(realize(basis, q).exp()) - want).norm() <= 1e-9);
  }
}

TEST_CASE("pushforward and sensitivity match finite differences") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << 0.15, -0.1, 0.1;
  std::mt19937 rng(13);
  Vec X = random_unit(3, rng);
  const double t = 0.3, h = 1e-5;

  FlowOptions fo;
  fo.with_pushforward = true;
  fo.with_sensitivity = true;
  FlowResult fr = flow(chart, b, X, t, fo);

  Mat fd(3, 3);
  for (int i = 0; i < 3; ++i) {
    Vec bp = b + h * Vec::Unit(3, i), bm = b - h * Vec::Unit(3, i);
    fd.col(i) =
        (flow(chart, bp, X, t).endpoint - flow(chart, bm, X, t).endpoint) /
        (2 * h);
  }
  CHECK((fr.pushforward - fd).norm() / fd.norm() <= 1e-5);
  CHECK(std::abs(fr.pushforward.determinant()) > 1e-6);

  Mat fds(3, 3);
  for (int i = 0; i < 3; ++i) {
    Vec Xp = X + h * Vec::Unit(3, i), Xm = X - h * Vec::Unit(3, i);
    fds.col(i) =
        (flow(chart, b, Xp, t).endpoint - flow(chart, b, Xm, t).endpoint) /
        (2 * h);
  }
  CHECK((fr.sensitivity - fds).norm() / (1 + fds.norm()) <= 1e-5);
}

TEST_CASE("leaving the chart raises domain_exit with the exit time") {
  CartanChart chart = builtin_chart("revolution");
  Vec b(3);
  b << 0.6, 0.0, 0.0;
  Vec X = -Vec::Unit(3, 0);  // head down the meridian, r = 0.5 wall
  try {
    flow(chart, b, X, 1.0);
    FAIL("expected domain_exit");
  } catch (const domain_exit& e) {
    CHECK(e.exit_time > 0.02);
    CHECK(e.exit_time < 0.5);
  }
}

TEST_CASE("chart_log inverts the exponential") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << 0.05, 0.25, -0.1;
  CHECK(chart_log(chart, b, b).norm() <= 1e-12);
  std::mt19937 rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    Vec X = 0.25 * random_unit(3, rng);
    Vec b1 = flow(chart, b, X, 1.0).endpoint;
    Vec got = chart_log(chart, b, b1);
    CHECK((got - X).norm() <= 1e-8);
    // exp(log) closes the loop
    Vec q = flow(chart, b, got, 1.0).endpoint;
    CHECK((q - b1).norm() <= 1e-9);
  }
}

TEST_CASE("Klein chart_log matches the matrix logarithm") {
  CartanChart chart = klein_chart("so3");
  auto basis = builtin_matrix_basis("so3");
  std::mt19937 rng(19);
  Vec b0 = 0.2 * random_unit(3, rng);
  Vec b1 = 0.2 * random_unit(3, rng);
  Vec got = chart_log(chart, b0, b1);
  Mat m0 = realize(basis, b0).exp(), m1 = realize(basis, b1).exp();
  Vec want = decompose(basis, Mat(Mat(m0.inverse() * m1).log()));
  CHECK((got - want).norm() <= 1e-8);
}

TEST_CASE("zeta: right identity, abelian sum, nilpotent closed form") {
  CartanChart flat = klein_chart("r2");
  std::mt19937 rng(23);
  Vec b0 = Vec::Zero(flat.dim());
  {
    Vec X = 0.4 * random_unit(flat.dim(), rng);
    CHECK((zeta(flat, b0, X, Vec(Vec::Zero(flat.dim()))) - X).norm() <= 1e-9);
    Vec Y = 0.4 * random_unit(flat.dim(), rng);
    CHECK((zeta(flat, b0, X, Y) - (X + Y)).norm() <= 1e-9);
  }
  {
    CartanChart heis = klein_chart("heis3");
    Vec b = 0.1 * random_unit(3, rng);
    Vec X = 0.3 * random_unit(3, rng), Y = 0.3 * random_unit(3, rng);
    Vec want = X + Y + 0.5 * heis.lie->bracket(X, Y);
    CHECK((zeta(heis, b, X, Y) - want).norm() <= 1e-8);
  }
}

TEST_CASE("vertical flows fix the base and realize frame rotation") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << 0.3, -0.2, 0.1;
  Vec Xp = Vec::Zero(3);
  Xp[2] = 1.0;  // so(2) generator
  CHECK((vertical_flow(chart, b, Xp, 0.0) - b).norm() == 0.0);
  const double t = 0.25;
  Vec q = vertical_flow(chart, b, Xp, t);
  CHECK((q.head(2) - b.head(2)).norm() <= 1e-9);
  // exp-coordinates of abelian so(2): the fiber coordinate moves linearly
  CHECK(std::abs(std::abs(q[2] - b[2]) - t) <= 1e-9);
  // and the direction is consistent under doubling
  Vec q2 = vertical_flow(chart, b, Xp, 2 * t);
  CHECK(std::abs(q2[2] - b[2] - 2 * (q[2] - b[2])) <= 1e-9);
}

TEST_CASE("vertical coordinate directions reproduce p elements") {
  // p-adapted frontends: W(b) maps the fiber coordinate field to the
  // corresponding p basis vector, at any frame angle for n = 2
  for (double theta : {0.0, 0.3, -0.5}) {
    CAPTURE(theta);
    CartanChart chart = builtin_chart("bump");
    Vec b(3);
    b << 0.12, -0.07, theta;
    Vec vert = Vec::Unit(3, 2);
    Vec val = chart.omega_at(b) * vert;
    CHECK((val - Vec::Unit(3, 2)).norm() <= 1e-9);
  }
}

TEST_CASE("normal radius estimate supports round trips") {
  CartanChart chart = builtin_chart("sphere2");
  Vec b(3);
  b << 0.1, 0.15, 0.0;
  double r = estimate_normal_radius(chart, b, 8, 2026);
  CHECK(r > 0.05);
  std::mt19937 rng(29);
  for (int trial = 0; trial < 3; ++trial) {
    Vec X = 0.5 * r * random_unit(3, rng);
    Vec b1 = flow(chart, b, X, 1.0).endpoint;
    CHECK((chart_log(chart, b, b1) - X).norm() <= 1e-7);
  }
}

TEST_CASE("points outside the domain are rejected") {
  CartanChart chart = builtin_chart("revolution");
  Vec b(3);
  b << 0.1, 0.15, 0.0;  // r below the chart floor
  CHECK_FALSE(chart.contains(b));
  CHECK_THROWS_AS(chart.require_inside(b), invalid_input);
  Vec ok(3);
  ok << 1.0, 0.1, 0.0;
  CHECK(chart.contains(ok));
  CHECK_NOTHROW(chart.require_inside(ok));
}
