#include "cartan/chart.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>

namespace cartan {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

bool CartanChart::contains(const Vec& b) const {
  for (size_t i = 0; i < domain.size(); ++i)
    if (b[i] < domain[i][0] || b[i] > domain[i][1]) return false;
  return true;
}

void CartanChart::require_inside(const Vec& b) const {
  if ((int)b.size() != dim())
    throw invalid_input("chart point has wrong dimension");
  if (!contains(b)) throw invalid_input("point outside chart domain");
}

Mat CartanChart::omega_at(const Vec& b) const {
  Mat W(dim(), dim());
  omega(b.data(), W);
  if (!W.allFinite())
    throw numerical_error("connection form not finite at chart point");
  return W;
}

Mat CartanChart::frame_at(const Vec& b) const {
  Mat W = omega_at(b);
  Eigen::PartialPivLU<Mat> lu(W);
  Mat F = lu.solve(Mat::Identity(dim(), dim()));
  if (!F.allFinite()) throw numerical_error("connection form singular");
  return F;
}

Vec CartanChart::omega_constant_field(const Vec& b, const Vec& X) const {
  Mat W = omega_at(b);
  Vec v = Eigen::PartialPivLU<Mat>(W).solve(X);
  if (!v.allFinite()) throw numerical_error("connection form singular");
  return v;
}

double CartanChart::condition_at(const Vec& b) const {
  Eigen::JacobiSVD<Mat> svd(omega_at(b));
  const Vec& s = svd.singularValues();
  double smin = s[s.size() - 1];
  return smin > 0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

Mat CartanChart::field_jacobian(const Vec& b, const Vec& X) const {
  const int N = dim();
  const double h = fd_step;
  Mat J(N, N);
  Vec q = b;
  for (int k = 0; k < N; ++k) {
    auto probe = [&](double dq) {
      q[k] = b[k] + dq;
      Vec v = omega_constant_field(q, X);
      q[k] = b[k];
      return v;
    };
    J.col(k) = (-probe(2 * h) + 8 * probe(h) - 8 * probe(-h) + probe(-2 * h)) /
               (12 * h);
  }
  return J;
}

namespace {

// Right-hand side of the flow with optional variational blocks.
// State layout: b (N) | pushforward J column-major (N^2) | sensitivity S.
struct FlowSystem {
  const CartanChart& chart;
  Vec X;
  bool with_J, with_S;
  int N;

  void operator()(const State& s, State& dsdt, double) const {
    Eigen::Map<const Vec> b(s.data(), N);
    Mat W(N, N);
    chart.omega(b.data(), W);
    if (!W.allFinite())
      throw numerical_error("connection form not finite along flow");
    Eigen::PartialPivLU<Mat> lu(W);
    Vec v = lu.solve(X);
    if (!v.allFinite()) throw numerical_error("singular W along flow");
    dsdt.resize(s.size());
    Eigen::Map<Vec>(dsdt.data(), N) = v;
    if (!with_J && !with_S) return;

    // A = d/db [ W(b)^{-1} X ], central 4th order
    Mat A(N, N);
    Vec q = b;
    const double h = chart.fd_step;
    Mat Wp(N, N);
    auto field = [&](double dq, int k) {
      q[k] = b[k] + dq;
      chart.omega(q.data(), Wp);
      Vec f = Eigen::PartialPivLU<Mat>(Wp).solve(X);
      q[k] = b[k];
      return f;
    };
    for (int k = 0; k < N; ++k)
      A.col(k) = (-field(2 * h, k) + 8 * field(h, k) - 8 * field(-h, k) +
                  field(-2 * h, k)) /
                 (12 * h);

    size_t off = N;
    if (with_J) {
      Eigen::Map<const Mat> J(s.data() + off, N, N);
      Eigen::Map<Mat>(dsdt.data() + off, N, N) = A * J;
      off += (size_t)N * N;
    }
    if (with_S) {
      Eigen::Map<const Mat> S(s.data() + off, N, N);
      Eigen::Map<Mat>(dsdt.data() + off, N, N) = A * S + lu.solve(Mat::Identity(N, N));
    }
  }
};

}  // namespace

FlowResult flow(const CartanChart& chart, const Vec& b, const Vec& X, double t,
                const FlowOptions& opts) {
  chart.require_inside(b);
  const int N = chart.dim();
  if ((int)X.size() != N) throw invalid_input("flow: algebra vector size");

  FlowResult out;
  out.endpoint = b;
  if (t == 0.0) {
    if (opts.with_pushforward) out.pushforward = Mat::Identity(N, N);
    if (opts.with_sensitivity) out.sensitivity = Mat::Zero(N, N);
    return out;
  }

  // Fold the sign of t into X; the trajectory is identical.
  Vec Xdir = (t < 0) ? Vec(-X) : X;
  const double T = std::abs(t);

  FlowSystem sys{chart, Xdir, opts.with_pushforward, opts.with_sensitivity, N};
  size_t sz = N + (opts.with_pushforward ? (size_t)N * N : 0) +
              (opts.with_sensitivity ? (size_t)N * N : 0);
  State s(sz, 0.0);
  Eigen::Map<Vec>(s.data(), N) = b;
  if (opts.with_pushforward)
    Eigen::Map<Mat>(s.data() + N, N, N) = Mat::Identity(N, N);

  auto stepper = odeint::make_controlled(
      opts.tol, opts.tol, odeint::runge_kutta_dopri5<State>());
  double time = 0.0, dt = std::min(T, 0.025);
  int guard = 0;
  while (time < T) {
    dt = std::min(dt, T - time);
    auto res = stepper.try_step(sys, s, time, dt);
    if (res == odeint::controlled_step_result::success) {
      ++out.diag.accepted_steps;
      Eigen::Map<const Vec> bt(s.data(), N);
      if (!chart.contains(bt))
        throw domain_exit("flow left chart domain", (t < 0 ? -time : time));
      if (dt < 1e-14 && time < T)
        throw numerical_error("flow: step size underflow");
    } else {
      ++out.diag.rejected_steps;
      if (std::abs(dt) < 1e-14)
        throw numerical_error("flow: step size underflow");
    }
    if (++guard > 2000000) throw numerical_error("flow: step limit");
  }

  Eigen::Map<const Vec> bt(s.data(), N);
  out.endpoint = bt;
  {
    // ω-constancy residual at the endpoint, a cheap solver health check
    Mat W = chart.omega_at(out.endpoint);
    Vec v = Eigen::PartialPivLU<Mat>(W).solve(Xdir);
    out.diag.max_omega_residual = (W * v - Xdir).norm();
  }
  size_t off = N;
  if (opts.with_pushforward) {
    out.pushforward = Eigen::Map<const Mat>(s.data() + off, N, N);
    off += (size_t)N * N;
  }
  if (opts.with_sensitivity) {
    out.sensitivity = Eigen::Map<const Mat>(s.data() + off, N, N);
    if (t < 0) out.sensitivity = -out.sensitivity;
  }
  return out;
}

Vec vertical_flow(const CartanChart& chart, const Vec& b, const Vec& X,
                  double t, double tol) {
  if (!chart.lie->in_p(X))
    throw invalid_input("vertical_flow: X must lie in p");
  FlowOptions o;
  o.tol = tol;
  return flow(chart, b, X, t, o).endpoint;
}

Vec chart_log(const CartanChart& chart, const Vec& b0, const Vec& b1,
              const LogOptions& opts) {
  chart.require_inside(b0);
  chart.require_inside(b1);
  const int N = chart.dim();
  Vec X = opts.initial_guess.size() == N
              ? opts.initial_guess
              : Vec(chart.omega_at(b0) * (b1 - b0));
  double scale = std::max(1.0, b1.norm());
  FlowOptions fo;
  fo.tol = opts.ode_tol;
  fo.with_sensitivity = true;
  double prev_res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    FlowResult fr = flow(chart, b0, X, 1.0, fo);
    Vec r = fr.endpoint - b1;
    double res = r.norm();
    if (res <= opts.tol * scale) return X;
    Vec dX = Eigen::PartialPivLU<Mat>(fr.sensitivity).solve(r);
    if (!dX.allFinite())
      throw numerical_error("log: singular shooting Jacobian");
    // Backtracking damping when the full step overshoots.
    double lambda = 1.0;
    if (res > 0.5 * prev_res && it > 0) lambda = 0.5;
    X -= lambda * dX;
    prev_res = res;
  }
  throw numerical_error("log: Newton did not converge (point outside normal neighborhood?)");
}

Vec zeta(const CartanChart& chart, const Vec& b, const Vec& X, const Vec& Y,
         double tol) {
  FlowOptions fo;
  fo.tol = tol;
  Vec b1 = flow(chart, b, X, 1.0, fo).endpoint;
  Vec b2 = flow(chart, b1, Y, 1.0, fo).endpoint;
  LogOptions lo;
  lo.ode_tol = tol;
  lo.tol = std::max(1e-12, tol);
  lo.initial_guess = X + Y;
  return chart_log(chart, b, b2, lo);
}

double estimate_normal_radius(const CartanChart& chart, const Vec& b,
                              int ndirs, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int N = chart.dim();
  double rmin = std::numeric_limits<double>::infinity();
  for (int d = 0; d < ndirs; ++d) {
    Vec u(N);
    for (int i = 0; i < N; ++i) u[i] = gauss(rng);
    u.normalize();
    double good = 0.0;
    for (double r = 0.05; r < 3.0; r *= 1.3) {
      try {
        Vec q = flow(chart, b, r * u, 1.0).endpoint;
        Vec X = chart_log(chart, b, q);
        if ((X - r * u).norm() > 1e-6 * std::max(1.0, r)) break;
        good = r;
      } catch (const numerical_error&) {
        break;
      }
    }
    rmin = std::min(rmin, good);
  }
  if (rmin == 0.0)
    throw numerical_error("no usable normal neighborhood at this point");
  return rmin;
}

}  // namespace cartan
