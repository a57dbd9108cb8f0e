#include "cartan/frobenius.hpp"

#include <cmath>
#include <random>

#include "cartan/frontends.hpp"

namespace cartan {
namespace {

Vec frame_value(const CartanChart& chart, const Vec& b, const Vec& A) {
  return chart.frame_at(b) * A;
}

std::vector<Vec> ball_points(int dim, double radius, int count,
                             unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec d(dim);
    for (int k = 0; k < dim; ++k) d[k] = gauss(rng);
    const double nd = d.norm();
    if (nd == 0) { out.push_back(Vec::Zero(dim)); continue; }
    out.push_back(radius * std::pow(unif(rng), 1.0 / dim) / nd * d);
  }
  return out;
}

// K_b(X, Z) from the V-array of curvature_at.
Vec curvature_pair(const LieAlgebraSpec& lie, const Vec& K, const Vec& X,
                   const Vec& Z) {
  const int N = lie.dim(), n = lie.n();
  Vec out = Vec::Zero(N);
  for (int a = 0; a < n; ++a)
    for (int c = a + 1; c < n; ++c)
      out += (X[a] * Z[c] - X[c] * Z[a]) *
             K.segment(lie.pair_index(a, c) * N, N);
  return out;
}

using Field = std::function<Vec(const Vec&)>;

Field constant_field(const CartanChart& chart, const Vec& X) {
  return [&chart, X](const Vec& q) -> Vec { return chart.frame_at(q) * X; };
}

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

double nest_step(int level) {
  switch (level) {
    case 1: return 2e-3;
    case 2: return 1e-2;
    default: return 3e-2;
  }
}

}  // namespace

LocalKillingField integrate_killing_field(const CartanChart& chart,
                                          const Vec& b, const Vec& A,
                                          double radius, int samples,
                                          unsigned seed, double ode_tol) {
  chart.require_inside(b);
  LocalKillingField field;
  field.b = b;
  field.A = A;
  field.radius = radius;

  JetOptions jopts;
  jopts.ode_tol = std::min(ode_tol, 1e-12);
  CurvatureJet jet = omega_jet(chart, b, 2, jopts);
  field.feasibility_residual = membership_residual(jet, A, 2);

  const Vec v0 = frame_value(chart, b, A);
  FlowOptions fopts;
  fopts.tol = ode_tol;
  fopts.with_pushforward = true;
  for (const Vec& Y : ball_points(chart.dim(), radius, samples, seed)) {
    FlowResult fr = flow(chart, b, Y, 1.0, fopts);
    FieldSample s;
    s.Y = Y;
    s.q = fr.endpoint;
    s.value = fr.pushforward * v0;
    field.samples.push_back(std::move(s));
  }
  return field;
}

Vec killing_field_at(const CartanChart& chart, const Vec& b, const Vec& A,
                     const Vec& q, double ode_tol) {
  LogOptions lopts;
  lopts.ode_tol = ode_tol;
  const Vec Y = chart_log(chart, b, q, lopts);
  FlowOptions fopts;
  fopts.tol = ode_tol;
  fopts.with_pushforward = true;
  return flow(chart, b, Y, 1.0, fopts).pushforward * frame_value(chart, b, A);
}

KillingVerifyReport verify_killing(const CartanChart& chart,
                                   const LocalKillingField& field,
                                   int check_samples, double tol,
                                   double ode_tol) {
  const int N = chart.dim();
  KillingVerifyReport rep;
  rep.tol = tol;
  const double anorm = std::max(field.A.norm(), 1e-300);
  const Vec v0 = frame_value(chart, field.b, field.A);

  FlowOptions push;
  push.tol = ode_tol;
  push.with_pushforward = true;

  // Straight-ray field evaluation with a warm-started shooting log.
  auto field_at = [&](const Vec& q, const Vec& guess) -> Vec {
    LogOptions lopts;
    lopts.ode_tol = ode_tol;
    lopts.initial_guess = guess;
    const Vec Z = chart_log(chart, field.b, q, lopts);
    return flow(chart, field.b, Z, 1.0, push).pushforward * v0;
  };

  const int limit = std::min<int>(check_samples, field.samples.size());

  // Bracket vanishing: [A~, Y~](q) by differencing the Y-flow transport.
  const double hs = 1e-2;
  for (int si = 0; si < limit; ++si) {
    const FieldSample& smp = field.samples[si];
    for (int k = 0; k < N; ++k) {
      const Vec Yk = Vec::Unit(N, k);
      auto probe = [&](double s) -> Vec {
        FlowResult fr = flow(chart, smp.q, Yk, s, push);
        const Vec val =
            field_at(fr.endpoint, Vec(smp.Y + s * Yk));
        return fr.pushforward.partialPivLu().solve(val);
      };
      const Vec der = (-probe(2 * hs) + 8 * probe(hs) - 8 * probe(-hs) +
                       probe(-2 * hs)) /
                      (12 * hs);
      const double res =
          (chart.omega_at(smp.q) * der).norm() / anorm;
      rep.bracket_residual = std::max(rep.bracket_residual, res);
    }
  }

  // Flow pullback: phi^s along the field itself, s = +-0.1, RK4 with
  // warm-started evaluations; D(phi^s) by central differences.
  const int pullback_samples = std::min(limit, 2);
  const double s_flow = 0.1, h_fd = 5e-3;
  auto flow_killing = [&](Vec q, double s, Vec guess) -> Vec {
    const int steps = 8;
    const double dt = s / steps;
    for (int i = 0; i < steps; ++i) {
      auto rhs = [&](const Vec& p) { return field_at(p, guess); };
      const Vec k1 = rhs(q);
      const Vec k2 = rhs(Vec(q + 0.5 * dt * k1));
      const Vec k3 = rhs(Vec(q + 0.5 * dt * k2));
      const Vec k4 = rhs(Vec(q + dt * k3));
      q += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      guess += dt * chart.omega_at(q) * k1;  // first-order log continuation
    }
    return q;
  };
  for (int si = 0; si < pullback_samples; ++si) {
    const FieldSample& smp = field.samples[si];
    for (double sgn : {1.0, -1.0}) {
      const double s = sgn * s_flow;
      Mat D(N, N);
      Vec center = flow_killing(smp.q, s, smp.Y);
      for (int k = 0; k < N; ++k) {
        const Vec e = Vec::Unit(N, k);
        const Vec pp = flow_killing(Vec(smp.q + h_fd * e), s, smp.Y);
        const Vec pm = flow_killing(Vec(smp.q - h_fd * e), s, smp.Y);
        D.col(k) = (pp - pm) / (2 * h_fd);
      }
      const Mat Wq = chart.omega_at(smp.q);
      const double res =
          (chart.omega_at(center) * D - Wq).norm() / Wq.norm();
      rep.pullback_residual = std::max(rep.pullback_residual, res);
    }
  }

  rep.pass = rep.bracket_residual <= tol && rep.pullback_residual <= tol;
  return rep;
}

MRelatedResult m_related(const CartanChart& chart, const Vec& b, const Vec& b2,
                         int m, double tol, const JetOptions& jopts) {
  const CurvatureJet j1 = omega_jet(chart, b, m, jopts);
  const CurvatureJet j2 = omega_jet(chart, b2, m, jopts);
  MRelatedResult out;
  for (int r = 0; r <= m; ++r) {
    const double res =
        (j1.J[r] - j2.J[r]).norm() / std::max(1.0, j1.J[r].norm());
    out.per_order.push_back(res);
    out.residual = std::max(out.residual, res);
  }
  out.related = out.residual <= tol;
  return out;
}

LocalAutomorphism local_automorphism(const CartanChart& chart, const Vec& b,
                                     const Vec& b2, double radius, int samples,
                                     int m_check, double tol, unsigned seed,
                                     double ode_tol) {
  MRelatedResult rel = m_related(chart, b, b2, m_check, tol, {});
  if (!rel.related)
    throw invalid_input("local_automorphism: points are not " +
                        std::to_string(m_check) + "-related (residual " +
                        std::to_string(rel.residual) + ")");
  LocalAutomorphism f;
  f.b = b;
  f.b_target = b2;
  f.radius = radius;
  f.relation_residual = rel.residual;

  FlowOptions fopts;
  fopts.tol = ode_tol;
  fopts.with_sensitivity = true;
  for (const Vec& Y : ball_points(chart.dim(), radius, samples, seed)) {
    FlowResult f1 = flow(chart, b, Y, 1.0, fopts);
    FlowResult f2 = flow(chart, b2, Y, 1.0, fopts);
    FieldSample s;
    s.Y = Y;
    s.q = f1.endpoint;
    s.value = f2.endpoint;
    const Mat Df =
        f2.sensitivity * f1.sensitivity.partialPivLu().inverse();
    const Mat Wq = chart.omega_at(f1.endpoint);
    const double res =
        (chart.omega_at(f2.endpoint) * Df - Wq).norm() / Wq.norm();
    f.pullback_residual = std::max(f.pullback_residual, res);
    f.samples.push_back(std::move(s));
  }
  return f;
}

Vec automorphism_apply(const CartanChart& chart, const Vec& b, const Vec& b2,
                       const Vec& q, double ode_tol) {
  LogOptions lopts;
  lopts.ode_tol = ode_tol;
  const Vec Y = chart_log(chart, b, q, lopts);
  FlowOptions fopts;
  fopts.tol = ode_tol;
  return flow(chart, b2, Y, 1.0, fopts).endpoint;
}

DeltaKReport delta_k(const CartanChart& chart, const Vec& b, const Vec& X,
                     const Vec& Y, int k_max) {
  if (k_max < 1 || k_max > 3)
    throw invalid_input("delta_k: k_max must be in 1..3");
  chart.require_inside(b);
  const auto& lie = *chart.lie;
  const Vec K0 = curvature_at(chart, b);

  // Algebra words W_k = (ad X)^k Y and the nested-bracket fields.
  std::vector<Vec> W{Y};
  std::vector<Field> G{constant_field(chart, Y)};
  const Field FX = constant_field(chart, X);
  for (int k = 1; k <= k_max; ++k) {
    W.push_back(lie.bracket(X, W[k - 1]));
    G.push_back(bracket_field(FX, G[k - 1], nest_step(k)));
  }

  // Delta_k as a function of the bundle point.
  auto delta_at = [&](int k, const Vec& q) -> Vec {
    return W[k] - chart.omega_at(q) * G[k](q);
  };

  DeltaKReport rep;
  FlowOptions fopts;
  fopts.tol = 1e-12;
  Vec delta_prev = Vec::Zero(lie.dim());  // Delta_0 = 0
  for (int k = 1; k <= k_max; ++k) {
    DeltaKRow row;
    row.k = k;
    row.direct = delta_at(k, b);

    // X~.Delta_{k-1} along the X-flow (zero for k = 1).
    Vec xder = Vec::Zero(lie.dim());
    if (k >= 2) {
      const double h = 2e-2;
      auto probe = [&](double s) {
        return delta_at(k - 1, flow(chart, b, X, s, fopts).endpoint);
      };
      xder = (-probe(2 * h) + 8 * probe(h) - 8 * probe(-h) + probe(-2 * h)) /
             (12 * h);
    }
    row.xder_norm = xder.norm();

    const Vec common = curvature_pair(lie, K0, X, Vec(W[k - 1] - delta_prev)) +
                       lie.bracket(X, delta_prev);
    row.recursion_plus = common + xder;
    row.recursion_minus = common - xder;
    const double scale = std::max(1.0, row.direct.norm());
    row.err_plus = (row.recursion_plus - row.direct).norm() / scale;
    row.err_minus = (row.recursion_minus - row.direct).norm() / scale;

    delta_prev = row.direct;
    if (k == k_max) {
      const double tol = 1e-4, ratio = 10.0;
      const bool plus_ok = row.err_plus <= tol;
      const bool minus_ok = row.err_minus <= tol;
      if (plus_ok && row.err_minus > ratio * row.err_plus)
        rep.matching_sign = +1;
      else if (minus_ok && row.err_plus > ratio * row.err_minus)
        rep.matching_sign = -1;
      else
        rep.matching_sign = 0;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

BaseField descend_to_base(const CartanChart& chart, const Vec& b, const Vec& A,
                          const std::vector<Vec>& base_points,
                          double ode_tol) {
  if (chart.base_dim <= 0 || !chart.metric)
    throw invalid_input("descend_to_base: chart has no base metric");
  const int n = chart.base_dim;
  const MetricSpec& g = *chart.metric;
  const Vec theta = b.tail(chart.dim() - n);

  auto base_value = [&](const Vec& x) -> Vec {
    Vec q(chart.dim());
    q << x, theta;
    return killing_field_at(chart, b, A, q, ode_tol).head(n);
  };

  BaseField out;
  const double h = 1e-3;
  for (const Vec& x : base_points) {
    BaseFieldSample s;
    s.x = x;
    s.value = base_value(x);

    Mat dV(n, n);  // dV(i, k) = dV_i / dx_k
    for (int k = 0; k < n; ++k) {
      const Vec e = Vec::Unit(n, k);
      dV.col(k) = (-base_value(Vec(x + 2 * h * e)) +
                   8 * base_value(Vec(x + h * e)) -
                   8 * base_value(Vec(x - h * e)) +
                   base_value(Vec(x - 2 * h * e))) /
                  (12 * h);
    }
    Mat G;
    std::vector<Mat> dG;
    g.eval(x.data(), G);
    g.eval_d(x.data(), dG);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double lie_g = 0.0;
        for (int k = 0; k < n; ++k) {
          lie_g += s.value[k] * dG[k](i, j);
          lie_g += G(k, j) * dV(k, i) + G(i, k) * dV(k, j);
        }
        worst = std::max(worst, std::abs(lie_g));
      }
    s.killing_residual = worst;
    out.max_residual = std::max(out.max_residual, worst);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace cartan
