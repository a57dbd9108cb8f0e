#include "cartan/curvature.hpp"

#include <cmath>

namespace cartan {
namespace {

// K over all g-pairs at q from one frame and N coordinate-derivative frames.
// Returns the sigma-pair V array; when `vres` is set, records the largest
// relative entry over pairs that touch p (exact zeros of the curvature).
Vec curvature_array(const CartanChart& chart, const Vec& q, double* vres) {
  const auto& lie = *chart.lie;
  const int N = lie.dim(), n = lie.n();
  const double h = chart.fd_step;

  const Mat F0 = chart.frame_at(q);
  const Mat W0 = chart.omega_at(q);
  std::vector<Mat> dF(N);
  Vec qq = q;
  for (int k = 0; k < N; ++k) {
    auto probe = [&](double dq) {
      qq[k] = q[k] + dq;
      Mat F = chart.frame_at(qq);
      qq[k] = q[k];
      return F;
    };
    dF[k] = (-probe(2 * h) + 8 * probe(h) - 8 * probe(-h) + probe(-2 * h)) /
            (12 * h);
  }

  auto field_bracket = [&](int i, int j) {
    Vec br = Vec::Zero(N);
    for (int k = 0; k < N; ++k)
      br += dF[k].col(j) * F0(k, i) - dF[k].col(i) * F0(k, j);
    return br;
  };

  Vec out(lie.dim_v());
  double sigma_scale = 1.0, vert = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = a + 1; c < n; ++c) {
      Vec K = lie.bracket(Vec(Vec::Unit(N, a)), Vec(Vec::Unit(N, c))) -
              W0 * field_bracket(a, c);
      sigma_scale = std::max(sigma_scale, K.lpNorm<Eigen::Infinity>());
      out.segment(lie.pair_index(a, c) * N, N) = K;
    }
  if (vres) {
    for (int a = 0; a < N; ++a)
      for (int c = std::max(a + 1, n); c < N; ++c) {
        Vec K = lie.bracket(Vec(Vec::Unit(N, a)), Vec(Vec::Unit(N, c))) -
                W0 * field_bracket(a, c);
        vert = std::max(vert, K.lpNorm<Eigen::Infinity>() / sigma_scale);
      }
    *vres = vert;
  }
  return out;
}

struct JetWorker {
  const CartanChart& chart;
  const JetOptions& opts;

  Vec level(const Vec& q, int r, double* trunc_out = nullptr) const {
    if (r == 0) return curvature_array(chart, q, nullptr);
    const auto& lie = *chart.lie;
    const int N = lie.dim();
    const long len = lie.hom_dim(r - 1);
    const double h = opts.step(r);
    FlowOptions fopts;
    fopts.tol = opts.ode_tol;

    Vec out(N * len);
    for (int i = 0; i < N; ++i) {
      const Vec X = Vec::Unit(N, i);
      // Progressive flow chains per sign: h/2 -> h -> 2h (or h -> 2h).
      auto chain = [&](double sign) {
        std::vector<Vec> vals;
        Vec q1 = q;
        double at = 0.0;
        std::vector<double> stops = opts.richardson
                                        ? std::vector<double>{0.5 * h, h, 2 * h}
                                        : std::vector<double>{h, 2 * h};
        for (double s : stops) {
          q1 = flow(chart, q1, X, sign * (s - at), fopts).endpoint;
          at = s;
          vals.push_back(level(q1, r - 1));
        }
        return vals;
      };
      const auto plus = chain(1.0), minus = chain(-1.0);
      Vec D;
      if (opts.richardson) {
        const Vec Dh = (-plus[2] + 8 * plus[1] - 8 * minus[1] + minus[2]) /
                       (12 * h);
        const Vec Dh2 = (-plus[1] + 8 * plus[0] - 8 * minus[0] + minus[1]) /
                        (6 * h);
        D = (16 * Dh2 - Dh) / 15;
        if (trunc_out)
          *trunc_out = std::max(*trunc_out,
                                (Dh2 - Dh).lpNorm<Eigen::Infinity>() / 15.0);
      } else {
        D = (-plus[1] + 8 * plus[0] - 8 * minus[0] + minus[1]) / (12 * h);
      }
      out.segment(i * len, len) = D;
    }
    return out;
  }
};

}  // namespace

Vec curvature_at(const CartanChart& chart, const Vec& b, const JetOptions& opts,
                 double* vertical_residual) {
  chart.require_inside(b);
  double vres = 0.0;
  Vec K = curvature_array(chart, b,
                          (vertical_residual || opts.check_vertical) ? &vres
                                                                     : nullptr);
  if (vertical_residual) *vertical_residual = vres;
  if (opts.check_vertical && vres > opts.vertical_tol)
    throw numerical_error("curvature_at: vertical curvature slots not zero "
                          "(residual " + std::to_string(vres) + ")");
  return K;
}

CurvatureJet omega_jet(const CartanChart& chart, const Vec& b, int m,
                       const JetOptions& opts) {
  if (m < 0) throw invalid_input("omega_jet: negative order");
  chart.require_inside(b);
  CurvatureJet jet;
  jet.lie = chart.lie;
  jet.b = b;
  jet.order = m;
  jet.opts = opts;
  jet.fd_step = chart.fd_step;
  jet.J.push_back(curvature_at(chart, b, opts, &jet.vertical_residual));
  jet.trunc.push_back(0.0);
  JetWorker worker{chart, opts};
  for (int r = 1; r <= m; ++r) {
    double tr = 0.0;
    jet.J.push_back(worker.level(b, r, &tr));
    jet.trunc.push_back(tr);
  }
  return jet;
}

void omega_jet_extend(const CartanChart& chart, CurvatureJet& jet, int m) {
  JetWorker worker{chart, jet.opts};
  for (int r = jet.order + 1; r <= m; ++r) {
    double tr = 0.0;
    jet.J.push_back(worker.level(jet.b, r, &tr));
    jet.trunc.push_back(tr);
  }
  jet.order = std::max(jet.order, m);
}

Vec contract_hom(const LieAlgebraSpec& lie, int r, const Vec& Jr,
                 const Vec& A) {
  if (r < 1) throw invalid_input("contract_hom: r must be >= 1");
  const long len = lie.hom_dim(r - 1);
  if (Jr.size() != lie.dim() * len)
    throw invalid_input("contract_hom: array size does not match order");
  Vec out = Vec::Zero(len);
  for (int i = 0; i < lie.dim(); ++i)
    if (A[i] != 0.0) out += A[i] * Jr.segment(i * len, len);
  return out;
}

Vec contract(const CurvatureJet& jet, int r, const Vec& A) {
  if (r < 1 || r > jet.order)
    throw invalid_input("contract: order out of range");
  return contract_hom(*jet.lie, r, jet.J[r], A);
}

EquivarianceReport equivariance_check(const CartanChart& chart, const Vec& b,
                                      const Vec& X, double t, int m,
                                      const JetOptions& opts) {
  if (!chart.lie->in_p(X))
    throw invalid_input("equivariance_check: X must lie in p");
  const Vec b2 = vertical_flow(chart, b, X, t, opts.ode_tol);
  const CurvatureJet jet1 = omega_jet(chart, b, m, opts);
  const CurvatureJet jet2 = omega_jet(chart, b2, m, opts);
  const Mat adP = chart.lie->ad_exp(Vec(-t * X));

  EquivarianceReport rep;
  for (int r = 0; r <= m; ++r) {
    Vec transported = (r == 0) ? Vec(chart.lie->rep_on_V(adP) * jet1.J[0])
                               : chart.lie->rep_on_hom(r, adP, jet1.J[r]);
    double res = (jet2.J[r] - transported).norm() /
                 std::max(1.0, jet1.J[r].norm());
    rep.residual.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  return rep;
}

}  // namespace cartan
