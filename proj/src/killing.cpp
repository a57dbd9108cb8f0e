#include "cartan/killing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

namespace cartan {
namespace {

constexpr double kNoiseBase = 120.0;   // K-eval roundoff ~ base * eps / fd_step
constexpr double kNoiseGain = 3.5;     // stencil L1 mass per derivative level
constexpr double kNoiseSafety = 8.0;   // cutoff margin above the modeled floor
constexpr double kInf = std::numeric_limits<double>::infinity();

// Contraction map of order r as a matrix: row space = constraints on A.
Mat contraction_matrix(const CurvatureJet& jet, int r) {
  const auto& lie = *jet.lie;
  const long len = lie.hom_dim(r - 1);
  Mat M(len, lie.dim());
  for (int i = 0; i < lie.dim(); ++i) M.col(i) = jet.J[r].segment(i * len, len);
  return M;
}

// Core solver: intersects per-order kernels, growing the jet on demand.
// `grow(r)` must make J_r available; null when the jet is preassembled.
KillingJetSolution solve_orders(const CurvatureJet& jet,
                                const std::function<void(int)>& grow, int m_cap,
                                const RankTols& tols, bool adaptive) {
  const int N = jet.lie->dim();
  KillingJetSolution sol;
  sol.b = jet.b;
  sol.tols = tols;
  sol.gap = kInf;
  sol.basis = Mat::Identity(N, N);

  for (int r = 1; r <= m_cap; ++r) {
    if (sol.basis.cols() == 0) {
      // Kernel already trivial; deeper orders cannot shrink it further.
      if (!sol.stabilization) sol.stabilization = r - 1;
      break;
    }
    if (grow) grow(r);
    const Mat R = contraction_matrix(jet, r) * sol.basis;
    const double floor =
        std::max(tols.abs, kNoiseSafety * jet_noise_floor(r, jet.opts, jet.fd_step));
    KernelResult kr = kernel_with_gap(R, tols.rel, floor);

    OrderDecision dec;
    dec.order = r;
    dec.sigma = kr.singular_values;
    dec.kept = kr.rank;
    dec.cutoff = std::max(floor, tols.rel * (kr.singular_values.size()
                                                 ? kr.singular_values[0]
                                                 : 0.0));
    dec.gap = kr.gap;
    sol.orders.push_back(dec);
    sol.gap = std::min(sol.gap, kr.gap);
    if (kr.gap < 10.0) sol.gap_warning = true;

    const Mat prev = sol.basis;
    sol.basis = prev * kr.basis;
    sol.k_m.push_back((int)sol.basis.cols());
    sol.order = r;

    // Flat lock: K and DK both below the noise floor means the germ is flat
    // at tolerance; deeper stencils leave its neighborhood (near C-infinity
    // support edges they read exploding tails) and must not reject
    // generators. Only the adaptive path decides orders on its own.
    if (adaptive && r == 1 && kr.rank == 0 &&
        jet.J[0].lpNorm<Eigen::Infinity>() <=
            std::max(tols.abs,
                     kNoiseSafety * jet_noise_floor(0, jet.opts, jet.fd_step))) {
      sol.stabilization = 1;
      break;
    }

    if (!sol.stabilization) {
      if (sol.basis.cols() == 0) {
        sol.stabilization = r;  // Kill^{r+1} = Kill^r = 0
      } else if (r >= 2 && sol.k_m[r - 1] == sol.k_m[r - 2]) {
        // Nested construction: subspace equality reduces to dimension
        // equality; the angle is recorded for the report anyway.
        if (principal_angle(prev, sol.basis) <= tols.angle)
          sol.stabilization = r - 1;
      }
      if (adaptive && sol.stabilization) break;
    }
  }
  return sol;
}

Vec grid_point(const CartanChart& chart,
               const std::vector<std::array<double, 3>>& axes,
               const std::vector<int>& idx, double theta0) {
  Vec q = Vec::Constant(chart.dim(), theta0);
  if (chart.base_dim > 0) q.head(chart.base_dim).setZero();
  for (size_t a = 0; a < axes.size(); ++a) {
    const int steps = (int)axes[a][2];
    const double lo = axes[a][0], hi = axes[a][1];
    q[a] = (steps <= 1) ? 0.5 * (lo + hi)
                        : lo + idx[a] * (hi - lo) / (steps - 1);
  }
  return q;
}

}  // namespace

double jet_noise_floor(int r, const JetOptions& opts, double fd_step) {
  double nu = kNoiseBase * std::numeric_limits<double>::epsilon() / fd_step;
  for (int j = 1; j <= r; ++j) nu *= kNoiseGain / opts.step(j);
  return nu;
}

KillingJetSolution killing_generators(const CurvatureJet& jet, int m,
                                      const RankTols& tols) {
  if (m < 1 || m > jet.order)
    throw invalid_input("killing_generators: jet order too small for m");
  return solve_orders(jet, nullptr, m, tols, /*adaptive=*/false);
}

KillingJetSolution killing_generators(const CartanChart& chart, const Vec& b,
                                      int m, const RankTols& tols,
                                      const JetOptions& jopts) {
  if (m < 1) throw invalid_input("killing_generators: m must be >= 1");
  CurvatureJet jet = omega_jet(chart, b, 0, jopts);
  auto grow = [&](int r) { omega_jet_extend(chart, jet, r); };
  return solve_orders(jet, grow, m, tols, /*adaptive=*/false);
}

KillingJetSolution stabilization_order(const CartanChart& chart, const Vec& b,
                                       int m_max, const RankTols& tols,
                                       const JetOptions& jopts) {
  if (m_max < 1) throw invalid_input("stabilization_order: m_max must be >= 1");
  CurvatureJet jet = omega_jet(chart, b, 0, jopts);
  auto grow = [&](int r) { omega_jet_extend(chart, jet, r); };
  // Equality of Kill^m and Kill^{m+1} needs order m+1 jets.
  return solve_orders(jet, grow, m_max + 1, tols, /*adaptive=*/true);
}

double fiber_consistency(const CartanChart& chart, const Vec& b, const Vec& X,
                         double t, int m, const RankTols& tols,
                         const JetOptions& jopts) {
  if (!chart.lie->in_p(X))
    throw invalid_input("fiber_consistency: X must lie in p");
  KillingJetSolution s1 = killing_generators(chart, b, m, tols, jopts);
  const Vec b2 = vertical_flow(chart, b, X, t, jopts.ode_tol);
  KillingJetSolution s2 = killing_generators(chart, b2, m, tols, jopts);
  const Mat expected = chart.lie->ad_exp(Vec(-t * X)) * s1.basis;
  if (s1.dim() != s2.dim())
    throw numerical_error("fiber_consistency: Kill dimensions differ between "
                          "fiber points (" + std::to_string(s1.dim()) + " vs " +
                          std::to_string(s2.dim()) + ")");
  if (s1.dim() == 0) return 0.0;
  return principal_angle(s2.basis, expected);
}

double membership_residual(const CurvatureJet& jet, const Vec& A, int m) {
  double scale = 1.0;
  for (int r = 1; r <= m; ++r) scale = std::max(scale, jet.J[r].norm());
  double worst = 0.0;
  const double na = std::max(A.norm(), 1e-300);
  for (int r = 1; r <= m; ++r)
    worst = std::max(worst, contract_hom(*jet.lie, r, jet.J[r], A).norm() /
                                (na * scale));
  return worst;
}

std::vector<TransportPoint> transport_generator(
    const CartanChart& chart, const Vec& b, const Vec& A, const Vec& X,
    double T, int checkpoints, int jet_order, const RankTols& tols,
    const JetOptions& jopts) {
  if (checkpoints < 2)
    throw invalid_input("transport_generator: need at least two checkpoints");
  (void)tols;
  const Vec v0 = chart.frame_at(b) * A;

  std::vector<TransportPoint> traj(checkpoints);
  FlowOptions fopts;
  fopts.tol = jopts.ode_tol;
  fopts.with_pushforward = true;

  // March outward from t = 0 in each direction, composing pushforwards.
  auto run_direction = [&](const std::vector<std::pair<int, double>>& stops) {
    Vec q = b;
    Mat Jacc = Mat::Identity(chart.dim(), chart.dim());
    double at = 0.0;
    for (auto [slot, t] : stops) {
      if (t != at) {
        FlowResult fr = flow(chart, q, X, t - at, fopts);
        q = fr.endpoint;
        Jacc = fr.pushforward * Jacc;
        at = t;
      }
      TransportPoint& pt = traj[slot];
      pt.t = t;
      pt.b = q;
      pt.A = chart.omega_at(q) * (Jacc * v0);
      CurvatureJet jet = omega_jet(chart, q, jet_order, jopts);
      pt.membership_residual = membership_residual(jet, pt.A, jet_order);
    }
  };

  std::vector<std::pair<int, double>> fwd, bwd;
  for (int i = 0; i < checkpoints; ++i) {
    const double t = -T + 2 * T * i / (checkpoints - 1);
    (t >= 0 ? fwd : bwd).push_back({i, t});
  }
  std::sort(fwd.begin(), fwd.end(),
            [](auto& a, auto& b) { return a.second < b.second; });
  std::sort(bwd.begin(), bwd.end(),
            [](auto& a, auto& b) { return a.second > b.second; });
  run_direction(fwd);
  run_direction(bwd);
  return traj;
}

StrataReport scan_strata(const CartanChart& chart,
                         const std::vector<std::array<double, 3>>& axes,
                         const StrataOptions& opts) {
  const int scan_dim = chart.base_dim > 0 ? chart.base_dim : chart.dim();
  if ((int)axes.size() != scan_dim)
    throw invalid_input("scan_strata: need one axis spec per base coordinate");

  StrataReport rep;
  rep.axes = axes;
  rep.m_max = opts.m_max;
  rep.tols = opts.tols;
  rep.seed = opts.seed;
  rep.theta0 = opts.theta0;
  rep.chart_name = chart.name;

  long total = 1;
  for (const auto& ax : axes) {
    const int steps = (int)ax[2];
    if (steps < 1 || ax[1] < ax[0])
      throw invalid_input("scan_strata: bad axis range");
    rep.grid_shape.push_back(steps);
    total *= steps;
  }
  rep.samples.resize(total);

  auto unflatten = [&](long flat) {
    std::vector<int> idx(axes.size());
    for (int a = (int)axes.size() - 1; a >= 0; --a) {
      idx[a] = flat % rep.grid_shape[a];
      flat /= rep.grid_shape[a];
    }
    return idx;
  };

  std::atomic<long> next{0};
  auto work = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= total) return;
      StrataSample& s = rep.samples[i];
      const auto idx = unflatten(i);
      const Vec q = grid_point(chart, axes, idx, opts.theta0);
      s.x.assign(q.data(), q.data() + axes.size());
      try {
        CurvatureJet jet = omega_jet(chart, q, 0, opts.jopts);
        auto grow = [&](int r) { omega_jet_extend(chart, jet, r); };
        KillingJetSolution sol =
            solve_orders(jet, grow, opts.m_max + 1, opts.tols, /*adaptive=*/true);
        s.k_m = sol.k_m;
        s.k = sol.k_m.empty() ? chart.dim() : sol.k_m.back();
        s.stabilization = sol.stabilization.value_or(-1);
        s.gap = sol.gap;
      } catch (const std::exception& e) {
        s.error = e.what();
      }
    }
  };
  const int workers = std::max(1, opts.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Neighborhood passes: regularity, semicontinuity, components.
  auto neighbors = [&](long flat) {
    std::vector<long> out;
    const auto idx = unflatten(flat);
    std::vector<int> d(axes.size(), -1);
    for (;;) {
      bool all_zero = true, ok = true;
      long nf = 0;
      for (size_t a = 0; a < axes.size(); ++a) {
        const int v = idx[a] + d[a];
        if (d[a] != 0) all_zero = false;
        if (v < 0 || v >= rep.grid_shape[a]) { ok = false; break; }
        nf = nf * rep.grid_shape[a] + v;
      }
      if (ok && !all_zero) out.push_back(nf);
      size_t a = 0;
      for (; a < axes.size(); ++a) {
        if (++d[a] <= 1) break;
        d[a] = -1;
      }
      if (a == axes.size()) break;
    }
    return out;
  };

  bool degenerate = true;
  for (int s : rep.grid_shape) degenerate = degenerate && (s == 1);

  for (long i = 0; i < total; ++i) {
    StrataSample& s = rep.samples[i];
    if (!s.error.empty()) continue;
    const auto nb = neighbors(i);
    bool same = true, all_smaller = !nb.empty();
    for (long j : nb) {
      if (!rep.samples[j].error.empty()) { same = false; all_smaller = false; continue; }
      same = same && (rep.samples[j].k == s.k);
      all_smaller = all_smaller && (rep.samples[j].k < s.k);
    }
    s.regular = nb.empty() ? true : same;  // single-point convention
    if (all_smaller) rep.lower_semicontinuity_ok = false;
  }
  if (degenerate) rep.note = "insufficient neighborhood";

  // Union-find over same-k adjacency.
  std::vector<long> parent(total);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<long(long)> find = [&](long a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (long i = 0; i < total; ++i) {
    if (!rep.samples[i].error.empty()) continue;
    for (long j : neighbors(i)) {
      if (j < i || !rep.samples[j].error.empty()) continue;
      if (rep.samples[j].k == rep.samples[i].k) parent[find(i)] = find(j);
    }
  }
  std::map<long, int> label;
  for (long i = 0; i < total; ++i) {
    if (!rep.samples[i].error.empty()) continue;
    const long root = find(i);
    auto it = label.try_emplace(root, (int)label.size()).first;
    rep.samples[i].component = it->second;
  }

  std::map<int, long> counts;
  bool any_error = false;
  for (const auto& s : rep.samples) {
    if (!s.error.empty()) { any_error = true; continue; }
    ++counts[s.k];
    rep.max_k = std::max(rep.max_k, s.k);
  }
  for (auto [k, c] : counts) {
    rep.strata.push_back(k);
    rep.strata_counts.push_back(c);
  }

  rep.regular_set_dense = true;
  for (long i = 0; i < total; ++i) {
    const StrataSample& s = rep.samples[i];
    if (!s.error.empty()) continue;
    if (s.regular) continue;
    bool near_regular = false;
    for (long j : neighbors(i))
      near_regular = near_regular ||
                     (rep.samples[j].error.empty() && rep.samples[j].regular);
    rep.regular_set_dense = rep.regular_set_dense && near_regular;
  }
  rep.locally_homogeneous = !any_error && rep.strata.size() == 1 &&
                            rep.max_k == chart.dim();
  return rep;
}

}  // namespace cartan
