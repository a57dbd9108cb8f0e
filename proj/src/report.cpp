#include "cartan/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "cartan/bch.hpp"
#include "cartan/frobenius.hpp"
#include "cartan/frontends.hpp"
#include "cartan/killing.hpp"

namespace cartan {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "cartan-kill 0.1.0";

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Vec chart_point(const CartanChart& chart, const RunConfig& cfg) {
  if ((int)cfg.point.size() > chart.dim())
    throw invalid_input("point has more coordinates than the chart");
  Vec q = Vec::Constant(chart.dim(), cfg.theta0);
  if (chart.base_dim > 0) q.head(chart.base_dim).setZero();
  for (size_t i = 0; i < cfg.point.size(); ++i) q[i] = cfg.point[i];
  chart.require_inside(q);
  return q;
}

json config_echo(const RunConfig& cfg) {
  json e;
  e["point"] = cfg.point;
  json grid = json::array();
  for (const auto& ax : cfg.grid) grid.push_back({ax[0], ax[1], ax[2]});
  e["grid"] = grid;
  e["m"] = cfg.m;
  e["m_max"] = cfg.m_max;
  e["kmax"] = cfg.kmax;
  e["order"] = cfg.order;
  e["tol_ode"] = cfg.tol_ode;
  e["tol_rank"] = cfg.tol_rank;
  e["tol_verify"] = cfg.tol_verify;
  e["seed"] = cfg.seed;
  e["workers"] = cfg.workers;
  e["theta0"] = cfg.theta0;
  e["format"] = cfg.format;
  return e;
}

json solution_to_json(const KillingJetSolution& sol) {
  json s;
  s["k_m"] = sol.k_m;
  s["k"] = sol.dim();
  if (sol.stabilization)
    s["stabilization"] = *sol.stabilization;
  else
    s["stabilization"] = nullptr;
  s["basis"] = to_json(sol.basis);
  s["gap"] = std::isfinite(sol.gap) ? json(sol.gap) : json("inf");
  s["gap_warning"] = sol.gap_warning;
  json orders = json::array();
  for (const auto& d : sol.orders) {
    json o;
    o["order"] = d.order;
    o["sigma"] = to_json(d.sigma);
    o["kept"] = d.kept;
    o["cutoff"] = d.cutoff;
    o["gap"] = std::isfinite(d.gap) ? json(d.gap) : json("inf");
    orders.push_back(o);
  }
  s["orders"] = orders;
  return s;
}

std::pair<Vec, Vec> seeded_pair(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  auto unit = [&]() {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    return Vec(v / v.norm());
  };
  Vec x = unit();
  return {x, unit()};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_version() { return kVersion; }

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("point")) cfg.point = j["point"].get<std::vector<double>>();
    if (j.contains("grid"))
      for (const auto& ax : j["grid"]) {
        if (!ax.is_array() || ax.size() != 3)
          throw invalid_input("config: grid axes are [lo, hi, steps]");
        cfg.grid.push_back({ax[0].get<double>(), ax[1].get<double>(),
                            ax[2].get<double>()});
      }
    cfg.m = j.value("m", cfg.m);
    cfg.m_max = j.value("m_max", cfg.m_max);
    cfg.kmax = j.value("kmax", cfg.kmax);
    cfg.order = j.value("order", cfg.order);
    cfg.tol_ode = j.value("tol_ode", cfg.tol_ode);
    cfg.tol_rank = j.value("tol_rank", cfg.tol_rank);
    cfg.tol_verify = j.value("tol_verify", cfg.tol_verify);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.theta0 = j.value("theta0", cfg.theta0);
    cfg.format = j.value("format", cfg.format);
    cfg.list = j.value("list", cfg.list);
  } catch (const invalid_input&) {
    throw;
  } catch (const std::exception& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
  if (cfg.tol_ode <= 0 || cfg.tol_rank <= 0 || cfg.tol_verify <= 0)
    throw invalid_input("config: tolerances must be positive");
  if (cfg.m < 0 || cfg.m_max < 1 || cfg.kmax < 1 || cfg.order < 0)
    throw invalid_input("config: orders must be positive");
  if (cfg.workers < 1) throw invalid_input("config: workers must be >= 1");
  if (cfg.format != "json" && cfg.format != "csv")
    throw invalid_input("config: format must be json or csv");
  return cfg;
}

std::string run_killing(const CartanChart& chart, const RunConfig& cfg) {
  const Vec q = chart_point(chart, cfg);
  RankTols tols;
  tols.rel = cfg.tol_rank;
  JetOptions jopts;

  KillingJetSolution sol =
      (cfg.m > 0) ? killing_generators(chart, q, cfg.m, tols, jopts)
                  : stabilization_order(chart, q, cfg.m_max, tols, jopts);

  json rep;
  rep["version"] = kVersion;
  rep["command"] = "killing";
  rep["geometry"] = chart.name;
  rep["config"] = config_echo(cfg);
  rep["point"] = to_json(q);
  rep["solution"] = solution_to_json(sol);

  bool pass = true;
  json fields = json::array();
  if (sol.dim() > 0) {
    const double radius =
        0.4 * estimate_normal_radius(chart, q, 8, cfg.seed);
    for (int c = 0; c < sol.dim(); ++c) {
      const Vec A = sol.basis.col(c);
      LocalKillingField field = integrate_killing_field(
          chart, q, A, radius, 12, cfg.seed, cfg.tol_ode);
      KillingVerifyReport ver =
          verify_killing(chart, field, 3, cfg.tol_verify, cfg.tol_ode);
      json f;
      f["generator"] = to_json(A);
      f["radius"] = radius;
      f["feasibility_residual"] = field.feasibility_residual;
      f["bracket_residual"] = ver.bracket_residual;
      f["pullback_residual"] = ver.pullback_residual;
      f["pass"] = ver.pass;
      pass = pass && ver.pass;

      if (chart.metric) {
        std::mt19937 rng(cfg.seed + 1);
        std::normal_distribution<double> gauss;
        std::vector<Vec> pts;
        const double br = 0.5 * radius;
        for (int i = 0; i < 8; ++i) {
          Vec d(chart.base_dim);
          for (int k = 0; k < chart.base_dim; ++k) d[k] = gauss(rng);
          pts.push_back(Vec(q.head(chart.base_dim) + br * d / d.norm() *
                                             std::pow((i + 1.0) / 8.0, 0.5)));
        }
        BaseField bf = descend_to_base(chart, q, A, pts, cfg.tol_ode);
        f["base_killing_residual"] = bf.max_residual;
        pass = pass && bf.max_residual <= cfg.tol_verify;
      }
      fields.push_back(f);
    }
  }
  rep["fields"] = fields;
  rep["pass"] = pass;
  return rep.dump(2);
}

StrataOutput run_strata(const CartanChart& chart, const RunConfig& cfg) {
  if (cfg.grid.empty()) throw invalid_input("strata: empty grid");
  StrataOptions opts;
  opts.m_max = cfg.m_max;
  opts.tols.rel = cfg.tol_rank;
  // Grid scans run many short flows; the integrator follows the CLI knob
  // instead of the tighter single-point default.
  opts.jopts.ode_tol = cfg.tol_ode;
  opts.workers = cfg.workers;
  opts.seed = cfg.seed;
  opts.theta0 = cfg.theta0;
  StrataReport rep = scan_strata(chart, cfg.grid, opts);

  json j;
  j["version"] = kVersion;
  j["command"] = "strata";
  j["geometry"] = chart.name;
  j["config"] = config_echo(cfg);
  j["grid_shape"] = rep.grid_shape;
  j["m_max"] = rep.m_max;
  j["seed"] = rep.seed;
  j["theta0"] = rep.theta0;
  j["strata"] = rep.strata;
  j["strata_counts"] = rep.strata_counts;
  j["max_k"] = rep.max_k;
  j["lower_semicontinuity_ok"] = rep.lower_semicontinuity_ok;
  j["regular_set_dense"] = rep.regular_set_dense;
  j["locally_homogeneous"] = rep.locally_homogeneous;
  if (!rep.note.empty()) j["note"] = rep.note;
  {
    std::ostringstream hs;
    hs << chart.name << ':' << chart.dim() << ':' << chart.base_dim;
    for (const auto& d : chart.domain) hs << ':' << d[0] << ',' << d[1];
    j["chart_hash"] =
        fmt17((double)std::hash<std::string>{}(hs.str()) / 1e18);
  }
  json samples = json::array();
  for (const auto& s : rep.samples) {
    json e;
    e["x"] = s.x;
    e["k_m"] = s.k_m;
    e["k"] = s.k;
    e["m"] = s.stabilization;
    e["regular"] = s.regular;
    e["component"] = s.component;
    e["gap"] = std::isfinite(s.gap) ? json(s.gap) : json("inf");
    if (!s.error.empty()) e["error"] = s.error;
    samples.push_back(e);
  }
  j["samples"] = samples;

  std::ostringstream csv;
  for (size_t a = 0; a < cfg.grid.size(); ++a) csv << "x" << (a + 1) << ",";
  for (int r = 1; r <= cfg.m_max; ++r) csv << "k" << r << ",";
  csv << "k,m,gap,regular,component,error\n";
  for (const auto& s : rep.samples) {
    for (double x : s.x) csv << fmt17(x) << ",";
    for (int r = 1; r <= cfg.m_max; ++r) {
      if (r <= (int)s.k_m.size()) csv << s.k_m[r - 1];
      csv << ",";
    }
    csv << s.k << "," << s.stabilization << ","
        << (std::isfinite(s.gap) ? fmt17(s.gap) : "inf") << ","
        << (s.regular ? 1 : 0) << "," << s.component << "," << s.error
        << "\n";
  }
  return {j.dump(2), csv.str()};
}

std::string run_bch(const CartanChart* chart, const RunConfig& cfg) {
  if (cfg.order == 0 && !chart)
    throw invalid_input("bch: need --order or a geometry to verify against");
  json rep;
  rep["version"] = kVersion;
  rep["command"] = "bch";
  rep["config"] = config_echo(cfg);

  if (cfg.order > 0) {
    const auto terms = bch_terms(cfg.order);
    json t = json::array();
    for (const auto& poly : terms) {
      json e;
      e["k"] = poly.order;
      e["expression"] = poly.to_string();
      json coeffs;
      for (const auto& [w, c] : poly.terms)
        coeffs[lyndon_bracket_string(w)] = c.str();
      e["coefficients"] = coeffs;
      t.push_back(e);
    }
    rep["terms"] = t;
  }

  bool pass = true;
  if (chart) {
    const Vec q = chart_point(*chart, cfg);
    auto [X, Y] = seeded_pair(chart->dim(), cfg.seed);
    BchVerifyReport ver =
        verify_prop_bch(*chart, q, X, Y, cfg.kmax, cfg.tol_verify);
    rep["geometry"] = chart->name;
    json orders = json::array();
    for (const auto& o : ver.orders) {
      json e;
      e["k"] = o.k;
      e["z_fit"] = to_json(o.z_fit);
      e["a_eval"] = to_json(o.a_eval);
      e["rel_err"] = o.rel_err;
      e["pass"] = o.pass;
      orders.push_back(e);
    }
    rep["orders"] = orders;
    pass = ver.passed;
  }
  rep["pass"] = pass;
  return rep.dump(2);
}

std::vector<std::string> verify_check_names() {
  return {"frame_invertible",     "vertical_flow_fixes_base",
          "exp_log_roundtrip",    "zeta_matches_bch",
          "curvature_vertical_slots", "jet_equivariance",
          "vertical_identity",    "killing_monotone",
          "fiber_consistency",    "transport_membership",
          "bch_low_order_table",  "delta1_is_curvature"};
}

std::string run_verify(const CartanChart& chart, const RunConfig& cfg) {
  json rep;
  rep["version"] = kVersion;
  rep["command"] = "verify";
  rep["geometry"] = chart.name;
  rep["config"] = config_echo(cfg);
  if (cfg.list) {
    rep["checks"] = verify_check_names();
    rep["pass"] = true;
    return rep.dump(2);
  }

  const Vec q = chart_point(chart, cfg);
  const auto& lie = *chart.lie;
  const int N = lie.dim();
  auto [X, Y] = seeded_pair(N, cfg.seed);
  const bool has_p = lie.p_dim() > 0;  // r2 has a trivial structure group
  const Vec Xp = has_p ? Vec(Vec::Unit(N, N - 1)) : Vec(Vec::Zero(N));
  JetOptions jopts;
  RankTols tols;
  tols.rel = cfg.tol_rank;

  json checks = json::array();
  bool pass = true;
  auto add = [&](const std::string& name, double residual, double tol) {
    json c;
    c["name"] = name;
    c["residual"] = residual;
    c["tol"] = tol;
    c["pass"] = residual <= tol;
    pass = pass && (residual <= tol);
    checks.push_back(c);
  };
  const double tv = cfg.tol_verify;

  add("frame_invertible", chart.condition_at(q), 1e8);

  {
    double res = 0.0;
    if (chart.base_dim > 0) {
      const Vec b2 = vertical_flow(chart, q, Xp, 0.2, cfg.tol_ode);
      res = (b2.head(chart.base_dim) - q.head(chart.base_dim)).norm();
    }
    add("vertical_flow_fixes_base", res, 1e-8);
  }

  {
    const Vec Z = 0.1 * X;
    FlowOptions fo;
    fo.tol = cfg.tol_ode;
    const Vec end = flow(chart, q, Z, 1.0, fo).endpoint;
    LogOptions lo;
    lo.ode_tol = cfg.tol_ode;
    add("exp_log_roundtrip", (chart_log(chart, q, end, lo) - Z).norm(), 1e-7);
  }

  {
    const int kmax = chart.flat_model ? std::min(cfg.kmax, 4) : 3;
    BchVerifyReport ver = verify_prop_bch(chart, q, X, Y, kmax, tv);
    double worst = 0.0;
    for (const auto& o : ver.orders) worst = std::max(worst, o.rel_err);
    add("zeta_matches_bch", worst, tv);
  }

  {
    double vres = 0.0;
    curvature_at(chart, q, jopts, &vres);
    add("curvature_vertical_slots", vres, 1e-7);
  }

  add("jet_equivariance",
      has_p ? equivariance_check(chart, q, Xp, 0.2, 1, jopts).max_residual
            : 0.0,
      tv);

  {
    double res = 0.0;
    if (has_p) {
      CurvatureJet jet = omega_jet(chart, q, 1, jopts);
      const Vec lhs = contract(jet, 1, Xp);
      const Vec rhs = -lie.rep_on_V_inf(lie.ad_matrix(Xp)) * jet.J[0];
      res = (lhs - rhs).norm() / std::max(1.0, jet.J[0].norm());
    }
    add("vertical_identity", res, tv);
  }

  KillingJetSolution sol = stabilization_order(chart, q, cfg.m_max, tols, jopts);
  {
    double res = 0.0;
    for (size_t i = 1; i < sol.k_m.size(); ++i)
      if (sol.k_m[i] > sol.k_m[i - 1]) res = 1.0;
    add("killing_monotone", res, 0.5);
  }

  add("fiber_consistency",
      has_p ? fiber_consistency(chart, q, Xp, 0.3,
                                std::max(1, sol.order - 1), tols, jopts)
            : 0.0,
      tv);

  {
    double worst = 0.0;
    if (sol.dim() > 0) {
      const auto traj = transport_generator(chart, q, Vec(sol.basis.col(0)),
                                            Vec(0.5 * X), 0.5, 5, 2, tols,
                                            jopts);
      for (const auto& p : traj)
        worst = std::max(worst, p.membership_residual);
    }
    add("transport_membership", worst, tv);
  }

  {
    const auto terms = bch_terms(3);
    BracketPolynomial a1, a2, a3;
    a1.order = 1; a1.terms = {{"x", 1}, {"y", 1}};
    a2.order = 2; a2.terms = {{"xy", 1}};
    a3.order = 3; a3.terms = {{"xxy", Rational(1, 2)}, {"xyy", Rational(1, 2)}};
    const bool ok = terms[0] == a1 && terms[1] == a2 && terms[2] == a3;
    add("bch_low_order_table", ok ? 0.0 : 1.0, 0.5);
  }

  {
    DeltaKReport dk = delta_k(chart, q, X, Y, 1);
    add("delta1_is_curvature",
        std::max(dk.rows[0].err_plus, dk.rows[0].err_minus), tv);
  }

  rep["checks"] = checks;
  rep["pass"] = pass;
  return rep.dump(2);
}

}  // namespace cartan
