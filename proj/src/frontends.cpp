#include "cartan/frontends.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <json.hpp>
#include <sstream>

namespace cartan {

using json = nlohmann::json;

void MetricSpec::eval(const double* x, Mat& G) const {
  G.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = gij(i, j).eval(x);
}

void MetricSpec::eval_d(const double* x, std::vector<Mat>& dG) const {
  dG.resize(n);
  for (int k = 0; k < n; ++k) {
    dG[k].resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dG[k](i, j) = dg[((size_t)k * n + i) * n + j].eval(x);
  }
}

bool MetricSpec::in_domain(const double* x) const {
  for (int i = 0; i < n; ++i)
    if (x[i] < domain[i][0] || x[i] > domain[i][1]) return false;
  return true;
}

namespace {

std::string fmt_point(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

MetricPtr build_metric(std::vector<Expr> entries, int n,
                       std::vector<std::array<double, 2>> domain,
                       const std::string& name) {
  auto m = std::make_shared<MetricSpec>();
  m->n = n;
  m->name = name;
  if (domain.empty()) domain.assign(n, {-2.0, 2.0});
  if ((int)domain.size() != n)
    throw invalid_input("metric domain has wrong dimension");
  for (auto& ax : domain)
    if (!(ax[0] < ax[1])) throw invalid_input("empty metric domain axis");
  m->domain = std::move(domain);
  m->g = std::move(entries);

  // Symmetry on probes, then share the upper-triangle expression objects.
  const int probes_per_axis = 5;
  std::vector<Vec> probes;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= probes_per_axis;
  for (int s = 0; s < total; ++s) {
    Vec x(n);
    int idx = s;
    for (int i = 0; i < n; ++i) {
      int c = idx % probes_per_axis;
      idx /= probes_per_axis;
      double lo = m->domain[i][0], hi = m->domain[i][1];
      x[i] = lo + (hi - lo) * (c + 0.5) / probes_per_axis;
    }
    probes.push_back(x);
  }
  for (const Vec& x : probes) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double a = m->gij(i, j).eval(x.data());
        double b = m->gij(j, i).eval(x.data());
        if (!std::isfinite(a) || !std::isfinite(b))
          throw invalid_input("metric entry not finite at probe " +
                              fmt_point(x));
        if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a)))
          throw invalid_input("asymmetric metric (entries (" +
                              std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") at probe " +
                              fmt_point(x) + ")");
      }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m->g[j * n + i] = m->g[i * n + j];

  for (const Vec& x : probes) {
    Mat G;
    m->eval(x.data(), G);
    if (!G.allFinite())
      throw invalid_input("metric not finite at probe " + fmt_point(x));
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success)
      throw invalid_input("metric not positive definite at probe " +
                          fmt_point(x));
  }

  m->dg.resize((size_t)n * n * n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m->dg[((size_t)k * n + i) * n + j] = m->gij(i, j).diff(k);
  return m;
}

// Splits "[e11, e12], [e21, e22]" style content at top-level commas.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> parse_matrix_text(const std::string& text) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw invalid_input("metric matrix must be [[...],[...]]");
  std::vector<std::string> rows_txt =
      split_top_level(t.substr(1, t.size() - 2));
  std::vector<std::string> entries;
  size_t ncols = 0;
  for (auto& row : rows_txt) {
    std::string r = trim(row);
    if (r.size() < 2 || r.front() != '[' || r.back() != ']')
      throw invalid_input("metric row must be [expr, expr, ...]");
    auto cells = split_top_level(r.substr(1, r.size() - 2));
    if (ncols == 0) ncols = cells.size();
    if (cells.size() != ncols)
      throw invalid_input("ragged metric matrix");
    for (auto& c : cells) entries.push_back(trim(c));
  }
  if (rows_txt.size() != ncols)
    throw invalid_input("metric matrix must be square");
  return entries;
}

}  // namespace

MetricPtr parse_metric(const std::string& text,
                       std::vector<std::array<double, 2>> domain,
                       const std::string& name) {
  auto cells = parse_matrix_text(text);
  int n = (int)std::lround(std::sqrt((double)cells.size()));
  std::vector<Expr> entries;
  for (auto& c : cells) entries.push_back(parse_expr(c, n));
  return build_metric(std::move(entries), n, std::move(domain), name);
}

MetricPtr metric_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw invalid_input(std::string("metric JSON: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("g"))
    throw invalid_input("metric JSON: need \"n\" and \"g\"");
  int n = j["n"].get<int>();
  if (n < 2 || n > 3) throw invalid_input("metric JSON: n must be 2 or 3");
  if (!j["g"].is_array() || (int)j["g"].size() != n)
    throw invalid_input("metric JSON: g must be an n x n string matrix");
  std::vector<Expr> entries;
  for (const auto& row : j["g"]) {
    if (!row.is_array() || (int)row.size() != n)
      throw invalid_input("metric JSON: g must be an n x n string matrix");
    for (const auto& cell : row)
      entries.push_back(parse_expr(cell.get<std::string>(), n));
  }
  std::vector<std::array<double, 2>> domain;
  if (j.contains("domain")) {
    for (const auto& ax : j["domain"])
      domain.push_back({ax[0].get<double>(), ax[1].get<double>()});
  }
  return build_metric(std::move(entries), n, std::move(domain),
                      j.value("name", std::string("user")));
}

std::vector<Mat> christoffel(const MetricSpec& m, const Vec& x) {
  if (!m.in_domain(x.data()))
    throw invalid_input("christoffel: point outside metric domain");
  Mat G;
  std::vector<Mat> dG;
  m.eval(x.data(), G);
  m.eval_d(x.data(), dG);
  Mat Ginv = G.inverse();
  if (!Ginv.allFinite()) throw numerical_error("singular metric");
  std::vector<Mat> Gamma(m.n, Mat::Zero(m.n, m.n));
  for (int k = 0; k < m.n; ++k)
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) {
        double s = 0;
        for (int l = 0; l < m.n; ++l)
          s += Ginv(k, l) * (dG[i](j, l) + dG[j](i, l) - dG[l](i, j));
        Gamma[k](i, j) = 0.5 * s;
      }
  return Gamma;
}

namespace {

// Lower-half operator for the Cholesky differential:
// dL = L Phi(L^{-1} dG L^{-T}), Phi = strict lower + half diagonal.
Mat phi_lower(const Mat& M) {
  Mat R = M.triangularView<Eigen::StrictlyLower>();
  R.diagonal() = 0.5 * M.diagonal();
  return R;
}

std::vector<Mat> rotation_generators(int n) {
  std::vector<Mat> gens;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Mat G = Mat::Zero(n, n);
      G(b, a) = 1;
      G(a, b) = -1;
      gens.push_back(G);
    }
  return gens;
}

// Top-right block of exp([[M, B],[0, M]]) is the differential of exp at M
// applied to B.
Mat dexp_at(const Mat& M, const Mat& B) {
  const int k = (int)M.rows();
  Mat big = Mat::Zero(2 * k, 2 * k);
  big.topLeftCorner(k, k) = M;
  big.bottomRightCorner(k, k) = M;
  big.topRightCorner(k, k) = B;
  Mat e = big.exp();
  return e.topRightCorner(k, k);
}

}  // namespace

CartanChart riemannian_to_cartan(MetricPtr metric) {
  if (!metric) throw invalid_input("null metric");
  const int n = metric->n;
  auto lie = euclidean_algebra(n);
  const int N = lie->dim();
  const int npairs = n * (n - 1) / 2;

  CartanChart chart;
  chart.lie = lie;
  chart.name = metric->name;
  chart.metric = metric;
  chart.base_dim = n;
  chart.domain = metric->domain;
  // theta box inside the exp-coordinate injectivity region |theta| < pi/2
  const double theta_box = (n == 2) ? 1.45 : 0.85;
  for (int p = 0; p < npairs; ++p)
    chart.domain.push_back({-theta_box, theta_box});

  auto gens = rotation_generators(n);
  MetricPtr m = metric;

  chart.omega = [m, n, N, npairs, gens](const double* b, Mat& W) {
    const double* x = b;
    Mat G;
    std::vector<Mat> dG;
    m->eval(x, G);
    m->eval_d(x, dG);

    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success)
      throw numerical_error("metric not positive definite along trajectory");
    Mat L = llt.matrixL();
    Mat E0 = L.transpose()
                 .triangularView<Eigen::Upper>()
                 .solve(Mat::Identity(n, n));  // L^{-T}

    Mat theta_hat = Mat::Zero(n, n);
    for (int p = 0; p < npairs; ++p) theta_hat += b[n + p] * gens[p];
    Mat R = theta_hat.exp();
    Mat E = E0 * R;
    Mat Einv = R.transpose() * L.transpose();  // E^{-1} = R^T L^T

    // Christoffels (exact from the expression derivatives)
    Mat Ginv = (L.transpose().triangularView<Eigen::Upper>().solve(
        L.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n))));
    std::vector<Mat> Gamma(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int l = 0; l < n; ++l)
            s += Ginv(k, l) * (dG[i](j, l) + dG[j](i, l) - dG[l](i, j));
          Gamma[k](i, j) = 0.5 * s;
        }

    W.setZero(N, N);
    for (int k = 0; k < n; ++k) {
      // frame derivative along x_k through the Cholesky differential
      Mat S = L.triangularView<Eigen::Lower>().solve(dG[k]);
      S = L.triangularView<Eigen::Lower>()
              .solve(S.transpose())
              .transpose();               // L^{-1} dG L^{-T}
      Mat dL = L * phi_lower(S);
      Mat dE0 = -E0 * dL.transpose() * E0;

      Mat Gk(n, n);  // (Gamma_k)_{ij} = Gamma^i_{kj}
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Gk(i, j) = Gamma[i](k, j);

      Mat xi = Einv * (Gk * E + dE0 * R);
      xi = 0.5 * (xi - xi.transpose());
      W.col(k).head(n) = Einv.col(k);
      // coordinates on the generator basis: xi = sum_p xi(b_p, a_p) G_p
      int p = 0;
      for (int a = 0; a < n; ++a)
        for (int c = a + 1; c < n; ++c) W(n + p++, k) = xi(c, a);
    }
    for (int p = 0; p < npairs; ++p) {
      Mat D = dexp_at(theta_hat, gens[p]);
      Mat xi = R.transpose() * D;
      xi = 0.5 * (xi - xi.transpose());
      int q = 0;
      for (int a = 0; a < n; ++a)
        for (int c = a + 1; c < n; ++c) W(n + q++, n + p) = xi(c, a);
      // solder part of vertical directions is exactly zero
    }
  };
  return chart;
}

CartanChart klein_chart(const std::string& group) {
  std::string alg = group;
  if (group == "se2") alg = "euc2";
  double box = 0.9;
  std::vector<Mat> basis;
  LieAlgebraPtr lie;
  if (group == "r2") {
    Mat T0 = Mat::Zero(3, 3), T1 = Mat::Zero(3, 3);
    T0(0, 2) = 1;
    T1(1, 2) = 1;
    basis = {T0, T1};
    lie = algebra_from_matrices("r2", basis, 2);
    box = 3.0;
  } else {
    basis = builtin_matrix_basis(alg == "euc2" ? "euc2_generic" : alg);
    lie = builtin_algebra(alg);
    if (group == "heis3") box = 3.0;
    if (group == "se2") box = 2.0;
  }
  const int d = (int)basis.size();
  const long k2 = basis[0].size();

  Mat Bflat(k2, d);
  for (int i = 0; i < d; ++i)
    Bflat.col(i) = Eigen::Map<const Vec>(basis[i].data(), k2);
  auto qr = std::make_shared<Eigen::ColPivHouseholderQR<Mat>>(Bflat);

  CartanChart chart;
  chart.lie = lie;
  chart.name = "klein:" + group;
  chart.flat_model = true;
  chart.domain.assign(d, {-box, box});
  const int k = (int)basis[0].rows();

  chart.omega = [basis, qr, d, k](const double* v, Mat& W) {
    Mat M = Mat::Zero(k, k);
    for (int i = 0; i < d; ++i) M += v[i] * basis[i];
    Mat Q = M.exp();
    Mat Qinv = (-M).exp();
    W.resize(d, d);
    for (int j = 0; j < d; ++j) {
      Mat D = dexp_at(M, basis[j]);
      Mat C = Qinv * D;
      Vec coef = qr->solve(Eigen::Map<const Vec>(C.data(), C.size()));
      W.col(j) = coef;
    }
  };
  return chart;
}

MetricPtr builtin_metric(const std::string& name) {
  std::string base = name, arg;
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    base = name.substr(0, colon);
    arg = name.substr(colon + 1);
  }
  if (base == "flat2") {
    return parse_metric("[[1,0],[0,1]]", {{{-2, 2}}, {{-2, 2}}}, "flat2");
  }
  if (base == "sphere2") {
    return parse_metric("[[4/(1+x1^2+x2^2)^2, 0],[0, 4/(1+x1^2+x2^2)^2]]",
                        {{{-2, 2}}, {{-2, 2}}}, "sphere2");
  }
  if (base == "hyperbolic2") {
    return parse_metric("[[4/(1-x1^2-x2^2)^2, 0],[0, 4/(1-x1^2-x2^2)^2]]",
                        {{{-0.7, 0.7}}, {{-0.7, 0.7}}}, "hyperbolic2");
  }
  if (base == "revolution") {
    // Exponents bind a full rational: "x1^2/4" would read as x1^(2/4).
    std::string f = arg.empty() ? "1 + (x1^2)/4" : arg;
    Expr fe = parse_expr(f, 2);
    std::vector<Expr> entries = {Expr::number(1.0), Expr::number(0.0),
                                 Expr::number(0.0), fe * fe};
    return build_metric(std::move(entries), 2,
                        {{{0.5, 2.0}}, {{-1.2, 1.2}}},
                        arg.empty() ? "revolution" : name);
  }
  if (base == "bump") {
    double eps = 0.1;
    if (!arg.empty()) {
      try {
        eps = std::stod(arg);
      } catch (...) {
        throw invalid_input("bump amplitude must be a number");
      }
    }
    if (!(eps >= 0.0 && eps <= 0.3))
      throw invalid_input("bump amplitude out of [0, 0.3]");
    auto x1 = Expr::variable(0), x2 = Expr::variable(1);
    auto radial = [&](double cx, double cy, double rho) {
      Expr dx = x1 - Expr::number(cx);
      Expr dy = x2 - Expr::number(cy);
      return (dx * dx + dy * dy) / Expr::number(rho * rho);
    };
    Expr b1 = Expr::bump1(radial(0.07, -0.03, 0.55));
    Expr b2 = Expr::bump1(radial(-0.05, 0.06, 0.50));
    Expr b3 = Expr::bump1(radial(0.02, 0.09, 0.45));
    Expr e = Expr::number(eps);
    std::vector<Expr> entries = {Expr::number(1.0) + e * b1,
                                 Expr::number(0.5) * e * b3,
                                 Expr::number(0.5) * e * b3,
                                 Expr::number(1.0) + e * b2};
    return build_metric(std::move(entries), 2, {{{-2, 2}}, {{-2, 2}}},
                        arg.empty() ? "bump" : name);
  }
  throw invalid_input("unknown builtin metric: " + name);
}

CartanChart builtin_chart(const std::string& name) {
  if (name.rfind("klein:", 0) == 0) return klein_chart(name.substr(6));
  return riemannian_to_cartan(builtin_metric(name));
}

}  // namespace cartan
