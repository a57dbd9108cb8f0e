#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cartan/chart.hpp"
#include "cartan/expr.hpp"
#include "cartan/liealg.hpp"

namespace cartan {

struct MetricSpec {
  int n = 0;
  std::vector<Expr> g;    // n*n, row-major, symmetric by shared nodes
  std::vector<Expr> dg;   // dg[(k*n+i)*n+j] = d g_ij / d x_k
  std::vector<std::array<double, 2>> domain;
  std::string name;

  const Expr& gij(int i, int j) const { return g[i * n + j]; }
  void eval(const double* x, Mat& G) const;
  void eval_d(const double* x, std::vector<Mat>& dG) const;
  bool in_domain(const double* x) const;
};

using MetricPtr = std::shared_ptr<const MetricSpec>;

/// "[[expr, expr],[expr, expr]]" with expressions in x1..xn. Validates
/// symmetry and positive-definiteness on a probe grid.
MetricPtr parse_metric(const std::string& text,
                       std::vector<std::array<double, 2>> domain = {},
                       const std::string& name = "user");

/// Metric file: JSON { "n", "g": [[expr strings]], "domain": [[lo,hi]..], "name" }.
MetricPtr metric_from_json(const std::string& json_text);

/// Levi-Civita Christoffel symbols at x; result[k](i,j) = Gamma^k_ij.
std::vector<Mat> christoffel(const MetricSpec& m, const Vec& x);

/// Orthonormal-frame-bundle chart b = (x, theta) with the Levi-Civita
/// connection; model pair euc(n)/so(n). Frames E(x,theta) = E0(x) exp(hat
/// theta), E0 the Gram-Schmidt (Cholesky) frame of the coordinate basis.
CartanChart riemannian_to_cartan(MetricPtr metric);

/// Maurer-Cartan chart of a matrix group in exponential coordinates.
/// Names: "so3", "se2", "heis3", "sl2".
CartanChart klein_chart(const std::string& group);

/// Built-in metrics: "flat2", "sphere2", "hyperbolic2", "revolution"
/// (f = 1 + (x1^2)/4; "revolution:<expr f>" for custom), "bump"
/// ("bump:<eps>" for custom amplitude, default 0.1).
MetricPtr builtin_metric(const std::string& name);

/// Accepts the metric names above plus "klein:<group>"; returns the chart.
CartanChart builtin_chart(const std::string& name);

}  // namespace cartan
