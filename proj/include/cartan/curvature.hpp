#pragma once

#include <vector>

#include "cartan/chart.hpp"
#include "cartan/liealg.hpp"
#include "cartan/types.hpp"

namespace cartan {

struct JetOptions {
  double h0 = 1e-3;          // step for the first derivative order
  double growth = 10.0;      // per-order step growth
  double h_cap = 0.15;       // keeps flows of length 2h inside the chart
  bool richardson = true;    // one extrapolation level on top of 4th order
  double ode_tol = 1e-12;
  bool check_vertical = true;
  double vertical_tol = 1e-8;

  double step(int r) const {
    double h = h0;
    for (int i = 1; i < r; ++i) h *= growth;
    return std::min(h, h_cap);
  }
};

// J[0] = K(b) in V = Lambda^2(g/p)* (x) g, J[r] in Hom((x)^r g, V).
// Derivative slots run over the full g-basis, first slot outermost
// (slowest index); the V slots run over the sigma-basis pairs.
struct CurvatureJet {
  LieAlgebraPtr lie;
  Vec b;
  int order = 0;
  std::vector<Vec> J;
  // Step-halving truncation estimate per level (max over directions of
  // |D_{h/2} - D_h|_inf / 15); 0 at level 0 and without Richardson. Rank
  // decisions must not trust entries below this: near C-infinity support
  // edges the wide stencils read exploding derivative tails and the raw
  // J_r is pure discretization artifact there.
  std::vector<double> trunc;
  double vertical_residual = 0.0;  // pre-quotient assertion at the basepoint
  JetOptions opts;
  double fd_step = 1e-4;  // chart FD step at build time (noise-model input)

  double norm(int r) const { return J[r].norm(); }
};

/// K(b) as a V-array (sigma slots). With `full` set, also returns the
/// pre-quotient array over all g-pairs for the vertical-vanishing check;
/// vertical_residual receives the largest vertical-slot entry (relative).
Vec curvature_at(const CartanChart& chart, const Vec& b,
                 const JetOptions& opts = {},
                 double* vertical_residual = nullptr);

/// Jets J_0..J_m by nested central differences along ω-constant flows.
CurvatureJet omega_jet(const CartanChart& chart, const Vec& b, int m,
                       const JetOptions& opts = {});

/// Appends the missing levels so that jet.order >= m.
void omega_jet_extend(const CartanChart& chart, CurvatureJet& jet, int m);

/// First-slot contraction of J_r with A; returns a Hom((x)^{r-1} g, V) array.
Vec contract(const CurvatureJet& jet, int r, const Vec& A);
Vec contract_hom(const LieAlgebraSpec& lie, int r, const Vec& Jr, const Vec& A);

struct EquivarianceReport {
  std::vector<double> residual;  // per order 0..m, relative
  double max_residual = 0.0;
};

/// Compares the jet at b·exp(tX) with the rep_on_hom transport of the jet
/// at b (transport matrix Ad(exp(-tX))).
EquivarianceReport equivariance_check(const CartanChart& chart, const Vec& b,
                                      const Vec& X, double t, int m,
                                      const JetOptions& opts = {});

}  // namespace cartan
