#pragma once

#include <vector>

#include "cartan/curvature.hpp"
#include "cartan/killing.hpp"

namespace cartan {

struct FieldSample {
  Vec Y;        // exponential-chart parameter
  Vec q;        // exp(b, Y)
  Vec value;    // A-tilde(q), chart tangent vector
};

struct LocalKillingField {
  Vec b;
  Vec A;            // generator, A-tilde(b) = W(b)^{-1} A
  double radius = 0.0;
  std::vector<FieldSample> samples;
  double feasibility_residual = 0.0;  // max_r |J_r ⌞ A| / |J_r|
};

struct KillingVerifyReport {
  double pullback_residual = 0.0;   // |(phi^s_A)* omega - omega|, s = +-0.1
  double bracket_residual = 0.0;    // max |[A-tilde, Y-tilde]| over basis Y
  double tol = 0.0;
  bool pass = false;
};

struct LocalAutomorphism {
  Vec b, b_target;
  double radius = 0.0;
  std::vector<FieldSample> samples;  // value = f(exp(b,Y)) = exp(b',Y)
  double pullback_residual = 0.0;
  double relation_residual = 0.0;    // jet-comparison residual at (b, b')
};

/// Builds the local Killing field of a generator A by pushing W(b)^{-1}A
/// forward along exponential flows to exp(b, Y) for sampled Y.
LocalKillingField integrate_killing_field(const CartanChart& chart,
                                          const Vec& b, const Vec& A,
                                          double radius, int samples,
                                          unsigned seed = 2026,
                                          double ode_tol = 1e-10);

/// Evaluates the field of (b, A) at an arbitrary chart point near b.
Vec killing_field_at(const CartanChart& chart, const Vec& b, const Vec& A,
                     const Vec& q, double ode_tol = 1e-10);

KillingVerifyReport verify_killing(const CartanChart& chart,
                                   const LocalKillingField& field,
                                   int check_samples, double tol,
                                   double ode_tol = 1e-10);

struct MRelatedResult {
  bool related = false;
  double residual = 0.0;  // max over orders, relative to jet norms
  std::vector<double> per_order;
};

MRelatedResult m_related(const CartanChart& chart, const Vec& b,
                         const Vec& b2, int m, double tol,
                         const JetOptions& jopts = {});

/// f = exp_{b'} ∘ log_b on a ball; requires b, b' related at order m_check.
LocalAutomorphism local_automorphism(const CartanChart& chart, const Vec& b,
                                     const Vec& b2, double radius, int samples,
                                     int m_check, double tol,
                                     unsigned seed = 2026,
                                     double ode_tol = 1e-10);

/// Maps a point through the automorphism: exp_{b'}(log_b(q)).
Vec automorphism_apply(const CartanChart& chart, const Vec& b, const Vec& b2,
                       const Vec& q, double ode_tol = 1e-10);

struct DeltaKRow {
  int k = 0;
  Vec direct;          // [X,..,X,Y] - omega_b [X~,..,X~,Y~]
  Vec recursion_plus;  // K_b(X, W_k - Delta_k) + (X~.Delta_k) + [X, Delta_k]
  Vec recursion_minus; // same with -(X~.Delta_k)
  double err_plus = 0.0, err_minus = 0.0;
  double xder_norm = 0.0;  // |X~.Delta_{k-1}|: the candidates differ by twice
                           // this, so ~0 means the row cannot decide the sign
};

struct DeltaKReport {
  std::vector<DeltaKRow> rows;   // k = 1..k_max
  int matching_sign = 0;         // +1 / -1 / 0 (undecided)
};

/// Delta_k by direct nested vector-field brackets and by both sign
/// candidates of the recursion; k_max <= 3.
DeltaKReport delta_k(const CartanChart& chart, const Vec& b, const Vec& X,
                     const Vec& Y, int k_max);

struct BaseFieldSample {
  Vec x;
  Vec value;
  double killing_residual = 0.0;  // |L_A g| at x, sup over components
};

struct BaseField {
  std::vector<BaseFieldSample> samples;
  double max_residual = 0.0;
};

/// Projects the field to base coordinates over sample points and evaluates
/// the Killing-equation residual L_A g by finite differences.
BaseField descend_to_base(const CartanChart& chart, const Vec& b, const Vec& A,
                          const std::vector<Vec>& base_points,
                          double ode_tol = 1e-10);

}  // namespace cartan
