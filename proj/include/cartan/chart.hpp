#pragma once

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cartan/liealg.hpp"
#include "cartan/types.hpp"

namespace cartan {

struct MetricSpec;

struct FlowDiagnostics {
  int accepted_steps = 0;
  int rejected_steps = 0;
  double max_omega_residual = 0.0;  // |W(b) b' - X| along the trajectory
};

struct FlowResult {
  Vec endpoint;
  Mat pushforward;  // d(endpoint)/d(start), when requested
  Mat sensitivity;  // d(endpoint)/dX at t=1 scaling, when requested
  FlowDiagnostics diag;
};

struct FlowOptions {
  double tol = 1e-10;
  bool with_pushforward = false;
  bool with_sensitivity = false;
};

// Chart of the bundle with the connection form as data: ω_b(v) = W(b)·v in
// the algebra basis. Immutable after construction; all evaluation paths are
// const and safe to run concurrently.
class CartanChart {
 public:
  LieAlgebraPtr lie;
  std::string name;
  std::vector<std::array<double, 2>> domain;
  std::function<void(const double* b, Mat& W)> omega;
  double fd_step = 1e-4;   // step for finite-difference W Jacobians
  bool flat_model = false; // Maurer-Cartan chart: K vanishes identically
  int base_dim = 0;        // frontends: b = (x, theta), x = b[0..base_dim)
  std::shared_ptr<const MetricSpec> metric;  // set by the metric frontend

  int dim() const { return lie ? lie->dim() : 0; }
  bool contains(const Vec& b) const;
  void require_inside(const Vec& b) const;

  Mat omega_at(const Vec& b) const;
  /// Columns are the ω-constant basis fields at b, i.e. W(b)^{-1}.
  Mat frame_at(const Vec& b) const;
  Vec omega_constant_field(const Vec& b, const Vec& X) const;
  double condition_at(const Vec& b) const;

  /// d/db of the field b -> W(b)^{-1} X, central 4th order.
  Mat field_jacobian(const Vec& b, const Vec& X) const;
};

/// exp(b, tX): integrates the ω-constant field of X for time t.
FlowResult flow(const CartanChart& chart, const Vec& b, const Vec& X, double t,
                const FlowOptions& opts = {});

/// Flow along X in p; realizes the right action b·exp(tX).
Vec vertical_flow(const CartanChart& chart, const Vec& b, const Vec& X,
                  double t, double tol = 1e-10);

struct LogOptions {
  double tol = 1e-10;
  int max_iter = 30;
  double ode_tol = 1e-12;
  Vec initial_guess;  // empty: first-order chart guess W(b0)(b1-b0)
};

/// Inverse of exp_b: X with flow(b0, X, 1) = b1, by Newton shooting.
Vec chart_log(const CartanChart& chart, const Vec& b0, const Vec& b1,
              const LogOptions& opts = {});

/// zeta_b(X, Y) = log_b( exp( exp(b, X), Y ) ).
Vec zeta(const CartanChart& chart, const Vec& b, const Vec& X, const Vec& Y,
         double tol = 1e-10);

/// Largest radius r (by bisection-free geometric probing) such that
/// exp_b/log_b round-trips succeed for |X| <= r over sampled directions.
double estimate_normal_radius(const CartanChart& chart, const Vec& b,
                              int ndirs = 12, unsigned seed = 2026);

}  // namespace cartan
