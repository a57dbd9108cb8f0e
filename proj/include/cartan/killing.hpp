#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cartan/curvature.hpp"

namespace cartan {

struct RankTols {
  double rel = 1e-7;   // relative singular-value cutoff
  double abs = 1e-6;   // absolute floor, in curvature units
  double angle = 1e-6; // subspace-equality threshold for stabilization
};

/// Conservative model of the finite-difference noise in J_r entries (the
/// nested stencils amplify the K-evaluation roundoff by ~C/h per level).
/// Rank cutoffs never decide below a multiple of this floor.
double jet_noise_floor(int r, const JetOptions& opts, double fd_step);

/// Rank decision at one derivative order, restricted to the kernel of the
/// previous orders. kept + kernel columns = previous kernel dimension.
struct OrderDecision {
  int order = 0;
  Vec sigma;            // singular values of the restricted contraction map
  int kept = 0;         // rows kept as independent constraints
  double cutoff = 0.0;  // max(rel*sigma_max, abs floor, noise floor)
  double gap = 0.0;     // separation across the cutoff (+inf when one-sided)
};

// Kill^m(b) computed as nested kernel intersections: each order's
// constraints are restricted to the survivors of the previous orders, so
// Kill^{m+1} ⊆ Kill^m holds by construction and each order gets a rank
// decision at its own noise scale.
struct KillingJetSolution {
  Vec b;
  int order = 0;                     // deepest jet order used
  Mat basis;                         // dim_g x k, orthonormal columns
  std::vector<OrderDecision> orders; // decisions for r = 1..order
  std::vector<int> k_m;              // k_1..k_{order}
  double gap = 0.0;                  // worst decision gap over the orders
  RankTols tols;
  std::optional<int> stabilization;  // m(b) when detected
  bool gap_warning = false;          // some decision gap below 10

  int dim() const { return (int)basis.cols(); }
};

/// Kill^m(b): kernel of A -> (J_r ⌞ A)_{r=1..m}.
KillingJetSolution killing_generators(const CartanChart& chart, const Vec& b,
                                      int m, const RankTols& tols = {},
                                      const JetOptions& jopts = {});

/// Same, reusing a precomputed jet of order >= m.
KillingJetSolution killing_generators(const CurvatureJet& jet, int m,
                                      const RankTols& tols = {});

/// Smallest m <= m_max with Kill^m = Kill^{m+1} (dimension equality plus
/// principal angle <= tols.angle). Jets are grown adaptively: once the
/// dimension hits zero or repeats, deeper orders cannot change the space.
/// `stabilization` is unset when m_max is reached without equality.
KillingJetSolution stabilization_order(const CartanChart& chart, const Vec& b,
                                       int m_max = 4, const RankTols& tols = {},
                                       const JetOptions& jopts = {});

/// Principal angle between Kill^m(b·exp(tX)) and Ad(exp(-tX))·Kill^m(b),
/// X in p.
double fiber_consistency(const CartanChart& chart, const Vec& b, const Vec& X,
                         double t, int m, const RankTols& tols = {},
                         const JetOptions& jopts = {});

/// max_r |J_r ⌞ A| / (|A| max(1, max_r |J_r|)) over 1 <= r <= m.
double membership_residual(const CurvatureJet& jet, const Vec& A, int m);

struct TransportPoint {
  double t = 0.0;
  Vec b;
  Vec A;
  double membership_residual = 0.0;
};

/// A(t) = ω_{γ(t)}(φ^t_{X*} Ã) along γ(t) = exp(b, tX), with Kill-membership
/// residuals from fresh jets of order `jet_order` at the checkpoints.
std::vector<TransportPoint> transport_generator(
    const CartanChart& chart, const Vec& b, const Vec& A, const Vec& X,
    double T, int checkpoints, int jet_order, const RankTols& tols = {},
    const JetOptions& jopts = {});

struct StrataSample {
  std::vector<double> x;      // base coordinates
  std::vector<int> k_m;       // k_1.. up to the order actually computed
  int k = -1;
  int stabilization = -1;     // -1: not stabilized within m_max
  bool regular = false;
  int component = -1;
  double gap = 0.0;
  std::string error;          // per-sample failure, scan continues
};

struct StrataReport {
  std::vector<int> grid_shape;
  std::vector<std::array<double, 3>> axes;  // lo, hi, steps per base axis
  std::vector<StrataSample> samples;
  int m_max = 0;
  RankTols tols;
  unsigned seed = 0;
  double theta0 = 0.0;
  std::vector<int> strata;            // distinct k values, ascending
  std::vector<long> strata_counts;    // sample counts per stratum
  bool lower_semicontinuity_ok = true;
  bool regular_set_dense = false;  // every sample sees a regular neighbor
  bool locally_homogeneous = false;   // single stratum with k = dim g
  int max_k = 0;
  std::string chart_name;
  std::string note;                   // e.g. degenerate-grid convention
};

struct StrataOptions {
  int m_max = 4;
  RankTols tols;
  JetOptions jopts;
  int workers = 1;
  unsigned seed = 2026;
  double theta0 = 0.0;  // fiber coordinate of the scanned section
};

/// Grid scan of k over base coordinates; axes = (lo, hi, steps) per axis.
StrataReport scan_strata(const CartanChart& chart,
                         const std::vector<std::array<double, 3>>& axes,
                         const StrataOptions& opts = {});

}  // namespace cartan
