#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cartan/types.hpp"

namespace cartan {

// Model pair (g, p) by structure constants in a basis adapted to p:
// e_0..e_{n-1} span the section sigma of g/p, e_n..e_{dim_g-1} span p.
// Elements of V = Lambda^2(g/p)* (x) g are stored as vectors of length
// npairs()*dim_g, pair index (a,b), a<b, lexicographic, fastest index the
// g-component. Elements of Hom((x)^m g, V) are stored row-major over the m
// derivative slots (first slot slowest), V-index fastest.
class LieAlgebraSpec {
 public:
  LieAlgebraSpec(std::string name, int dim_g, int p_start);

  /// Sets [e_i,e_j] component k to v (and the antisymmetric partner).
  void set_bracket(int i, int j, int k, double v);

  /// Checks antisymmetry, Jacobi, p subalgebra, and that the maximal ideal
  /// of g inside p is trivial. Throws invalid_input on violation.
  void validate() const;

  const std::string& name() const { return name_; }
  int dim() const { return dim_g_; }
  int n() const { return p_start_; }          // dim g/p
  int p_start() const { return p_start_; }
  int p_dim() const { return dim_g_ - p_start_; }
  int npairs() const { return p_start_ * (p_start_ - 1) / 2; }
  int dim_v() const { return npairs() * dim_g_; }
  long hom_dim(int m) const;

  double c(int i, int j, int k) const { return c_[(i * dim_g_ + j) * dim_g_ + k]; }

  Vec bracket(const Vec& X, const Vec& Y) const;
  Mat ad_matrix(const Vec& X) const;

  /// Ad(exp X) = exp(ad X) for arbitrary X in g.
  Mat ad_exp(const Vec& X) const;

  /// Ad(exp X) for X in p; throws if X has components off p.
  Mat adjoint_of_group_element(const Vec& X) const;

  /// Quotient action on g/p in the sigma basis (top-left n x n block works
  /// because Ad preserves p for p-group elements).
  Mat quotient_block(const Mat& adP) const;

  // V = Lambda^2(g/p)* (x) g
  int pair_index(int a, int b) const;  // requires a < b
  int v_index(int a, int b, int comp) const { return pair_index(a, b) * dim_g_ + comp; }

  /// Matrix of phi -> Ad p . phi((Ad-bar p^-1)u, (Ad-bar p^-1)v) on V.
  Mat rep_on_V(const Mat& adP) const;

  /// Infinitesimal version: phi -> adX.phi - phi(adbarX ., .) - phi(., adbarX .).
  Mat rep_on_V_inf(const Mat& adX) const;

  /// Applies the Hom((x)^m g, V) action psi -> p o psi o (Ad p^-1)^(x)m.
  Vec rep_on_hom(int m, const Mat& adP, const Vec& psi) const;

  /// Infinitesimal Hom action (derivative of rep_on_hom along exp(tX) at 0).
  Vec rep_on_hom_inf(int m, const Mat& adX, const Vec& psi) const;

  /// Orthonormal basis (columns) of the largest ad(g)-invariant subspace
  /// contained in p. Empty (dim_g x 0) for a valid model pair.
  Mat maximal_ideal_in_p(double tol = 1e-9) const;

  bool in_p(const Vec& X, double tol = 1e-12) const;

 private:
  std::string name_;
  int dim_g_;
  int p_start_;
  std::vector<double> c_;
};

using LieAlgebraPtr = std::shared_ptr<const LieAlgebraSpec>;

/// Parses { "name", "dim", "brackets": [[i,j,k,value]...], "p_start" }.
LieAlgebraPtr algebra_from_json(const std::string& json_text);

/// Builds structure constants from a matrix realization; brackets are
/// snapped to integers when within 1e-9 (all built-ins have integer tables).
LieAlgebraPtr algebra_from_matrices(const std::string& name,
                                    const std::vector<Mat>& basis,
                                    int p_start);

/// "euc2", "so3", "heis3", "sl2"; euclidean_algebra(n) for general n.
LieAlgebraPtr builtin_algebra(const std::string& name);
LieAlgebraPtr euclidean_algebra(int n);

/// Matrix realizations used by the Klein charts (same basis order as the
/// corresponding builtin_algebra specs).
std::vector<Mat> builtin_matrix_basis(const std::string& name);

/// Largest principal angle (radians) between the column spans.
double principal_angle(const Mat& A, const Mat& B);

/// Orthonormal kernel basis with cutoff max(rel_tol * s_max, abs_tol).
/// Returns the basis, numerical rank, and the singular values.
struct KernelResult {
  Mat basis;
  int rank = 0;
  Vec singular_values;
  /// Spectral separation at the decision threshold; +inf when one side of
  /// the cutoff is empty and the other is far away.
  double gap = 0.0;
};
KernelResult kernel_with_gap(const Mat& M, double rel_tol, double abs_tol);

}  // namespace cartan
