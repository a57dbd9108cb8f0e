#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <vector>

#include "cartan/liealg.hpp"
#include "cartan/types.hpp"

namespace cartan {

using Rational = boost::multiprecision::cpp_rational;

// Element of the free Lie algebra on letters x, y, homogeneous of degree
// `order`, in Lyndon-word coordinates: each key is a Lyndon word whose
// bracketing (by standard factorization) is the basis element.
struct BracketPolynomial {
  int order = 0;
  std::map<std::string, Rational> terms;

  bool operator==(const BracketPolynomial& o) const {
    return order == o.order && terms == o.terms;
  }
  /// "1/2*[x,[x,y]] + ..." with Lyndon bracketings spelled out.
  std::string to_string() const;
};

/// Lyndon word -> nested bracket string, e.g. "xxy" -> "[x,[x,y]]".
std::string lyndon_bracket_string(const std::string& word);

/// Standard factorization w = uv, v the longest proper Lyndon suffix.
std::pair<std::string, std::string> lyndon_factorize(const std::string& word);

/// Exact coefficients a_1..a_{k_max} of the expansion
///   log(exp tX exp tY) = sum_k (t^k / k!) a_k(X, Y),
/// i.e. k! times the homogeneous BCH terms. k_max <= 8.
std::vector<BracketPolynomial> bch_terms(int k_max);

/// Substitutes concrete algebra elements for the letters.
Vec evaluate_in_algebra(const BracketPolynomial& poly,
                        const LieAlgebraSpec& lie, const Vec& X, const Vec& Y);

/// Letter-swap image (x <-> y), reduced back to Lyndon coordinates.
BracketPolynomial swap_letters(const BracketPolynomial& poly);

class CartanChart;  // bundle module

struct TaylorFitResult {
  std::vector<Vec> z;           // z[k-1] = z_k, k = 1..k_max
  std::vector<double> z_err;    // 1-sigma fit error per order (vector norm)
  double rms_residual = 0.0;    // fit residual over the grid
};

/// Least-squares Taylor extraction of zeta_b(tX, tY) over the symmetric
/// grid t in +-{1..half_points} h. Coefficient k is rescaled by k!.
TaylorFitResult taylor_fit_zeta(const CartanChart& chart, const Vec& b,
                                const Vec& X, const Vec& Y, int k_max,
                                double h = 5e-2, int half_points = 8,
                                double ode_tol = 1e-12);

struct BchOrderCheck {
  int k = 0;
  Vec z_fit;
  Vec a_eval;
  double rel_err = 0.0;  // relative to max(1, |a_eval|)
  bool pass = false;
};

struct BchVerifyReport {
  std::vector<BchOrderCheck> orders;
  bool passed = false;
};

/// Compares fitted z_k against a_k evaluated on the omega-constant fields.
/// On flat model charts (K = 0) algebra brackets are used for all orders;
/// on curved charts nested finite-difference field brackets, k_max <= 3.
BchVerifyReport verify_prop_bch(const CartanChart& chart, const Vec& b,
                                const Vec& X, const Vec& Y, int k_max,
                                double tol);

}  // namespace cartan
