#include "cartan/liealg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>

#include <json.hpp>

namespace cartan {

using json = nlohmann::json;

LieAlgebraSpec::LieAlgebraSpec(std::string name, int dim_g, int p_start)
    : name_(std::move(name)), dim_g_(dim_g), p_start_(p_start) {
  if (dim_g <= 0) throw invalid_input("algebra dimension must be positive");
  if (p_start < 0 || p_start > dim_g)
    throw invalid_input("p_start out of range");
  c_.assign((size_t)dim_g * dim_g * dim_g, 0.0);
}

void LieAlgebraSpec::set_bracket(int i, int j, int k, double v) {
  if (i < 0 || j < 0 || k < 0 || i >= dim_g_ || j >= dim_g_ || k >= dim_g_)
    throw invalid_input("bracket index out of range");
  if (i == j) {
    if (v != 0.0) throw invalid_input("[e_i, e_i] must vanish");
    return;
  }
  auto at = [&](int a, int b) -> double& {
    return c_[((size_t)a * dim_g_ + b) * dim_g_ + k];
  };
  if (at(i, j) != 0.0 && at(i, j) != v)
    throw invalid_input("conflicting duplicate bracket entry");
  at(i, j) = v;
  at(j, i) = -v;
}

long LieAlgebraSpec::hom_dim(int m) const {
  long d = dim_v();
  for (int r = 0; r < m; ++r) d *= dim_g_;
  return d;
}

Vec LieAlgebraSpec::bracket(const Vec& X, const Vec& Y) const {
  if (X.size() != dim_g_ || Y.size() != dim_g_)
    throw invalid_input("bracket: vector length != dim g");
  Vec Z = Vec::Zero(dim_g_);
  for (int i = 0; i < dim_g_; ++i) {
    if (X[i] == 0.0) continue;
    for (int j = 0; j < dim_g_; ++j) {
      if (Y[j] == 0.0) continue;
      for (int k = 0; k < dim_g_; ++k) Z[k] += X[i] * Y[j] * c(i, j, k);
    }
  }
  return Z;
}

Mat LieAlgebraSpec::ad_matrix(const Vec& X) const {
  Mat M = Mat::Zero(dim_g_, dim_g_);
  for (int i = 0; i < dim_g_; ++i) {
    if (X[i] == 0.0) continue;
    for (int j = 0; j < dim_g_; ++j)
      for (int k = 0; k < dim_g_; ++k) M(k, j) += X[i] * c(i, j, k);
  }
  return M;
}

Mat LieAlgebraSpec::ad_exp(const Vec& X) const {
  return ad_matrix(X).exp();
}

bool LieAlgebraSpec::in_p(const Vec& X, double tol) const {
  for (int a = 0; a < p_start_; ++a)
    if (std::abs(X[a]) > tol) return false;
  return true;
}

Mat LieAlgebraSpec::adjoint_of_group_element(const Vec& X) const {
  if (!in_p(X))
    throw invalid_input("adjoint_of_group_element: argument not in p");
  return ad_exp(X);
}

Mat LieAlgebraSpec::quotient_block(const Mat& adP) const {
  return adP.topLeftCorner(p_start_, p_start_);
}

int LieAlgebraSpec::pair_index(int a, int b) const {
  return a * (2 * p_start_ - a - 1) / 2 + (b - a - 1);
}

Mat LieAlgebraSpec::rep_on_V(const Mat& adP) const {
  const int n = p_start_, d = dim_g_;
  Mat Q = quotient_block(adP).inverse();  // Ad-bar p^{-1}
  Mat M = Mat::Zero(dim_v(), dim_v());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c0 = 0; c0 < d; ++c0) {
        int col = v_index(a, b, c0);
        for (int al = 0; al < n; ++al)
          for (int be = al + 1; be < n; ++be) {
            double w = Q(a, al) * Q(b, be) - Q(b, al) * Q(a, be);
            if (w == 0.0) continue;
            for (int cp = 0; cp < d; ++cp)
              M(v_index(al, be, cp), col) += adP(cp, c0) * w;
          }
      }
  return M;
}

Mat LieAlgebraSpec::rep_on_V_inf(const Mat& adX) const {
  const int n = p_start_, d = dim_g_;
  Mat Q = adX.topLeftCorner(n, n);  // ad-bar X on g/p
  Mat M = Mat::Zero(dim_v(), dim_v());
  // phi = e^{(a,b)} (x) e_c; (X.phi)(e_al, e_be) =
  //   delta adX e_c  -  phi(adbarX e_al, e_be)  -  phi(e_al, adbarX e_be)
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c0 = 0; c0 < d; ++c0) {
        int col = v_index(a, b, c0);
        for (int cp = 0; cp < d; ++cp)
          M(v_index(a, b, cp), col) += adX(cp, c0);
        for (int al = 0; al < n; ++al)
          for (int be = al + 1; be < n; ++be) {
            double w = -(Q(a, al) * ((b == be) ? 1.0 : 0.0) -
                         Q(b, al) * ((a == be) ? 1.0 : 0.0))   // u-slot
                       - (((al == a) ? 1.0 : 0.0) * Q(b, be) -
                          ((al == b) ? 1.0 : 0.0) * Q(a, be));  // v-slot
            if (w != 0.0) M(v_index(al, be, c0), col) += w;
          }
      }
  return M;
}

namespace {

// In-place contraction of derivative slot k with matrix T:
// psi'[.., j, ..] = sum_i T(i, j) psi[.., i, ..]
void contract_slot(int m, int k, int dim_g, long vdim, const Mat& T,
                   Vec& data) {
  long pre = 1;
  for (int r = 0; r < k; ++r) pre *= dim_g;
  long post = vdim;
  for (int r = k + 1; r < m; ++r) post *= dim_g;
  Vec out = Vec::Zero(data.size());
  for (long p = 0; p < pre; ++p)
    for (int j = 0; j < dim_g; ++j)
      for (int i = 0; i < dim_g; ++i) {
        double t = T(i, j);
        if (t == 0.0) continue;
        long src = (p * dim_g + i) * post;
        long dst = (p * dim_g + j) * post;
        out.segment(dst, post) += t * data.segment(src, post);
      }
  data = out;
}

void apply_on_v_slot(const Mat& Vact, long rows, long vdim, Vec& data) {
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor>>
      M(data.data(), rows, vdim);
  M = M * Vact.transpose();
}

Mat orthonormal_columns(const Mat& A) {
  if (A.cols() == 0) return A;
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ() * Mat::Identity(A.rows(), A.cols());
  return Q;
}

}  // namespace

Vec LieAlgebraSpec::rep_on_hom(int m, const Mat& adP, const Vec& psi) const {
  if (psi.size() != hom_dim(m))
    throw invalid_input("rep_on_hom: wrong tensor length");
  Vec data = psi;
  Mat inv = adP.inverse();
  for (int k = 0; k < m; ++k) contract_slot(m, k, dim_g_, dim_v(), inv, data);
  long rows = 1;
  for (int r = 0; r < m; ++r) rows *= dim_g_;
  apply_on_v_slot(rep_on_V(adP), rows, dim_v(), data);
  return data;
}

Vec LieAlgebraSpec::rep_on_hom_inf(int m, const Mat& adX, const Vec& psi) const {
  if (psi.size() != hom_dim(m))
    throw invalid_input("rep_on_hom_inf: wrong tensor length");
  long rows = 1;
  for (int r = 0; r < m; ++r) rows *= dim_g_;
  Vec out = psi;
  apply_on_v_slot(rep_on_V_inf(adX), rows, dim_v(), out);
  for (int k = 0; k < m; ++k) {
    Vec term = psi;
    contract_slot(m, k, dim_g_, dim_v(), adX, term);
    out -= term;
  }
  return out;
}

Mat LieAlgebraSpec::maximal_ideal_in_p(double tol) const {
  const int d = dim_g_;
  Mat Q = Mat::Zero(d, p_dim());
  for (int j = 0; j < p_dim(); ++j) Q(p_start_ + j, j) = 1.0;
  for (;;) {
    if (Q.cols() == 0) return Q;
    Mat P = Q * Q.transpose();
    Mat C(d * d, Q.cols());
    for (int i = 0; i < d; ++i) {
      Vec ei = Vec::Zero(d);
      ei[i] = 1.0;
      Mat adi = ad_matrix(ei);
      C.middleRows(i * d, d) = (Mat::Identity(d, d) - P) * adi * Q;
    }
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s[0] : 0.0);
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
      if (s[i] > cut) ++rank;
    int kdim = (int)Q.cols() - rank;
    if (kdim == (int)Q.cols()) return Q;  // stable
    if (kdim == 0) return Mat::Zero(d, 0);
    Mat next = orthonormal_columns(Q * svd.matrixV().rightCols(kdim));
    Q = next;
  }
}

void LieAlgebraSpec::validate() const {
  const int d = dim_g_;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (c(i, j, k) != -c(j, i, k))
          throw invalid_input("structure constants not antisymmetric");
  // Jacobi
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        Vec ei = Vec::Unit(d, i), ej = Vec::Unit(d, j), ek = Vec::Unit(d, k);
        Vec r = bracket(bracket(ei, ej), ek) + bracket(bracket(ej, ek), ei) +
                bracket(bracket(ek, ei), ej);
        if (r.lpNorm<Eigen::Infinity>() > 1e-12)
          throw invalid_input("Jacobi identity fails for " + name_);
      }
  // p subalgebra
  for (int i = p_start_; i < d; ++i)
    for (int j = p_start_; j < d; ++j) {
      Vec r = bracket(Vec::Unit(d, i), Vec::Unit(d, j));
      for (int a = 0; a < p_start_; ++a)
        if (std::abs(r[a]) > 1e-12)
          throw invalid_input("p is not a subalgebra in " + name_);
    }
  if (maximal_ideal_in_p().cols() != 0)
    throw invalid_input("p contains a nonzero ideal of g in " + name_);
}

LieAlgebraPtr algebra_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw invalid_input(std::string("algebra JSON: ") + e.what());
  }
  if (!j.contains("dim") || !j.contains("p_start"))
    throw invalid_input("algebra JSON: need \"dim\" and \"p_start\"");
  auto spec = std::make_shared<LieAlgebraSpec>(
      j.value("name", std::string("user")), j["dim"].get<int>(),
      j["p_start"].get<int>());
  for (const auto& e : j.value("brackets", json::array())) {
    if (!e.is_array() || e.size() != 4)
      throw invalid_input("algebra JSON: bracket entries are [i,j,k,value]");
    spec->set_bracket(e[0].get<int>(), e[1].get<int>(), e[2].get<int>(),
                      e[3].get<double>());
  }
  spec->validate();
  return spec;
}

LieAlgebraPtr algebra_from_matrices(const std::string& name,
                                    const std::vector<Mat>& basis,
                                    int p_start) {
  const int d = (int)basis.size();
  const long sz = basis[0].size();
  Mat B(sz, d);
  for (int i = 0; i < d; ++i)
    B.col(i) = Eigen::Map<const Vec>(basis[i].data(), sz);
  Eigen::ColPivHouseholderQR<Mat> qr(B);
  auto spec = std::make_shared<LieAlgebraSpec>(name, d, p_start);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Mat comm = basis[i] * basis[j] - basis[j] * basis[i];
      Vec rhs = Eigen::Map<const Vec>(comm.data(), sz);
      Vec coef = qr.solve(rhs);
      if ((B * coef - rhs).norm() > 1e-9)
        throw invalid_input("matrix basis is not closed under commutators");
      for (int k = 0; k < d; ++k) {
        double v = coef[k];
        if (std::abs(v - std::round(v)) < 1e-9) v = std::round(v);
        if (v != 0.0) spec->set_bracket(i, j, k, v);
      }
    }
  return spec;
}

std::vector<Mat> builtin_matrix_basis(const std::string& name) {
  std::vector<Mat> basis;
  if (name == "euc2") {
    return builtin_matrix_basis("euc2_generic");
  } else if (name == "so3") {
    auto eps = [](int i, int j, int k) -> int {
      if (i == j || j == k || i == k) return 0;
      return ((j - i + 3) % 3 == 1) ? 1 : -1;  // cyclic up, else down
    };
    for (int i = 0; i < 3; ++i) {
      Mat L = Mat::Zero(3, 3);
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) L(j, k) = -eps(i, j, k);
      basis.push_back(L);
    }
    return basis;
  } else if (name == "heis3") {
    Mat X = Mat::Zero(3, 3), Z = Mat::Zero(3, 3), Y = Mat::Zero(3, 3);
    X(0, 1) = 1;
    Z(0, 2) = 1;
    Y(1, 2) = 1;
    return {X, Z, Y};
  } else if (name == "sl2") {
    Mat F = Mat::Zero(2, 2), H = Mat::Zero(2, 2), E = Mat::Zero(2, 2);
    F(1, 0) = 1;
    H(0, 0) = 1;
    H(1, 1) = -1;
    E(0, 1) = 1;
    return {F, H, E};
  } else if (name == "euc2_generic") {
    const int n = 2;
    for (int a = 0; a < n; ++a) {
      Mat T = Mat::Zero(n + 1, n + 1);
      T(a, n) = 1;
      basis.push_back(T);
    }
    Mat G = Mat::Zero(n + 1, n + 1);
    G(1, 0) = 1;
    G(0, 1) = -1;
    basis.push_back(G);
    return basis;
  }
  throw invalid_input("unknown matrix basis: " + name);
}

LieAlgebraPtr euclidean_algebra(int n) {
  if (n < 2) throw invalid_input("euclidean_algebra: n >= 2 required");
  std::vector<Mat> basis;
  for (int a = 0; a < n; ++a) {
    Mat T = Mat::Zero(n + 1, n + 1);
    T(a, n) = 1;
    basis.push_back(T);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Mat G = Mat::Zero(n + 1, n + 1);
      G(b, a) = 1;
      G(a, b) = -1;
      basis.push_back(G);
    }
  auto spec = algebra_from_matrices("euc" + std::to_string(n), basis, n);
  spec->validate();
  return spec;
}

LieAlgebraPtr builtin_algebra(const std::string& name) {
  int p_start;
  if (name == "euc2") return euclidean_algebra(2);
  if (name == "so3") p_start = 2;
  else if (name == "heis3") p_start = 2;
  else if (name == "sl2") p_start = 1;
  else throw invalid_input("unknown algebra: " + name);
  auto spec = algebra_from_matrices(name, builtin_matrix_basis(name), p_start);
  spec->validate();
  return spec;
}

double principal_angle(const Mat& A, const Mat& B) {
  if (A.cols() == 0 || B.cols() == 0) return 0.0;
  Mat Qa = orthonormal_columns(A), Qb = orthonormal_columns(B);
  Eigen::JacobiSVD<Mat> svd(Qa.transpose() * Qb);
  Vec s = svd.singularValues();
  double smin = s[s.size() - 1];
  return std::acos(std::clamp(smin, -1.0, 1.0));
}

KernelResult kernel_with_gap(const Mat& M, double rel_tol, double abs_tol) {
  KernelResult out;
  const int cols = (int)M.cols();
  if (M.rows() == 0) {
    out.basis = Mat::Identity(cols, cols);
    out.rank = 0;
    out.singular_values = Vec();
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  Vec s = svd.singularValues();
  double cut = std::max(rel_tol * (s.size() ? s[0] : 0.0), abs_tol);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cut) ++rank;
  out.rank = rank;
  out.singular_values = s;
  out.basis = svd.matrixV().rightCols(cols - rank);
  const double inf = std::numeric_limits<double>::infinity();
  if (rank > 0 && rank < s.size())
    out.gap = s[rank] > 0 ? s[rank - 1] / s[rank] : inf;
  else if (rank == 0)
    out.gap = (s.size() == 0 || s[0] == 0.0) ? inf : cut / s[0];
  else
    out.gap = s[rank - 1] / cut;
  return out;
}

}  // namespace cartan
