#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "sdpcert/errors.hpp"

namespace sdpcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense symmetric matrix. The upper triangle is authoritative: every write
/// mirrors (i,j) onto (j,i), so entries(i,j) == entries(j,i) holds exactly.
class SymMatrix {
 public:
  explicit SymMatrix(int n) : mat_(MatrixXd::Zero(n, n)) {
    if (n < 1) throw InvalidInput("SymMatrix: dimension must be >= 1");
  }

  /// Mirrors the upper triangle of `a` onto the lower triangle.
  static SymMatrix from_dense(const MatrixXd& a) {
    check_square(a);
    SymMatrix s(static_cast<int>(a.rows()));
    s.mat_ = a;
    s.mat_.triangularView<Eigen::StrictlyLower>() = a.transpose();
    return s;
  }

  /// (a + a^T)/2; exact for already-symmetric input.
  static SymMatrix symmetrized(const MatrixXd& a) {
    check_square(a);
    return from_dense(0.5 * (a + a.transpose()));
  }

  static SymMatrix identity(int n) { return from_dense(MatrixXd::Identity(n, n)); }

  /// Unpacks a row-major upper triangle of length n(n+1)/2.
  static SymMatrix from_upper(int n, const std::vector<double>& upper) {
    SymMatrix s(n);
    if (static_cast<int>(upper.size()) != n * (n + 1) / 2)
      throw InvalidInput("SymMatrix::from_upper: wrong packed length");
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) s.set(i, j, upper[k++]);
    return s;
  }

  std::vector<double> to_upper() const {
    std::vector<double> out;
    out.reserve(n() * (n() + 1) / 2);
    for (int i = 0; i < n(); ++i)
      for (int j = i; j < n(); ++j) out.push_back(mat_(i, j));
    return out;
  }

  int n() const { return static_cast<int>(mat_.rows()); }
  double operator()(int i, int j) const { return mat_(i, j); }
  void set(int i, int j, double v) {
    mat_(i, j) = v;
    mat_(j, i) = v;
  }
  const MatrixXd& mat() const { return mat_; }

 private:
  static void check_square(const MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw InvalidInput("SymMatrix: input must be square, n >= 1");
  }
  MatrixXd mat_;
};

/// Eigendecomposition with eigenvalues sorted descending; column k of
/// `vectors` pairs with `values(k)`.
struct EigDecomp {
  VectorXd values;
  MatrixXd vectors;
};

inline EigDecomp eig_sym(const SymMatrix& a) {
  if (!a.mat().allFinite()) throw InvalidInput("eig_sym: non-finite input");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a.mat());
  if (es.info() != Eigen::Success) throw NumericalBreakdown("eig_sym: solver failed");
  const int n = a.n();
  EigDecomp d;
  d.values = es.eigenvalues().reverse();
  d.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) d.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  return d;
}

/// Thresholded rank of a descending value array.
struct RankInfo {
  int rank = 0;
  std::optional<double> lambda_min_pos;  // smallest value strictly above eps
};

inline RankInfo rank_eps(const VectorXd& values, double eps) {
  if (eps <= 0) throw InvalidInput("rank_eps: eps must be positive");
  for (int i = 0; i + 1 < values.size(); ++i)
    if (values(i) < values(i + 1)) throw InvalidInput("rank_eps: values not sorted descending");
  RankInfo info;
  for (int i = 0; i < values.size(); ++i)
    if (values(i) > eps) ++info.rank;
  if (info.rank > 0) info.lambda_min_pos = values(info.rank - 1);
  return info;
}

enum class BasisKind { Range, Null };

/// Orthonormal basis of the eigenspace above (Range) or at/below (Null) eps.
/// Columns are sign-fixed: first nonzero component positive.
inline MatrixXd orthonormal_basis(const SymMatrix& a, double eps, BasisKind which) {
  if (eps <= 0) throw InvalidInput("orthonormal_basis: eps must be positive");
  EigDecomp d = eig_sym(a);
  const int n = a.n();
  const int r = rank_eps(d.values, eps).rank;
  const int first = (which == BasisKind::Range) ? 0 : r;
  const int count = (which == BasisKind::Range) ? r : n - r;
  MatrixXd basis = d.vectors.middleCols(first, count);
  for (int c = 0; c < basis.cols(); ++c) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(basis(i, c)) > 1e-12) {
        if (basis(i, c) < 0) basis.col(c) *= -1.0;
        break;
      }
    }
  }
  return basis;
}

/// Largest singular value of a rectangular matrix.
inline double op_norm(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw InvalidInput("op_norm: non-finite input");
  Eigen::BDCSVD<MatrixXd> svd(a);
  return svd.singularValues()(0);
}

// --- symmetric vectorization ---------------------------------------------
//
// Row-major upper-triangle packing with sqrt(2) on off-diagonals, so that
// <svec(A), svec(B)> = <A, B> for all symmetric A, B.

struct SVec {
  int n = 0;
  VectorXd data;
};

inline int svec_dim(int n) { return n * (n + 1) / 2; }

inline SVec svec(const SymMatrix& a) {
  const int n = a.n();
  SVec v{n, VectorXd(svec_dim(n))};
  const double rt2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    v.data(k++) = a(i, i);
    for (int j = i + 1; j < n; ++j) v.data(k++) = rt2 * a(i, j);
  }
  return v;
}

inline SymMatrix smat(const SVec& v) {
  SymMatrix a(v.n);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < v.n; ++i) {
    a.set(i, i, v.data(k++));
    for (int j = i + 1; j < v.n; ++j) a.set(i, j, inv_rt2 * v.data(k++));
  }
  return a;
}

/// Index of position (i,j), i<=j, in the svec packing above.
inline int svec_index(int n, int i, int j) {
  return i * n - i * (i - 1) / 2 + (j - i);
}

}  // namespace sdpcert
