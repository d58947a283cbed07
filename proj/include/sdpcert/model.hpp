#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdpcert/linalg.hpp"

namespace sdpcert {

/// Sparse symmetric matrix stored as upper-triangle coordinate triplets.
/// A triplet (i,j,v) with i<j stands for the two entries (i,j) and (j,i).
struct SparseSym {
  int n = 0;
  struct Entry {
    int i, j;
    double v;
  };
  std::vector<Entry> entries;

  SparseSym() = default;
  explicit SparseSym(int dim) : n(dim) {}

  void add(int i, int j, double v) {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n) throw InvalidInput("SparseSym: index out of range");
    entries.push_back({i, j, v});
  }

  /// <A, H> for symmetric dense H.
  double inner(const MatrixXd& h) const {
    double s = 0.0;
    for (const auto& e : entries) s += (e.i == e.j ? 1.0 : 2.0) * e.v * h(e.i, e.j);
    return s;
  }

  /// u^T A w.
  double quad(const VectorXd& u, const VectorXd& w) const {
    double s = 0.0;
    for (const auto& e : entries) {
      if (e.i == e.j)
        s += e.v * u(e.i) * w(e.i);
      else
        s += e.v * (u(e.i) * w(e.j) + u(e.j) * w(e.i));
    }
    return s;
  }

  /// m += c * A.
  void add_scaled_to(MatrixXd& m, double c) const {
    for (const auto& e : entries) {
      m(e.i, e.j) += c * e.v;
      if (e.i != e.j) m(e.j, e.i) += c * e.v;
    }
  }

  /// A * B for dense B (symmetric expansion of the triplets).
  MatrixXd multiply(const MatrixXd& b) const {
    MatrixXd out = MatrixXd::Zero(n, b.cols());
    for (const auto& e : entries) {
      out.row(e.i) += e.v * b.row(e.j);
      if (e.i != e.j) out.row(e.j) += e.v * b.row(e.i);
    }
    return out;
  }

  double frob_sq() const {
    double s = 0.0;
    for (const auto& e : entries) s += (e.i == e.j ? 1.0 : 2.0) * e.v * e.v;
    return s;
  }

  MatrixXd dense() const {
    MatrixXd out = MatrixXd::Zero(n, n);
    add_scaled_to(out, 1.0);
    return out;
  }
};

/// min <C,X> s.t. <A_i,X> = b_i (i = 1..m), X PSD.
struct StandardFormSDP {
  int n = 0;
  int m = 0;
  SymMatrix C;
  std::vector<SparseSym> constraints;
  VectorXd b;
  std::string metadata;

  StandardFormSDP(SymMatrix cost, std::vector<SparseSym> cons, VectorXd rhs,
                  std::string label = "")
      : n(cost.n()),
        m(static_cast<int>(cons.size())),
        C(std::move(cost)),
        constraints(std::move(cons)),
        b(std::move(rhs)),
        metadata(std::move(label)) {
    if (m < 1) throw InvalidInput("StandardFormSDP: need at least one constraint");
    if (b.size() != m) throw InvalidInput("StandardFormSDP: rhs length != constraint count");
    for (const auto& a : constraints)
      if (a.n != n) throw InvalidInput("StandardFormSDP: constraint dimension mismatch");
  }
};

inline VectorXd apply_A(const StandardFormSDP& sdp, const SymMatrix& h) {
  if (h.n() != sdp.n) throw InvalidInput("apply_A: dimension mismatch");
  VectorXd out(sdp.m);
  for (int i = 0; i < sdp.m; ++i) out(i) = sdp.constraints[i].inner(h.mat());
  return out;
}

inline VectorXd apply_A_dense(const StandardFormSDP& sdp, const MatrixXd& h) {
  VectorXd out(sdp.m);
  for (int i = 0; i < sdp.m; ++i) out(i) = sdp.constraints[i].inner(h);
  return out;
}

inline SymMatrix apply_Aadj(const StandardFormSDP& sdp, const VectorXd& y) {
  if (y.size() != sdp.m) throw InvalidInput("apply_Aadj: length mismatch");
  MatrixXd out = MatrixXd::Zero(sdp.n, sdp.n);
  for (int i = 0; i < sdp.m; ++i) sdp.constraints[i].add_scaled_to(out, y(i));
  return SymMatrix::from_dense(out);
}

/// Slack matrix Z(y) = C - A*(y).
inline SymMatrix slack(const StandardFormSDP& sdp, const VectorXd& y) {
  MatrixXd z = sdp.C.mat();
  for (int i = 0; i < sdp.m; ++i) sdp.constraints[i].add_scaled_to(z, -y(i));
  return SymMatrix::from_dense(z);
}

struct Residuals {
  double primal_infeas = 0;  // ||A X - b||_2
  double dual_infeas = 0;    // (-lambda_min(Z(y)))_+
  double cone_infeas = 0;    // (-lambda_min(X))_+
  double gap = 0;            // |<C,X> - b'y|
  double max() const {
    return std::max(std::max(primal_infeas, dual_infeas), std::max(cone_infeas, gap));
  }
};

inline Residuals residuals(const StandardFormSDP& sdp, const SymMatrix& x, const VectorXd& y) {
  Residuals r;
  r.primal_infeas = (apply_A(sdp, x) - sdp.b).norm();
  SymMatrix z = slack(sdp, y);
  r.dual_infeas = std::max(0.0, -eig_sym(z).values.minCoeff());
  r.cone_infeas = std::max(0.0, -eig_sym(x).values.minCoeff());
  double p = sdp.C.mat().cwiseProduct(x.mat()).sum();
  double d = sdp.b.dot(y);
  r.gap = std::abs(p - d);
  return r;
}

/// Primal-dual pair as returned by the solver. Z is always recomputed from
/// (C, y) rather than stored independently.
struct SolverSolution {
  SymMatrix X;
  VectorXd y;
  SymMatrix Z;
  double primal_obj = 0;
  double dual_obj = 0;
  Residuals res;
  bool converged = false;
  int iterations = 0;
  std::string status;

  SolverSolution(SymMatrix x, VectorXd dual, SymMatrix z)
      : X(std::move(x)), y(std::move(dual)), Z(std::move(z)) {}
};

struct SurjectivityCheck {
  bool surjective = false;
  double sigma_min = 0;
  double sigma_max = 0;
};

namespace detail {

// Entry-position key for pairwise sparse inner products.
inline std::uint64_t pos_key(int i, int j) {
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
}

inline MatrixXd constraint_gram(const std::vector<SparseSym>& cons) {
  const int m = static_cast<int>(cons.size());
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, double>>> by_pos;
  for (int k = 0; k < m; ++k)
    for (const auto& e : cons[k].entries) by_pos[pos_key(e.i, e.j)].push_back({k, e.v});
  MatrixXd g = MatrixXd::Zero(m, m);
  for (const auto& [key, list] : by_pos) {
    const int i = static_cast<int>(key >> 32);
    const int j = static_cast<int>(key & 0xFFFFFFFFu);
    const double w = (i == j) ? 1.0 : 2.0;
    for (const auto& [ka, va] : list)
      for (const auto& [kb, vb] : list) g(ka, kb) += w * va * vb;
  }
  return g;
}

}  // namespace detail

/// True iff the constraint matrices are linearly independent
/// (sigma_min > 1e-10 * sigma_max of the stacked svec rows).
///
/// Below `dense_cap` total entries the m x n(n+1)/2 matrix is formed and its
/// SVD taken; above it the Gram matrix A A^T is used instead, which computes
/// the same singular values but resolves ratios only down to ~1e-8.
inline SurjectivityCheck check_surjective(const StandardFormSDP& sdp,
                                          double tol = 1e-10,
                                          std::int64_t dense_cap = (1 << 25)) {
  SurjectivityCheck out;
  const int nv = svec_dim(sdp.n);
  if (static_cast<std::int64_t>(sdp.m) * nv <= dense_cap) {
    MatrixXd rows(sdp.m, nv);
    for (int k = 0; k < sdp.m; ++k) rows.row(k) = svec(SymMatrix::from_dense(sdp.constraints[k].dense())).data;
    Eigen::BDCSVD<MatrixXd> svd(rows);
    const auto& s = svd.singularValues();
    out.sigma_max = s(0);
    out.sigma_min = (sdp.m <= nv) ? s(s.size() - 1) : 0.0;
  } else {
    MatrixXd g = detail::constraint_gram(sdp.constraints);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    out.sigma_max = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    out.sigma_min = (sdp.m <= nv) ? std::sqrt(std::max(0.0, es.eigenvalues().minCoeff())) : 0.0;
  }
  out.surjective = out.sigma_min > tol * out.sigma_max && out.sigma_max > 0;
  return out;
}

}  // namespace sdpcert
