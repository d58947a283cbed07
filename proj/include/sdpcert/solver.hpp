#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "sdpcert/model.hpp"

namespace sdpcert {

struct IterateInfo {
  int iter = 0;
  double primal_infeas = 0;  // ||A X - b|| (unscaled)
  double dual_infeas = 0;    // Frobenius bound on (-lambda_min(Z(y)))_+
  double gap = 0;            // |p - d|
  double primal_obj = 0;
  double dual_obj = 0;
};

struct SolverConfig {
  double tol_feas = 1e-7;
  double tol_gap = -1;  // < 0 means "use tol_feas"
  int max_iter = 50000;
  double alpha = 1.6;       // over-relaxation, in (0,2)
  double rho = 1.0;         // initial penalty
  bool adaptive_rho = true;
  bool equilibrate = true;  // scale constraint rows to unit Frobenius norm
  double obj_floor = -1e12;
  bool polish = true;
  double polish_eps = 1e-6;
  std::function<void(const IterateInfo&)> on_iterate;

  double gap_tol() const { return tol_gap < 0 ? tol_feas : tol_gap; }
  void validate() const {
    if (tol_feas <= 0) throw InvalidInput("SolverConfig: tol_feas must be positive");
    if (alpha <= 0 || alpha >= 2) throw InvalidInput("SolverConfig: alpha must be in (0,2)");
    if (rho <= 0) throw InvalidInput("SolverConfig: rho must be positive");
    if (max_iter < 1) throw InvalidInput("SolverConfig: max_iter must be >= 1");
  }
};

/// Constraint map presented to the splitting core as callables, so the same
/// iteration serves both triplet-backed SDPs and implicitly defined maps.
struct OperatorSDP {
  int n = 0, m = 0;
  MatrixXd C;
  VectorXd b;
  std::function<VectorXd(const MatrixXd&)> apply;               // A(H)
  std::function<MatrixXd(const VectorXd&)> adjoint;             // A*(y)
  std::function<VectorXd(const VectorXd&, const VectorXd&)> apply_outer;  // A(sym(u w^T))
  std::function<MatrixXd(int, const MatrixXd&)> mult_k;         // A_k * B
  MatrixXd gram;                                                // A A^T
};

inline OperatorSDP make_operator(const StandardFormSDP& sdp) {
  OperatorSDP op;
  op.n = sdp.n;
  op.m = sdp.m;
  op.C = sdp.C.mat();
  op.b = sdp.b;
  op.apply = [&sdp](const MatrixXd& h) { return apply_A_dense(sdp, h); };
  op.adjoint = [&sdp](const VectorXd& y) {
    MatrixXd out = MatrixXd::Zero(sdp.n, sdp.n);
    for (int i = 0; i < sdp.m; ++i) sdp.constraints[i].add_scaled_to(out, y(i));
    return out;
  };
  op.apply_outer = [&sdp](const VectorXd& u, const VectorXd& w) {
    VectorXd out(sdp.m);
    for (int i = 0; i < sdp.m; ++i)
      out(i) = 0.5 * (sdp.constraints[i].quad(u, w) + sdp.constraints[i].quad(w, u));
    return out;
  };
  op.mult_k = [&sdp](int k, const MatrixXd& bmat) { return sdp.constraints[k].multiply(bmat); };
  op.gram = detail::constraint_gram(sdp.constraints);
  return op;
}

namespace detail {

// Solves G y = r for the (PSD) constraint Gram matrix. Falls back to a
// pseudo-inverse when G is rank deficient, after a Farkas consistency check
// against the right-hand side of the SDP.
class GramSolver {
 public:
  GramSolver(const MatrixXd& g, const VectorXd& b) {
    llt_.compute(g);
    if (llt_.info() == Eigen::Success) {
      // LLT of a semidefinite matrix can "succeed" with garbage pivots; a
      // cheap residual probe on a fixed vector guards against that.
      VectorXd probe = VectorXd::Ones(g.rows());
      VectorXd sol = llt_.solve(probe);
      if ((g * sol - probe).norm() <= 1e-8 * std::sqrt(double(g.rows()))) {
        use_llt_ = true;
        return;
      }
    }
    eig_.compute(g);
    if (eig_.info() != Eigen::Success)
      throw NumericalBreakdown("solver: constraint Gram factorization failed");
    const double lmax = eig_.eigenvalues().maxCoeff();
    const double thresh = std::max(1e-12 * lmax, 1e-300);
    for (int i = 0; i < eig_.eigenvalues().size(); ++i) {
      if (eig_.eigenvalues()(i) <= thresh) {
        VectorXd v = eig_.eigenvectors().col(i);
        if (std::abs(v.dot(b)) > 1e-8 * std::max(1.0, b.norm()))
          throw Infeasible(
              "solver: constraints are linearly dependent and inconsistent "
              "(Farkas direction in the constraint span)");
      }
    }
    inv_vals_ = eig_.eigenvalues();
    for (int i = 0; i < inv_vals_.size(); ++i)
      inv_vals_(i) = (eig_.eigenvalues()(i) > thresh) ? 1.0 / eig_.eigenvalues()(i) : 0.0;
  }

  VectorXd solve(const VectorXd& r) const {
    if (use_llt_) return llt_.solve(r);
    return eig_.eigenvectors() * (inv_vals_.cwiseProduct(eig_.eigenvectors().transpose() * r));
  }

 private:
  Eigen::LLT<MatrixXd> llt_;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_;
  VectorXd inv_vals_;
  bool use_llt_ = false;
};

struct CoreResult {
  MatrixXd X;
  VectorXd y;
  MatrixXd Z;
  bool converged = false;
  int iterations = 0;
};

inline MatrixXd slack_from(const OperatorSDP& op, const VectorXd& y) {
  return op.C - op.adjoint(y);
}

// Dual-block splitting (ADMM on the dual with the primal matrix as
// multiplier): one Gram solve and one eigendecomposition per iteration.
// X and Z stay PSD and complementary by construction at every iterate.
inline CoreResult admm_core(const OperatorSDP& op, const SolverConfig& cfg) {
  const int n = op.n;
  const int m = op.m;

  // Row equilibration d_i = ||A_i||_F, then cost/rhs normalization.
  VectorXd d = VectorXd::Ones(m);
  if (cfg.equilibrate)
    for (int i = 0; i < m; ++i) d(i) = std::max(std::sqrt(op.gram(i, i)), 1e-12);
  VectorXd dinv = d.cwiseInverse();
  MatrixXd gram_s = dinv.asDiagonal() * op.gram * dinv.asDiagonal();
  const double sc = 1.0 / std::max(1.0, op.C.norm());
  VectorXd b_eq = dinv.cwiseProduct(op.b);
  const double sb = 1.0 / std::max(1.0, b_eq.norm());
  MatrixXd Cs = sc * op.C;
  VectorXd bs = sb * b_eq;

  GramSolver gsolve(gram_s, bs);

  MatrixXd X = MatrixXd::Zero(n, n);
  MatrixXd Z = MatrixXd::Zero(n, n);
  VectorXd y = VectorXd::Zero(m);
  VectorXd y_snap = y;
  MatrixXd x_snap = X;
  double sigma = cfg.rho;
  const double tol_gap = cfg.gap_tol();

  CoreResult out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    // y-step: (A A^T) y = A(C - Z - X/sigma) + b/sigma   (scaled quantities)
    MatrixXd T = Cs - Z - X / sigma;
    VectorXd rhs = dinv.cwiseProduct(op.apply(T)) + bs / sigma;
    y = gsolve.solve(rhs);

    MatrixXd Ay = op.adjoint(dinv.cwiseProduct(y));
    MatrixXd h = cfg.alpha * Ay + (1.0 - cfg.alpha) * (Cs - Z);
    MatrixXd W = Cs - h - X / sigma;

    es.compute(W);
    if (es.info() != Eigen::Success) throw NumericalBreakdown("solver: projection eig failed");
    const VectorXd& ev = es.eigenvalues();
    int nneg = 0;
    while (nneg < n && ev(nneg) < 0) ++nneg;
    // N = negative part magnitude of W (PSD): X <- sigma * N, Z <- W + N.
    if (nneg > 0) {
      MatrixXd Vn = es.eigenvectors().leftCols(nneg);
      MatrixXd N = Vn * (-ev.head(nneg)).asDiagonal() * Vn.transpose();
      X = sigma * N;
      Z = W + N;
    } else {
      X.setZero();
      Z = W;
    }

    // Residuals, mapped back to the unscaled problem.
    VectorXd pr_vec = dinv.cwiseProduct(op.apply(X)) - bs;
    double pr_u = d.cwiseProduct(pr_vec).norm() / sb;
    double du_u = (Ay + Z - Cs).norm() / sc;
    double p_u = Cs.cwiseProduct(X).sum() / (sc * sb);
    double d_u = bs.dot(y) / (sc * sb);
    double gap_u = std::abs(p_u - d_u);

    if (cfg.on_iterate)
      cfg.on_iterate({iter, pr_u, du_u, gap_u, p_u, d_u});

    if (pr_u <= cfg.tol_feas && du_u <= cfg.tol_feas && gap_u <= tol_gap) {
      out.converged = true;
      ++iter;
      break;
    }
    if (p_u < cfg.obj_floor)
      throw Unbounded("solver: objective fell below the configured floor");

    if (cfg.adaptive_rho && iter > 0 && iter % 50 == 0) {
      // Residual balancing: sigma weights the dual-feasibility penalty, so a
      // lagging dual residual calls for a larger sigma and vice versa.
      double prn = pr_u / (1.0 + op.b.norm());
      double dun = du_u / (1.0 + op.C.norm());
      if (dun > 10.0 * prn)
        sigma = std::min(sigma * 2.0, 1e8);
      else if (prn > 10.0 * dun)
        sigma = std::max(sigma * 0.5, 1e-8);
    }

    if (iter >= 500 && iter % 500 == 0) {
      if (!y.allFinite() || !X.allFinite())
        throw NumericalBreakdown("solver: non-finite iterate");
      // Divergence certificates from iterate increments. A dual increment
      // with positive objective and A*(dy) negative semidefinite certifies
      // primal infeasibility; a PSD primal increment in ker(A) with negative
      // cost certifies unboundedness.
      VectorXd dy = y - y_snap;
      if (dy.norm() > 1e-9 * (1.0 + y.norm())) {
        VectorXd dyh = dy / dy.norm();
        if (bs.dot(dyh) > 1e-6) {
          MatrixXd ahat = op.adjoint(dinv.cwiseProduct(dyh));
          es.compute(ahat);
          if (es.eigenvalues().maxCoeff() <= 1e-7 * std::max(1.0, ahat.norm()))
            throw Infeasible("solver: improving dual ray found (primal infeasible)");
        }
      }
      MatrixXd dx = X - x_snap;
      double dxn = dx.norm();
      if (dxn > 1e-9 * (1.0 + X.norm())) {
        dx /= dxn;
        if (Cs.cwiseProduct(dx).sum() <= -1e-6 &&
            dinv.cwiseProduct(op.apply(dx)).norm() <= 1e-7) {
          es.compute(dx);
          if (es.eigenvalues().minCoeff() >= -1e-7)
            throw Unbounded("solver: improving primal ray found (objective unbounded below)");
        }
      }
      y_snap = y;
      x_snap = X;
    }
  }

  out.X = X / sb;
  out.y = (1.0 / sc) * dinv.cwiseProduct(y);
  out.Z = slack_from(op, out.y);
  out.iterations = iter;
  return out;
}

struct EvalResult {
  Residuals res;
  double p = 0, d = 0;
};

inline EvalResult evaluate(const OperatorSDP& op, const MatrixXd& X, const VectorXd& y) {
  EvalResult ev;
  ev.res.primal_infeas = (op.apply(X) - op.b).norm();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.compute(op.C - op.adjoint(y));
  ev.res.dual_infeas = std::max(0.0, -es.eigenvalues().minCoeff());
  es.compute(X);
  ev.res.cone_infeas = std::max(0.0, -es.eigenvalues().minCoeff());
  ev.p = op.C.cwiseProduct(X).sum();
  ev.d = op.b.dot(y);
  ev.res.gap = std::abs(ev.p - ev.d);
  return ev;
}

// Refit X on the eigenface detected at eps, and y by least squares against
// complementarity with that face. Either candidate is kept only if it lowers
// the max residual.
inline void polish(const OperatorSDP& op, MatrixXd& X, VectorXd& y, double eps) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(X);
  const double lmax = es.eigenvalues().maxCoeff();
  const double cut = eps * std::max(1.0, lmax);
  std::vector<int> keep;
  for (int i = 0; i < op.n; ++i)
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  const int r = static_cast<int>(keep.size());

  if (r > 0 && r * (r + 1) / 2 <= op.m) {
    MatrixXd X_cand;
    MatrixXd V1(op.n, r);
    for (int c = 0; c < r; ++c) V1.col(c) = es.eigenvectors().col(keep[c]);
    const int k = r * (r + 1) / 2;
    MatrixXd M(op.m, k);
    int col = 0;
    const double rt2 = std::sqrt(2.0);
    for (int a = 0; a < r; ++a) {
      M.col(col++) = op.apply_outer(V1.col(a), V1.col(a));
      for (int bcol = a + 1; bcol < r; ++bcol)
        M.col(col++) = rt2 * op.apply_outer(V1.col(a), V1.col(bcol));
    }
    VectorXd s = M.completeOrthogonalDecomposition().solve(op.b);
    SymMatrix S = smat(SVec{r, s});
    Eigen::SelfAdjointEigenSolver<MatrixXd> es2(S.mat());
    VectorXd clamped = es2.eigenvalues().cwiseMax(0.0);
    MatrixXd Spos = es2.eigenvectors() * clamped.asDiagonal() * es2.eigenvectors().transpose();
    X_cand = V1 * Spos * V1.transpose();

    // Dual refit: minimize ||(C - A*(y)) V1||_F over y.
    MatrixXd D(op.n * r, op.m);
    for (int kcons = 0; kcons < op.m; ++kcons) {
      MatrixXd AkV = op.mult_k(kcons, V1);
      D.col(kcons) = Eigen::Map<VectorXd>(AkV.data(), AkV.size());
    }
    MatrixXd CV = op.C * V1;
    VectorXd target = Eigen::Map<VectorXd>(CV.data(), CV.size());
    VectorXd y_cand = D.completeOrthogonalDecomposition().solve(target);

    double best = evaluate(op, X, y).res.max();
    const MatrixXd* xs[2] = {&X, &X_cand};
    const VectorXd* ys[2] = {&y, &y_cand};
    int bi = 0, bj = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (i == 0 && j == 0) continue;
        double v = evaluate(op, *xs[i], *ys[j]).res.max();
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (bi == 1) X = X_cand;
    if (bj == 1) y = *ys[1];
  }
}

}  // namespace detail

/// Splitting solver for the standard-form pair. The returned solution has
/// max residual <= cfg.tol_feas when `converged` is set; otherwise the best
/// iterate is returned with `status` = "max_iterations".
inline SolverSolution solve(const StandardFormSDP& sdp, SolverConfig cfg = {}) {
  cfg.validate();
  OperatorSDP op = make_operator(sdp);
  detail::CoreResult core = detail::admm_core(op, cfg);
  MatrixXd X = core.X;
  VectorXd y = core.y;
  if (cfg.polish) detail::polish(op, X, y, cfg.polish_eps);

  SymMatrix Xs = SymMatrix::symmetrized(X);
  SolverSolution sol{Xs, y, slack(sdp, y)};
  sol.res = residuals(sdp, Xs, y);
  sol.primal_obj = sdp.C.mat().cwiseProduct(Xs.mat()).sum();
  sol.dual_obj = sdp.b.dot(y);
  bool within = sol.res.primal_infeas <= cfg.tol_feas && sol.res.dual_infeas <= cfg.tol_feas &&
                sol.res.cone_infeas <= cfg.tol_feas && sol.res.gap <= cfg.gap_tol();
  sol.converged = within;
  sol.iterations = core.iterations;
  sol.status = within ? "converged" : "max_iterations";
  return sol;
}

// ---------------------------------------------------------------------------
// Restricted dual solve:  maximize <C_s, Z_s>  over  Z_s PSD  subject to
// U Z_s U^T lying in the affine set of dual slacks {C - A*(y)}.
// ---------------------------------------------------------------------------

namespace detail {

struct PatternInfo {
  bool is_pattern = false;
  std::set<std::pair<int, int>> free_positions;  // (i,j) with i<=j
};

inline PatternInfo detect_pattern(const StandardFormSDP& sdp) {
  PatternInfo info;
  for (const auto& a : sdp.constraints) {
    if (a.entries.size() != 1) return info;
    auto [i, j, v] = a.entries[0];
    if (!info.free_positions.insert({i, j}).second) return info;  // duplicate position
    (void)v;
  }
  info.is_pattern = true;
  return info;
}

}  // namespace detail

/// Solves the face-restricted dual problem above. `U` must have orthonormal
/// columns. When every A_i touches a single matrix position the pinned
/// entries are exactly the complement of that sparsity pattern; otherwise an
/// orthonormal basis of span{A_i}^perp is computed densely (small n only).
/// `free_override`, when given, replaces the derived free-position set.
inline SymMatrix solve_restricted(
    const StandardFormSDP& sdp, const MatrixXd& U, const SymMatrix& C_s,
    SolverConfig cfg = {},
    const std::optional<std::set<std::pair<int, int>>>& free_override = std::nullopt) {
  cfg.validate();
  const int N = sdp.n;
  const int K = static_cast<int>(U.cols());
  if (U.rows() != N) throw InvalidInput("solve_restricted: U row count != sdp dimension");
  if ((U.transpose() * U - MatrixXd::Identity(K, K)).norm() > 1e-8)
    throw InvalidInput("solve_restricted: U must have orthonormal columns");
  if (C_s.n() != K) throw InvalidInput("solve_restricted: C_s dimension != U column count");

  detail::PatternInfo pat;
  if (free_override) {
    pat.is_pattern = true;
    pat.free_positions = *free_override;
  } else {
    pat = detail::detect_pattern(sdp);
  }

  OperatorSDP op;
  op.n = K;
  op.C = -C_s.mat();  // maximize <C_s, .>

  if (pat.is_pattern) {
    // Constraint per non-free position (k,l):  u_k^T Z_s u_l = C_kl.
    std::vector<int> ks, ls;
    std::vector<double> rhs;
    for (int k = 0; k < N; ++k)
      for (int l = k; l < N; ++l)
        if (!pat.free_positions.count({k, l})) {
          ks.push_back(k);
          ls.push_back(l);
          rhs.push_back(sdp.C(k, l));
        }
    const int m = static_cast<int>(ks.size());
    if (m == 0) throw InvalidInput("solve_restricted: no pinned positions");
    op.m = m;
    op.b = Eigen::Map<VectorXd>(rhs.data(), m);

    auto kvec = std::make_shared<std::vector<int>>(std::move(ks));
    auto lvec = std::make_shared<std::vector<int>>(std::move(ls));
    auto Ucopy = std::make_shared<MatrixXd>(U);

    op.apply = [kvec, lvec, Ucopy, m](const MatrixXd& z) {
      MatrixXd G = (*Ucopy) * z * Ucopy->transpose();
      VectorXd out(m);
      for (int t = 0; t < m; ++t) out(t) = G((*kvec)[t], (*lvec)[t]);
      return out;
    };
    op.adjoint = [kvec, lvec, Ucopy, N, m](const VectorXd& y) {
      MatrixXd M = MatrixXd::Zero(N, N);
      for (int t = 0; t < m; ++t) {
        int k = (*kvec)[t], l = (*lvec)[t];
        if (k == l)
          M(k, k) += y(t);
        else {
          M(k, l) += 0.5 * y(t);
          M(l, k) += 0.5 * y(t);
        }
      }
      return MatrixXd(Ucopy->transpose() * M * (*Ucopy));
    };
    op.apply_outer = [kvec, lvec, Ucopy, m](const VectorXd& u, const VectorXd& w) {
      VectorXd g1 = (*Ucopy) * u, g2 = (*Ucopy) * w;
      VectorXd out(m);
      for (int t = 0; t < m; ++t) {
        int k = (*kvec)[t], l = (*lvec)[t];
        out(t) = 0.5 * (g1(k) * g2(l) + g2(k) * g1(l));
      }
      return out;
    };
    op.mult_k = [kvec, lvec, Ucopy](int t, const MatrixXd& bmat) {
      int k = (*kvec)[t], l = (*lvec)[t];
      VectorXd uk = Ucopy->row(k), ul = Ucopy->row(l);
      return MatrixXd(0.5 * (uk * (ul.transpose() * bmat) + ul * (uk.transpose() * bmat)));
    };

    MatrixXd P = U * U.transpose();
    op.gram.resize(m, m);
    for (int a = 0; a < m; ++a) {
      for (int c = a; c < m; ++c) {
        int k = (*kvec)[a], l = (*lvec)[a], kp = (*kvec)[c], lp = (*lvec)[c];
        double v = 0.5 * (P(k, kp) * P(l, lp) + P(k, lp) * P(l, kp));
        op.gram(a, c) = v;
        op.gram(c, a) = v;
      }
    }
  } else {
    // General path: orthonormal basis of span{svec(A_i)}^perp.
    const int nv = svec_dim(N);
    if (nv > 6000)
      throw InvalidInput("solve_restricted: dense complement basis too large for this n");
    MatrixXd rows(sdp.m, nv);
    for (int k = 0; k < sdp.m; ++k)
      rows.row(k) = svec(SymMatrix::from_dense(sdp.constraints[k].dense())).data;
    Eigen::JacobiSVD<MatrixXd> svd(rows, Eigen::ComputeFullV);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
    const int L = nv - rank;
    if (L == 0) throw InvalidInput("solve_restricted: constraint span is all of Sym(n)");
    auto mats = std::make_shared<std::vector<MatrixXd>>();
    VectorXd rhs(L);
    for (int l = 0; l < L; ++l) {
      SymMatrix B = smat(SVec{N, svd.matrixV().col(rank + l)});
      rhs(l) = B.mat().cwiseProduct(sdp.C.mat()).sum();
      mats->push_back(U.transpose() * B.mat() * U);  // constraint matrix in Z_s space
    }
    op.m = L;
    op.b = rhs;
    op.apply = [mats, L](const MatrixXd& z) {
      VectorXd out(L);
      for (int l = 0; l < L; ++l) out(l) = (*mats)[l].cwiseProduct(z).sum();
      return out;
    };
    op.adjoint = [mats, L, K](const VectorXd& y) {
      MatrixXd out = MatrixXd::Zero(K, K);
      for (int l = 0; l < L; ++l) out += y(l) * (*mats)[l];
      return out;
    };
    op.apply_outer = [mats, L](const VectorXd& u, const VectorXd& w) {
      VectorXd out(L);
      for (int l = 0; l < L; ++l) out(l) = u.dot((*mats)[l] * w);
      return out;
    };
    op.mult_k = [mats](int l, const MatrixXd& bmat) { return MatrixXd((*mats)[l] * bmat); };
    op.gram.resize(L, L);
    for (int a = 0; a < L; ++a)
      for (int c = a; c < L; ++c) {
        double v = (*mats)[a].cwiseProduct((*mats)[c]).sum();
        op.gram(a, c) = v;
        op.gram(c, a) = v;
      }
  }

  detail::CoreResult core = detail::admm_core(op, cfg);
  MatrixXd Zs = core.X;
  VectorXd ys = core.y;
  if (cfg.polish) detail::polish(op, Zs, ys, cfg.polish_eps);
  return SymMatrix::symmetrized(Zs);
}

}  // namespace sdpcert
