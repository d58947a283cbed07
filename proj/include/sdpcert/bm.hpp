#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "sdpcert/model.hpp"
#include "sdpcert/rng.hpp"

namespace sdpcert {

enum class ManifoldKind { UnitRows, GroupSpheres, BlockStiefel };

/// Feasible set {F : A(F F^T) = b} for the smooth constraint families.
struct Manifold {
  ManifoldKind kind = ManifoldKind::UnitRows;
  int n = 0;
  int r = 0;
  std::vector<std::vector<int>> groups;  // GroupSpheres: row groups
  int d = 1;                             // BlockStiefel: block size
  int blocks = 0;                        // BlockStiefel: block count

  int tangent_dim() const {
    switch (kind) {
      case ManifoldKind::UnitRows:
        return n * (r - 1);
      case ManifoldKind::GroupSpheres: {
        int t = 0;
        for (const auto& g : groups) t += static_cast<int>(g.size()) * r - 1;
        return t;
      }
      case ManifoldKind::BlockStiefel:
        return blocks * (d * r - d * (d + 1) / 2);
    }
    return 0;
  }
};

namespace detail {

inline bool is_unit_diag_constraint(const SparseSym& a) {
  return a.entries.size() == 1 && a.entries[0].i == a.entries[0].j && a.entries[0].v == 1.0;
}

}  // namespace detail

/// Recognizes the constraint structure of the smooth families; `r` is filled
/// in by the caller.
inline std::optional<Manifold> detect_manifold(const StandardFormSDP& sdp) {
  Manifold man;
  man.n = sdp.n;

  // diag(X) = 1 rows, or group traces = 1.
  bool all_diag = true;
  for (const auto& a : sdp.constraints) {
    for (const auto& e : a.entries)
      if (e.i != e.j || e.v != 1.0) {
        all_diag = false;
        break;
      }
    if (!all_diag) break;
  }
  if (all_diag && (sdp.b.array() == 1.0).all()) {
    std::vector<int> owner(sdp.n, -1);
    bool disjoint = true;
    for (int k = 0; k < sdp.m && disjoint; ++k)
      for (const auto& e : sdp.constraints[k].entries) {
        if (owner[e.i] != -1) disjoint = false;
        owner[e.i] = k;
      }
    if (disjoint && std::all_of(owner.begin(), owner.end(), [](int o) { return o >= 0; })) {
      bool all_single = std::all_of(sdp.constraints.begin(), sdp.constraints.end(),
                                    [](const SparseSym& a) { return a.entries.size() == 1; });
      if (all_single && sdp.m == sdp.n) {
        man.kind = ManifoldKind::UnitRows;
        return man;
      }
      man.kind = ManifoldKind::GroupSpheres;
      man.groups.assign(sdp.m, {});
      for (int i = 0; i < sdp.n; ++i) man.groups[owner[i]].push_back(i);
      return man;
    }
  }

  // Block_s(X) = I_d: one single-position constraint per block entry.
  for (int d = 2; d <= 3; ++d) {
    if (sdp.n % d != 0) continue;
    const int blocks = sdp.n / d;
    if (sdp.m != blocks * d * (d + 1) / 2) continue;
    std::map<std::pair<int, int>, double> want;  // position -> rhs
    for (int s = 0; s < blocks; ++s)
      for (int a = 0; a < d; ++a)
        for (int b2 = a; b2 < d; ++b2) want[{s * d + a, s * d + b2}] = (a == b2) ? 1.0 : 0.0;
    bool ok = true;
    for (int k = 0; k < sdp.m && ok; ++k) {
      const auto& ents = sdp.constraints[k].entries;
      if (ents.size() != 1) {
        ok = false;
        break;
      }
      auto it = want.find({ents[0].i, ents[0].j});
      double coeff_needed = (ents[0].i == ents[0].j) ? 1.0 : 0.5;
      if (it == want.end() || ents[0].v != coeff_needed || sdp.b(k) != it->second) ok = false;
      if (ok) want.erase(it);
    }
    if (ok && want.empty()) {
      man.kind = ManifoldKind::BlockStiefel;
      man.d = d;
      man.blocks = blocks;
      return man;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manifold primitives. All retractions are block polar maps, which are
// second-order, so Hessian quadratic forms match curve finite differences.
// ---------------------------------------------------------------------------

namespace detail {

inline MatrixXd polar_rows(const MatrixXd& b) {
  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

inline MatrixXd manifold_retract(const Manifold& man, const MatrixXd& f, const MatrixXd& v) {
  MatrixXd b = f + v;
  switch (man.kind) {
    case ManifoldKind::UnitRows:
      for (int i = 0; i < man.n; ++i) {
        double nr = b.row(i).norm();
        if (nr < 1e-300) throw NumericalBreakdown("retract: degenerate row");
        b.row(i) /= nr;
      }
      return b;
    case ManifoldKind::GroupSpheres:
      for (const auto& g : man.groups) {
        double s = 0;
        for (int i : g) s += b.row(i).squaredNorm();
        s = std::sqrt(s);
        if (s < 1e-300) throw NumericalBreakdown("retract: degenerate group");
        for (int i : g) b.row(i) /= s;
      }
      return b;
    case ManifoldKind::BlockStiefel:
      for (int s = 0; s < man.blocks; ++s)
        b.middleRows(s * man.d, man.d) = detail::polar_rows(b.middleRows(s * man.d, man.d));
      return b;
  }
  throw InvalidInput("manifold_retract: unknown kind");
}

inline MatrixXd manifold_project_tangent(const Manifold& man, const MatrixXd& f,
                                         const MatrixXd& g) {
  MatrixXd out = g;
  switch (man.kind) {
    case ManifoldKind::UnitRows:
      for (int i = 0; i < man.n; ++i) out.row(i) -= g.row(i).dot(f.row(i)) * f.row(i);
      return out;
    case ManifoldKind::GroupSpheres:
      for (const auto& grp : man.groups) {
        double ip = 0;
        for (int i : grp) ip += g.row(i).dot(f.row(i));
        for (int i : grp) out.row(i) -= ip * f.row(i);
      }
      return out;
    case ManifoldKind::BlockStiefel:
      for (int s = 0; s < man.blocks; ++s) {
        auto fs = f.middleRows(s * man.d, man.d);
        auto gs = g.middleRows(s * man.d, man.d);
        MatrixXd sym = 0.5 * (gs * fs.transpose() + fs * gs.transpose());
        out.middleRows(s * man.d, man.d) = gs - sym * fs;
      }
      return out;
  }
  throw InvalidInput("manifold_project_tangent: unknown kind");
}

/// ||A(F F^T) - b||_2, evaluated structurally.
inline double manifold_violation(const Manifold& man, const MatrixXd& f) {
  double s = 0;
  switch (man.kind) {
    case ManifoldKind::UnitRows:
      for (int i = 0; i < man.n; ++i) {
        double v = f.row(i).squaredNorm() - 1.0;
        s += v * v;
      }
      break;
    case ManifoldKind::GroupSpheres:
      for (const auto& g : man.groups) {
        double t = -1.0;
        for (int i : g) t += f.row(i).squaredNorm();
        s += t * t;
      }
      break;
    case ManifoldKind::BlockStiefel:
      for (int blk = 0; blk < man.blocks; ++blk) {
        MatrixXd gram = f.middleRows(blk * man.d, man.d) *
                        f.middleRows(blk * man.d, man.d).transpose();
        for (int a = 0; a < man.d; ++a)
          for (int b2 = a; b2 < man.d; ++b2) {
            double v = gram(a, b2) - (a == b2 ? 1.0 : 0.0);
            s += v * v;
          }
      }
      break;
  }
  return std::sqrt(s);
}

inline MatrixXd manifold_random_point(const Manifold& man, int r, CounterRng& rng) {
  MatrixXd f(man.n, r);
  for (int i = 0; i < man.n; ++i)
    for (int j = 0; j < r; ++j) f(i, j) = rng.normal();
  return manifold_retract(man, MatrixXd::Zero(man.n, r), f);
}

/// Least-squares multiplier fold-in: S(F) = C - A*(y(F)), the matrix whose
/// action gives both the Riemannian gradient 2 S F and the Hessian model.
inline MatrixXd multiplier_matrix(const Manifold& man, const MatrixXd& c, const MatrixXd& f) {
  MatrixXd cf = c * f;
  MatrixXd s = c;
  switch (man.kind) {
    case ManifoldKind::UnitRows:
      for (int i = 0; i < man.n; ++i) s(i, i) -= cf.row(i).dot(f.row(i));
      break;
    case ManifoldKind::GroupSpheres:
      for (const auto& g : man.groups) {
        double y = 0;
        for (int i : g) y += cf.row(i).dot(f.row(i));
        for (int i : g) s(i, i) -= y;
      }
      break;
    case ManifoldKind::BlockStiefel:
      for (int blk = 0; blk < man.blocks; ++blk) {
        auto cfs = cf.middleRows(blk * man.d, man.d);
        auto fs = f.middleRows(blk * man.d, man.d);
        MatrixXd m = 0.5 * (cfs * fs.transpose() + fs * cfs.transpose());
        s.block(blk * man.d, blk * man.d, man.d, man.d) -= m;
      }
      break;
  }
  return s;
}

inline double bm_objective(const MatrixXd& c, const MatrixXd& f) {
  return (c * f).cwiseProduct(f).sum();
}

namespace detail {

inline void householder_complement(const VectorXd& unit, std::vector<VectorXd>& out) {
  // Columns 2..r of the reflector sending e_1 to +-unit.
  const int r = static_cast<int>(unit.size());
  double alpha = (unit(0) >= 0) ? 1.0 : -1.0;
  VectorXd h = unit;
  h(0) += alpha;
  double hn2 = h.squaredNorm();
  for (int k = 1; k < r; ++k) {
    VectorXd e = VectorXd::Zero(r);
    e(k) = 1.0;
    out.push_back(e - (2.0 * h(k) / hn2) * h);
  }
}

}  // namespace detail

/// Orthonormal basis of the tangent space at F, as dense n x r matrices.
inline std::vector<MatrixXd> tangent_basis(const Manifold& man, const MatrixXd& f) {
  const int r = static_cast<int>(f.cols());
  std::vector<MatrixXd> basis;
  switch (man.kind) {
    case ManifoldKind::UnitRows: {
      for (int i = 0; i < man.n; ++i) {
        std::vector<VectorXd> comp;
        detail::householder_complement(f.row(i).transpose(), comp);
        for (const auto& q : comp) {
          MatrixXd e = MatrixXd::Zero(man.n, r);
          e.row(i) = q.transpose();
          basis.push_back(std::move(e));
        }
      }
      break;
    }
    case ManifoldKind::GroupSpheres: {
      for (const auto& g : man.groups) {
        const int gr = static_cast<int>(g.size()) * r;
        VectorXd fvec(gr);
        for (std::size_t t = 0; t < g.size(); ++t)
          fvec.segment(t * r, r) = f.row(g[t]).transpose();
        std::vector<VectorXd> comp;
        detail::householder_complement(fvec, comp);
        for (const auto& q : comp) {
          MatrixXd e = MatrixXd::Zero(man.n, r);
          for (std::size_t t = 0; t < g.size(); ++t)
            e.row(g[t]) = q.segment(t * r, r).transpose();
          basis.push_back(std::move(e));
        }
      }
      break;
    }
    case ManifoldKind::BlockStiefel: {
      const int d = man.d;
      const double inv_rt2 = 1.0 / std::sqrt(2.0);
      for (int blk = 0; blk < man.blocks; ++blk) {
        MatrixXd yt = f.middleRows(blk * d, d).transpose();  // r x d, orthonormal cols
        Eigen::HouseholderQR<MatrixXd> qr(yt);
        MatrixXd qfull = qr.householderQ();
        MatrixXd yperp = qfull.rightCols(r - d);  // complement of span(yt)
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            MatrixXd a = MatrixXd::Zero(d, d);
            a(i, j) = inv_rt2;
            a(j, i) = -inv_rt2;
            MatrixXd e = MatrixXd::Zero(man.n, r);
            e.middleRows(blk * d, d) = (yt * a).transpose();
            basis.push_back(std::move(e));
          }
        for (int a2 = 0; a2 < r - d; ++a2)
          for (int b2 = 0; b2 < d; ++b2) {
            MatrixXd bmat = MatrixXd::Zero(r - d, d);
            bmat(a2, b2) = 1.0;
            MatrixXd e = MatrixXd::Zero(man.n, r);
            e.middleRows(blk * d, d) = (yperp * bmat).transpose();
            basis.push_back(std::move(e));
          }
      }
      break;
    }
  }
  return basis;
}

struct HessianInfo {
  double min_eig = 0;
  MatrixXd min_dir;  // tangent direction attaining it
};

/// Minimum eigenvalue of the Riemannian Hessian Hess f(F)[V] = P_T(2 S V),
/// assembled densely on the tangent basis.
inline HessianInfo hessian_min_eig(const Manifold& man, const MatrixXd& c, const MatrixXd& f) {
  MatrixXd s = multiplier_matrix(man, c, f);
  std::vector<MatrixXd> basis = tangent_basis(man, f);
  const int dim = static_cast<int>(basis.size());
  HessianInfo info;
  if (dim == 0) {
    info.min_eig = 0.0;
    info.min_dir = MatrixXd::Zero(f.rows(), f.cols());
    return info;
  }
  std::vector<MatrixXd> sb(dim);
  for (int b2 = 0; b2 < dim; ++b2) sb[b2] = 2.0 * (s * basis[b2]);
  MatrixXd h(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b2 = a; b2 < dim; ++b2) {
      double v = 0.5 * (basis[a].cwiseProduct(sb[b2]).sum() +
                        basis[b2].cwiseProduct(sb[a]).sum());
      h(a, b2) = v;
      h(b2, a) = v;
    }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  info.min_eig = es.eigenvalues()(0);
  info.min_dir = MatrixXd::Zero(f.rows(), f.cols());
  for (int b2 = 0; b2 < dim; ++b2) info.min_dir += es.eigenvectors()(b2, 0) * basis[b2];
  return info;
}

struct BmConfig {
  double tol_g = -1;  // < 0: 1e-8 * (1 + ||C||_F)
  double tol_h = -1;  // < 0: 1e-6 * (1 + ||C||_F)
  int max_iter = 20000;
  int max_escapes = 50;
  double membership_tol = 1e-9;
  std::function<void(int, double, double)> on_step;  // (iter, f, grad_norm)

  double grad_tol(const MatrixXd& c) const { return tol_g >= 0 ? tol_g : 1e-8 * (1 + c.norm()); }
  double hess_tol(const MatrixXd& c) const { return tol_h >= 0 ? tol_h : 1e-6 * (1 + c.norm()); }
};

struct BmResult {
  MatrixXd F;
  double objective = 0;
  double grad_norm = 0;
  double hess_min_eig = 0;
  bool sosp = false;
  std::optional<double> gap_to_dual;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string status;
};

struct SospCheck {
  double grad_norm = 0;
  double hess_min_eig = 0;
  bool sosp = false;
};

inline SospCheck check_sosp(const StandardFormSDP& sdp, const Manifold& man, const MatrixXd& f,
                            double tol_g, double tol_h) {
  if (manifold_violation(man, f) > 1e-9 * std::max(1.0, sdp.b.norm()))
    throw InvalidInput("check_sosp: point is off the constraint manifold");
  const MatrixXd& c = sdp.C.mat();
  MatrixXd grad = 2.0 * (multiplier_matrix(man, c, f) * f);
  SospCheck out;
  out.grad_norm = grad.norm();
  out.hess_min_eig = hessian_min_eig(man, c, f).min_eig;
  out.sosp = out.grad_norm <= tol_g && out.hess_min_eig >= -tol_h;
  return out;
}

/// Riemannian gradient descent with backtracking; at first-order points with
/// escape directions it follows the most negative curvature and continues.
inline BmResult bm_solve(const StandardFormSDP& sdp, const Manifold& man, int r,
                         const std::optional<MatrixXd>& init, std::uint64_t seed,
                         BmConfig cfg = {}) {
  if (r < 1) throw InvalidInput("bm_solve: r must be >= 1");
  if (man.kind == ManifoldKind::BlockStiefel && r < man.d)
    throw InvalidInput("bm_solve: block factorization requires r >= d");
  const MatrixXd& c = sdp.C.mat();
  const double tol_g = cfg.grad_tol(c);
  const double tol_h = cfg.hess_tol(c);

  MatrixXd f;
  if (init) {
    f = *init;
    if (f.rows() != man.n || f.cols() != r) throw InvalidInput("bm_solve: init shape mismatch");
    if (manifold_violation(man, f) > cfg.membership_tol)
      throw InvalidInput("bm_solve: init is off the manifold");
  } else {
    CounterRng rng(seed);
    f = manifold_random_point(man, r, rng);
  }

  BmResult out;
  out.seed = seed;
  double fval = bm_objective(c, f);
  double step = 1.0 / (1.0 + c.norm());
  int escapes = 0;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    MatrixXd grad = 2.0 * (multiplier_matrix(man, c, f) * f);
    double gnorm = grad.norm();
    if (cfg.on_step) cfg.on_step(iter, fval, gnorm);

    if (gnorm <= tol_g) {
      HessianInfo hi = hessian_min_eig(man, c, f);
      if (hi.min_eig >= -tol_h) {
        out.sosp = true;
        out.hess_min_eig = hi.min_eig;
        out.status = "sosp";
        break;
      }
      if (escapes >= cfg.max_escapes) {
        out.hess_min_eig = hi.min_eig;
        out.status = "escape_limit";
        break;
      }
      ++escapes;
      bool moved = false;
      for (double sign : {1.0, -1.0}) {
        double t = 1.0;
        for (int bt = 0; bt < 40 && !moved; ++bt, t *= 0.5) {
          MatrixXd cand = manifold_retract(man, f, sign * t * hi.min_dir);
          double fc = bm_objective(c, cand);
          if (fc <= fval - 0.25 * t * t * (-hi.min_eig)) {
            f = cand;
            fval = fc;
            moved = true;
          }
        }
        if (moved) break;
      }
      if (!moved) {
        out.hess_min_eig = hi.min_eig;
        out.status = "escape_stalled";
        break;
      }
      continue;
    }

    MatrixXd dir = -grad;
    double t = std::min(step * 2.0, 1e3);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      MatrixXd cand = manifold_retract(man, f, t * dir);
      double fc = bm_objective(c, cand);
      if (fc <= fval - 1e-4 * t * gnorm * gnorm) {
        if (manifold_violation(man, cand) > cfg.membership_tol)
          throw NumericalBreakdown("bm_solve: manifold violation after retraction");
        f = cand;
        fval = fc;
        step = t;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No Armijo progress at machine-scale steps: stop and report honestly.
      out.status = "line_search_stalled";
      break;
    }
  }
  if (out.status.empty()) out.status = "max_iterations";

  MatrixXd grad = 2.0 * (multiplier_matrix(man, c, f) * f);
  out.F = f;
  out.objective = fval;
  out.grad_norm = grad.norm();
  if (out.status != "sosp") out.hess_min_eig = hessian_min_eig(man, c, f).min_eig;
  out.sosp = out.grad_norm <= tol_g && out.hess_min_eig >= -tol_h;
  out.iterations = iter;
  return out;
}

/// f(F) - b^T y for a dual-feasible y; a positive value certifies that F is
/// not globally optimal.
inline double gap_to_dual(const StandardFormSDP& sdp, const MatrixXd& f, const VectorXd& y) {
  SymMatrix z = slack(sdp, y);
  double lmin = eig_sym(z).values.minCoeff();
  if (lmin < -1e-8) throw InvalidInput("gap_to_dual: y is not dual feasible");
  return bm_objective(sdp.C.mat(), f) - sdp.b.dot(y);
}

/// Multi-start driver; per-start seeds are derived as derive(seed, index) and
/// results are returned in index order regardless of scheduling.
inline std::vector<BmResult> bm_multistart(const StandardFormSDP& sdp, const Manifold& man, int r,
                                           int starts, std::uint64_t seed, BmConfig cfg = {},
                                           const std::optional<VectorXd>& dual_y = std::nullopt) {
  if (starts < 1) throw InvalidInput("bm_multistart: starts must be >= 1");
  std::vector<BmResult> results(starts);
  std::vector<std::exception_ptr> errors(starts);
  unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                        static_cast<unsigned>(starts));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int k = next.fetch_add(1);
      if (k >= starts) return;
      try {
        results[k] = bm_solve(sdp, man, r, std::nullopt, CounterRng::derive(seed, k), cfg);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (dual_y)
    for (auto& res : results) res.gap_to_dual = gap_to_dual(sdp, res.F, *dual_y);
  return results;
}

}  // namespace sdpcert
