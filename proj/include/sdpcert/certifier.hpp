#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "sdpcert/model.hpp"
#include "sdpcert/rng.hpp"
#include "sdpcert/solver.hpp"

namespace sdpcert {

namespace detail {

inline void fnv1a_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
}

inline void fnv1a_double(std::uint64_t& h, double v) { fnv1a_bytes(h, &v, sizeof(v)); }
inline void fnv1a_int(std::uint64_t& h, std::int64_t v) { fnv1a_bytes(h, &v, sizeof(v)); }

inline std::uint64_t hash_sdp(const StandardFormSDP& sdp) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  fnv1a_int(h, sdp.n);
  fnv1a_int(h, sdp.m);
  for (int i = 0; i < sdp.n; ++i)
    for (int j = i; j < sdp.n; ++j) fnv1a_double(h, sdp.C(i, j));
  for (const auto& a : sdp.constraints) {
    fnv1a_int(h, static_cast<std::int64_t>(a.entries.size()));
    for (const auto& e : a.entries) {
      fnv1a_int(h, e.i);
      fnv1a_int(h, e.j);
      fnv1a_double(h, e.v);
    }
  }
  for (int i = 0; i < sdp.m; ++i) fnv1a_double(h, sdp.b(i));
  return h;
}

inline std::uint64_t hash_solution(const SolverSolution& sol) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (int i = 0; i < sol.X.n(); ++i)
    for (int j = i; j < sol.X.n(); ++j) fnv1a_double(h, sol.X(i, j));
  for (int i = 0; i < sol.y.size(); ++i) fnv1a_double(h, sol.y(i));
  return h;
}

}  // namespace detail

/// Verdict record for one solved instance: ranks, complementarity,
/// conditioning of the two uniqueness operators, and the simplicity flags.
struct SimplicityReport {
  int n = 0, m = 0;
  double eps = 0;
  int rank_p = 0, rank_d = 0;
  std::optional<double> lambda_minpos_X, lambda_minpos_Z;
  std::optional<double> kappa_X, kappa_Z;    // lambda_1 / lambda_{min>0}
  double sigma_min_AZ = 0, sigma_max_AZ = 0;
  std::optional<double> kappa_AZ;
  double sigma_min_AX = 0, sigma_max_AX = 0;
  std::optional<double> kappa_AX;
  double sigma_min_A = 0;  // of the full constraint map
  double gap = 0;
  double primal_obj = 0, dual_obj = 0;
  struct Flags {
    bool surjective = false;
    bool strong_duality = false;
    bool strict_complementarity = false;
    bool primal_unique = false;
    bool dual_unique = false;
    bool simple = false;
    bool primal_simple = false;
  } flags;
  std::vector<std::string> warnings;
  std::uint64_t sdp_hash = 0, sol_hash = 0;
};

/// Necessary condition for dual uniqueness:
/// (n-r)(n-r+1)/2 <= n(n+1)/2 - m.  Returns false when the dual is
/// certainly non-unique.
inline bool dual_uniqueness_necessary(int n, int m, int rank_p) {
  if (rank_p > n) throw InvalidInput("dual_uniqueness_necessary: rank exceeds dimension");
  const long long k = n - rank_p;
  return k * (k + 1) / 2 <= static_cast<long long>(n) * (n + 1) / 2 - m;
}

/// Uniqueness-operator diagnostics shared by both directions.
struct OperatorSpectrum {
  double sigma_min = 0, sigma_max = 0;
  bool injective = false;
};

namespace detail {

// sigma extremes of the map S in Sym(k) |-> A(U S U^T), assembled densely
// on svec coordinates (m x k(k+1)/2).
inline OperatorSpectrum primal_uniqueness_operator(const OperatorSDP& op, const MatrixXd& U,
                                                   double rel_tol) {
  OperatorSpectrum sp;
  const int k = static_cast<int>(U.cols());
  if (k == 0) {  // face is the origin; trivially unique
    sp.injective = true;
    return sp;
  }
  const int cols = k * (k + 1) / 2;
  MatrixXd M(op.m, cols);
  const double rt2 = std::sqrt(2.0);
  int c = 0;
  for (int a = 0; a < k; ++a) {
    M.col(c++) = op.apply_outer(U.col(a), U.col(a));
    for (int b = a + 1; b < k; ++b) M.col(c++) = rt2 * op.apply_outer(U.col(a), U.col(b));
  }
  Eigen::BDCSVD<MatrixXd> svd(M);
  sp.sigma_max = svd.singularValues()(0);
  sp.sigma_min = (cols <= op.m) ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
  sp.injective = sp.sigma_min > rel_tol * sp.sigma_max && sp.sigma_max > 0;
  return sp;
}

// sigma extremes of the map y |-> [V1 V2]^T A*(y) V1. Columns vec(A_k V1)
// have the same Gram as the stacked form since [V1 V2] is orthogonal.
inline OperatorSpectrum dual_uniqueness_operator(const OperatorSDP& op, const MatrixXd& V1,
                                                 double rel_tol) {
  OperatorSpectrum sp;
  const int r = static_cast<int>(V1.cols());
  if (r == 0) return sp;  // nothing pins y; cannot certify uniqueness
  MatrixXd D(op.n * r, op.m);
  for (int kcons = 0; kcons < op.m; ++kcons) {
    MatrixXd akv = op.mult_k(kcons, V1);
    D.col(kcons) = Eigen::Map<VectorXd>(akv.data(), akv.size());
  }
  Eigen::BDCSVD<MatrixXd> svd(D);
  sp.sigma_max = svd.singularValues()(0);
  sp.sigma_min = (op.m <= op.n * r) ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
  sp.injective = sp.sigma_min > rel_tol * sp.sigma_max && sp.sigma_max > 0;
  return sp;
}

}  // namespace detail

/// Full verification protocol on a solved instance. `eps` is the rank
/// threshold; uniqueness uses the relative test sigma_min > 1e-6 * sigma_max.
inline SimplicityReport certify(const StandardFormSDP& sdp, const SolverSolution& sol,
                                double eps = 1e-6) {
  if (eps <= 0) throw InvalidInput("certify: eps must be positive");
  constexpr double kUniqueRelTol = 1e-6;
  SimplicityReport rep;
  rep.n = sdp.n;
  rep.m = sdp.m;
  rep.eps = eps;
  rep.sdp_hash = detail::hash_sdp(sdp);
  rep.sol_hash = detail::hash_solution(sol);

  const double res_max = sol.res.max();
  if (res_max > 10 * eps)
    rep.warnings.push_back("solution residuals exceed 10*eps; ranks may be unreliable");

  SymMatrix Z = slack(sdp, sol.y);
  EigDecomp ex = eig_sym(sol.X);
  EigDecomp ez = eig_sym(Z);
  RankInfo rx = rank_eps(ex.values, eps);
  RankInfo rz = rank_eps(ez.values, eps);
  rep.rank_p = rx.rank;
  rep.rank_d = rz.rank;
  rep.lambda_minpos_X = rx.lambda_min_pos;
  rep.lambda_minpos_Z = rz.lambda_min_pos;
  if (rx.lambda_min_pos) rep.kappa_X = ex.values(0) / *rx.lambda_min_pos;
  if (rz.lambda_min_pos) rep.kappa_Z = ez.values(0) / *rz.lambda_min_pos;

  for (const auto& [label, vals] : {std::pair<const char*, const VectorXd*>{"X", &ex.values},
                                    {"Z", &ez.values}}) {
    for (int i = 0; i < vals->size(); ++i) {
      double v = (*vals)(i);
      if (v > eps / 10 && v < eps * 10) {
        rep.warnings.push_back(std::string("eigenvalue of ") + label +
                               " near the rank threshold; rank estimate is sensitive");
        break;
      }
    }
  }
  if (rep.rank_p + rep.rank_d > sdp.n)
    rep.warnings.push_back("rank overlap (rank_p + rank_d > n) indicates an unconverged solution");

  rep.flags.strict_complementarity = (rep.rank_p + rep.rank_d == sdp.n);

  rep.primal_obj = sol.primal_obj;
  rep.dual_obj = sol.dual_obj;
  rep.gap = std::abs(sol.primal_obj - sol.dual_obj);
  rep.flags.strong_duality = rep.gap <= 1e-5 * (1.0 + std::abs(sol.primal_obj));

  SurjectivityCheck sur = check_surjective(sdp);
  rep.flags.surjective = sur.surjective;
  rep.sigma_min_A = sur.sigma_min;

  OperatorSDP op = make_operator(sdp);

  // Primal uniqueness: null basis of Z spans the face containing X*.
  MatrixXd U = ez.vectors.rightCols(sdp.n - rep.rank_d);
  OperatorSpectrum az = detail::primal_uniqueness_operator(op, U, kUniqueRelTol);
  rep.sigma_min_AZ = az.sigma_min;
  rep.sigma_max_AZ = az.sigma_max;
  if (az.sigma_min > 0) rep.kappa_AZ = az.sigma_max / az.sigma_min;
  rep.flags.primal_unique = az.injective;

  // Dual uniqueness: range basis of X.
  MatrixXd V1 = ex.vectors.leftCols(rep.rank_p);
  OperatorSpectrum ax = detail::dual_uniqueness_operator(op, V1, kUniqueRelTol);
  rep.sigma_min_AX = ax.sigma_min;
  rep.sigma_max_AX = ax.sigma_max;
  if (ax.sigma_min > 0) rep.kappa_AX = ax.sigma_max / ax.sigma_min;
  rep.flags.dual_unique = ax.injective;

  rep.flags.primal_simple = rep.flags.surjective && rep.flags.strong_duality &&
                            rep.flags.strict_complementarity && rep.flags.primal_unique;
  rep.flags.simple = rep.flags.primal_simple && rep.flags.dual_unique;
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical conditioning probes.
// ---------------------------------------------------------------------------

struct SensitivityRow {
  double delta = 0;
  int trial = 0;
  double distance = 0;
  bool ok = false;
  std::string error;
};

struct SensitivityResult {
  std::vector<SensitivityRow> rows;
  std::vector<double> deltas;
  std::vector<double> median_distance;  // per delta, over successful trials
  std::optional<double> fitted_exponent;
};

/// Perturbs (C, b) by random directions of norm delta, re-solves, and
/// records ||X' - X*||_F. Re-solve failures are recorded per row.
inline SensitivityResult sensitivity_probe(const StandardFormSDP& sdp, const SolverSolution& sol,
                                           const std::vector<double>& magnitudes,
                                           std::uint64_t seed, int trials = 1,
                                           SolverConfig cfg = {}) {
  if (trials < 1) throw InvalidInput("sensitivity_probe: trials must be >= 1");
  SensitivityResult out;
  out.deltas = magnitudes;
  int idx = 0;
  for (double delta : magnitudes) {
    std::vector<double> dists;
    for (int t = 0; t < trials; ++t, ++idx) {
      CounterRng rng(CounterRng::derive(seed, idx));
      MatrixXd dc(sdp.n, sdp.n);
      for (int i = 0; i < sdp.n; ++i)
        for (int j = i; j < sdp.n; ++j) {
          double g = rng.normal();
          dc(i, j) = g;
          dc(j, i) = g;
        }
      dc /= dc.norm();
      VectorXd db(sdp.m);
      for (int i = 0; i < sdp.m; ++i) db(i) = rng.normal();
      db /= db.norm();

      StandardFormSDP pert(SymMatrix::from_dense(sdp.C.mat() + delta * dc), sdp.constraints,
                           sdp.b + delta * db, sdp.metadata);
      SensitivityRow row{delta, t, 0.0, false, ""};
      try {
        SolverSolution s2 = solve(pert, cfg);
        row.distance = (s2.X.mat() - sol.X.mat()).norm();
        row.ok = true;
        dists.push_back(row.distance);
      } catch (const Error& e) {
        row.error = e.what();
      }
      out.rows.push_back(row);
    }
    if (!dists.empty()) {
      std::sort(dists.begin(), dists.end());
      out.median_distance.push_back(dists[dists.size() / 2]);
    } else {
      out.median_distance.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }

  // Log-log least squares on the per-delta medians (delta > 0 only).
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < out.deltas.size(); ++i)
    if (out.deltas[i] > 0 && out.median_distance[i] > 0 && std::isfinite(out.median_distance[i]))
      pts.push_back({std::log(out.deltas[i]), std::log(out.median_distance[i])});
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double nn = static_cast<double>(pts.size());
    double denom = nn * sxx - sx * sx;
    if (std::abs(denom) > 1e-12) out.fitted_exponent = (nn * sxy - sx * sy) / denom;
  }
  return out;
}

struct ErrorBoundTerms {
  double feas = 0;     // ||A X - b||
  double cone = 0;     // (-lambda_min(X))_+
  double subopt = 0;   // tr(C X) - p*
  double sum() const { return feas + cone + subopt; }
};

inline ErrorBoundTerms error_bound_terms(const StandardFormSDP& sdp, double p_star,
                                         const SymMatrix& x) {
  ErrorBoundTerms t;
  t.feas = (apply_A(sdp, x) - sdp.b).norm();
  t.cone = std::max(0.0, -eig_sym(x).values.minCoeff());
  t.subopt = sdp.C.mat().cwiseProduct(x.mat()).sum() - p_star;
  return t;
}

struct ErrorBoundRow {
  double delta = 0;
  double distance = 0;
  ErrorBoundTerms terms;
};

struct ErrorBoundResult {
  std::vector<ErrorBoundRow> rows;
  std::optional<double> gamma_hat_rho1;  // max distance   / rhs over rows with rhs > 0
  std::optional<double> gamma_hat_rho2;  // max distance^2 / rhs
};

/// Samples X = X* + delta * (random unit symmetric direction) and tabulates
/// distance against the feasibility + cone + suboptimality sum.
inline ErrorBoundResult error_bound_probe(const StandardFormSDP& sdp, const SolverSolution& sol,
                                          const std::vector<double>& magnitudes,
                                          std::uint64_t seed, int trials = 1) {
  if (trials < 1) throw InvalidInput("error_bound_probe: trials must be >= 1");
  ErrorBoundResult out;
  const double p_star = sol.primal_obj;
  int idx = 0;
  double g1 = 0, g2 = 0;
  bool any = false;
  for (double delta : magnitudes) {
    for (int t = 0; t < trials; ++t, ++idx) {
      CounterRng rng(CounterRng::derive(seed, idx));
      MatrixXd dm(sdp.n, sdp.n);
      for (int i = 0; i < sdp.n; ++i)
        for (int j = i; j < sdp.n; ++j) {
          double g = rng.normal();
          dm(i, j) = g;
          dm(j, i) = g;
        }
      dm /= dm.norm();
      SymMatrix x = SymMatrix::from_dense(sol.X.mat() + delta * dm);
      ErrorBoundRow row;
      row.delta = delta;
      row.distance = delta;
      row.terms = error_bound_terms(sdp, p_star, x);
      out.rows.push_back(row);
      double rhs = row.terms.sum();
      if (rhs > 0 && delta > 0) {
        g1 = std::max(g1, row.distance / rhs);
        g2 = std::max(g2, row.distance * row.distance / rhs);
        any = true;
      }
    }
  }
  if (any) {
    out.gamma_hat_rho1 = g1;
    out.gamma_hat_rho2 = g2;
  }
  return out;
}

}  // namespace sdpcert
