#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "sdpcert/instances.hpp"
#include "sdpcert/solver.hpp"

namespace sdpcert {

/// Entrywise-observed low-rank recovery problem.
struct McProblem {
  int n1 = 0, n2 = 0, r = 0;
  MatrixXd X_natural;
  MatrixXd U, V;   // n1 x r, n2 x r, orthonormal columns
  VectorXd sigma;  // positive, descending
  std::vector<std::pair<int, int>> omega;  // 0-based, row-major sorted
  double p = 1.0;
  double mu = 1.0;
  std::uint64_t seed = 0;
};

/// Incoherence: smallest mu with max_i ||e_i^T U|| <= sqrt(mu r / n1) and the
/// corresponding bound for V.
inline double incoherence(const MatrixXd& u, const MatrixXd& v) {
  const int r = static_cast<int>(u.cols());
  double mu = 0;
  for (int i = 0; i < u.rows(); ++i)
    mu = std::max(mu, u.row(i).squaredNorm() * u.rows() / r);
  for (int i = 0; i < v.rows(); ++i)
    mu = std::max(mu, v.row(i).squaredNorm() * v.rows() / r);
  return mu;
}

inline std::vector<std::pair<int, int>> bernoulli_omega(int n1, int n2, double p,
                                                        CounterRng& rng) {
  std::vector<std::pair<int, int>> omega;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      if (rng.bernoulli(p)) omega.push_back({i, j});
  return omega;
}

/// Gaussian-factor ground truth, re-SVD'd, with iid Bernoulli(p) observations.
inline McProblem mc_generate(int n1, int n2, int r, double p, std::uint64_t seed) {
  if (r < 1 || r > std::min(n1, n2)) throw InvalidInput("mc_generate: rank out of range");
  if (!(p > 0 && p <= 1)) throw InvalidInput("mc_generate: p must be in (0,1]");
  CounterRng rng(seed);
  MatrixXd g1(n1, r), g2(n2, r);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < r; ++j) g1(i, j) = rng.normal();
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < r; ++j) g2(i, j) = rng.normal();
  MatrixXd x = g1 * g2.transpose();
  Eigen::BDCSVD<MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);

  McProblem prob;
  prob.n1 = n1;
  prob.n2 = n2;
  prob.r = r;
  prob.U = svd.matrixU().leftCols(r);
  prob.V = svd.matrixV().leftCols(r);
  prob.sigma = svd.singularValues().head(r);
  prob.X_natural = prob.U * prob.sigma.asDiagonal() * prob.V.transpose();
  prob.p = p;
  prob.seed = seed;
  prob.mu = incoherence(prob.U, prob.V);
  prob.omega = bernoulli_omega(n1, n2, p, rng);
  return prob;
}

/// Lifted nuclear-norm SDP: dimension n1+n2, objective tr, one constraint per
/// observed entry pinning the off-diagonal block.
inline Instance mc_lift(const McProblem& prob) {
  const int n = prob.n1 + prob.n2;
  std::vector<SparseSym> cons;
  std::vector<double> rhs;
  cons.reserve(prob.omega.size());
  for (auto [i, j] : prob.omega) {
    SparseSym a(n);
    a.add(i, prob.n1 + j, 0.5);
    cons.push_back(std::move(a));
    rhs.push_back(prob.X_natural(i, j));
  }
  if (cons.empty()) throw InvalidInput("mc_lift: empty observation set");

  MatrixXd xtop(n, prob.r);
  xtop.topRows(prob.n1) = prob.U;
  xtop.bottomRows(prob.n2) = prob.V;
  MatrixXd xstar = xtop * prob.sigma.asDiagonal() * xtop.transpose();

  Instance inst(StandardFormSDP(SymMatrix::identity(n), std::move(cons),
                                Eigen::Map<VectorXd>(rhs.data(), rhs.size()), "mc-lift"));
  inst.truth = InstanceTruth{SymMatrix::symmetrized(xstar), std::nullopt, prob.r};
  inst.signal_lowrank =
      LowRankSignal{prob.X_natural, prob.U, prob.V, prob.sigma, prob.omega, prob.p, prob.mu};
  inst.seed = prob.seed;
  inst.params["n1"] = prob.n1;
  inst.params["n2"] = prob.n2;
  inst.params["rank"] = prob.r;
  inst.params["p"] = prob.p;
  inst.params["mu"] = prob.mu;
  return inst;
}

// --- tangent-space projections at X_natural --------------------------------

inline MatrixXd project_omega(const MatrixXd& m, const std::vector<std::pair<int, int>>& omega) {
  MatrixXd out = MatrixXd::Zero(m.rows(), m.cols());
  for (auto [i, j] : omega) out(i, j) = m(i, j);
  return out;
}

/// Pi_T(Z) = U U^T Z + Z V V^T - U U^T Z V V^T.
inline MatrixXd project_tangent_lr(const MatrixXd& z, const MatrixXd& u, const MatrixXd& v) {
  MatrixXd uz = u * (u.transpose() * z);
  MatrixXd zv = (z * v) * v.transpose();
  MatrixXd uzv = u * (u.transpose() * zv);
  return uz + zv - uzv;
}

inline MatrixXd project_tangent_perp_lr(const MatrixXd& z, const MatrixXd& u, const MatrixXd& v) {
  return z - project_tangent_lr(z, u, v);
}

struct GolfingState {
  int k0 = 0;
  int t0 = 0;
  double q_batch = 0;
  std::vector<std::vector<std::pair<int, int>>> batches;
  std::vector<std::pair<int, int>> omega_union;  // sorted
  std::vector<double> w_norms;  // ||W^t||_F, phase 1
  std::vector<double> z_norms;  // ||Z^t||_F, phase 2
  int series_terms = 0;         // total phase-2 terms summed (Y2 + Y3)
};

struct GolfingChecks {
  double pomega_residual = 0;   // ||P_Omega(Y) - Y||_F
  double pit_residual = 0;      // ||Pi_T(Y) - U V^T||_F
  double pitperp_opnorm = 0;    // ||Pi_Tperp(Y)||_op
  bool opnorm_bound_ok = false; // <= 5/8
};

struct GolfingCertificate {
  MatrixXd Y;
  GolfingState state;
  GolfingChecks checks;
};

/// Iterative dual-certificate construction from k0 independent observation
/// batches (the batched sampling model; the union plays the role of Omega).
/// Throws CertificateFailure when the tangent-space iterates stop
/// contracting (growth over 5 consecutive steps).
inline GolfingCertificate golfing_certificate(const McProblem& prob, double c0,
                                              std::uint64_t seed) {
  if (c0 <= 0) throw InvalidInput("golfing_certificate: C0 must be positive");
  GolfingCertificate cert;
  GolfingState& st = cert.state;
  st.k0 = std::max(1, static_cast<int>(std::ceil(c0 * std::log(prob.mu * prob.r))));
  const int nmax = std::max(prob.n1, prob.n2);
  st.t0 = static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(nmax)))) + 2;
  st.q_batch = 1.0 - std::pow(1.0 - prob.p, 1.0 / st.k0);
  if (st.q_batch <= 0) throw InvalidInput("golfing_certificate: degenerate batch probability");

  CounterRng rng(seed);
  std::vector<std::vector<char>> in_union(prob.n1, std::vector<char>(prob.n2, 0));
  for (int t = 0; t < st.k0; ++t) {
    st.batches.push_back(bernoulli_omega(prob.n1, prob.n2, st.q_batch, rng));
    for (auto [i, j] : st.batches.back()) in_union[i][j] = 1;
  }
  for (int i = 0; i < prob.n1; ++i)
    for (int j = 0; j < prob.n2; ++j)
      if (in_union[i][j]) st.omega_union.push_back({i, j});

  const double invq = 1.0 / st.q_batch;
  const MatrixXd w0 = prob.U * prob.V.transpose();
  const double trunc = 1e-12 * w0.norm();

  auto fail_diag = [&](const std::string& phase, const std::vector<double>& norms) {
    std::ostringstream os;
    os << "golfing_certificate: iterates grew over 5 consecutive steps in " << phase
       << " (k0=" << st.k0 << ", q=" << st.q_batch << ", last norms:";
    for (std::size_t i = norms.size() >= 6 ? norms.size() - 6 : 0; i < norms.size(); ++i)
      os << " " << norms[i];
    os << ")";
    return CertificateFailure(os.str());
  };

  MatrixXd y = MatrixXd::Zero(prob.n1, prob.n2);
  MatrixXd w = w0;
  int grow = 0;
  double prev = w.norm();
  st.w_norms.push_back(prev);
  for (int t = 1; t <= st.k0 - 1; ++t) {
    MatrixXd term = invq * project_omega(w, st.batches[t - 1]);
    y += term;
    w = project_tangent_lr(w - term, prob.U, prob.V);
    double cur = w.norm();
    st.w_norms.push_back(cur);
    grow = (cur > prev) ? grow + 1 : 0;
    if (grow >= 5) throw fail_diag("phase 1", st.w_norms);
    prev = cur;
  }

  MatrixXd z = w;  // Z^0 = W^{k0-1}
  grow = 0;
  prev = z.norm();
  st.z_norms.push_back(prev);
  const auto& last_batch = st.batches[st.k0 - 1];
  const int hard_cap = st.t0 + 400;
  for (int t = 1; t <= hard_cap; ++t) {
    MatrixXd term = invq * project_omega(z, last_batch);
    y += term;
    ++st.series_terms;
    z = project_tangent_lr(z - term, prob.U, prob.V);
    double cur = z.norm();
    st.z_norms.push_back(cur);
    grow = (cur > prev) ? grow + 1 : 0;
    if (grow >= 5) throw fail_diag("phase 2", st.z_norms);
    prev = cur;
    if (t >= st.t0 && cur <= trunc) break;
  }

  cert.Y = y;
  cert.checks.pomega_residual = (project_omega(y, st.omega_union) - y).norm();
  cert.checks.pit_residual = (project_tangent_lr(y, prob.U, prob.V) - w0).norm();
  cert.checks.pitperp_opnorm = op_norm(project_tangent_perp_lr(y, prob.U, prob.V));
  cert.checks.opnorm_bound_ok = cert.checks.pitperp_opnorm <= 5.0 / 8.0;
  return cert;
}

struct LiftedDualReport {
  VectorXd y;          // dual vector on the given observation set (2 * Y_ij)
  MatrixXd Ytilde;     // [0 Y; Y^T 0]
  double lambda_min = 0;        // of I - Ytilde
  double null_residual = 0;     // ||(I - Ytilde) [U;V]||_F / sqrt(2)
  double complementarity = 0;   // <Xtilde*, I - Ytilde>
  double lambda_threshold = 0;  // lambda_{n1+n2-r}(I - Ytilde)
  bool psd_ok = false;
  bool bound_38_ok = false;     // lambda_threshold >= 3/8
  double duality_residual = 0;  // |2 tr(X_natural^T Y) - tr(Xtilde*)|
};

/// Embeds a certificate Y supported on `omega` into the lifted dual and
/// verifies slack positivity, complementarity, and the 3/8 spectral bound.
inline LiftedDualReport lifted_dual_from_Y(const McProblem& prob, const MatrixXd& y_mat,
                                           const std::vector<std::pair<int, int>>& omega) {
  if ((project_omega(y_mat, omega) - y_mat).norm() != 0.0)
    throw InvalidInput("lifted_dual_from_Y: Y has support outside the observation set");
  const int n = prob.n1 + prob.n2;
  LiftedDualReport rep;
  rep.y.resize(static_cast<int>(omega.size()));
  for (std::size_t k = 0; k < omega.size(); ++k)
    rep.y(k) = 2.0 * y_mat(omega[k].first, omega[k].second);

  rep.Ytilde = MatrixXd::Zero(n, n);
  rep.Ytilde.topRightCorner(prob.n1, prob.n2) = y_mat;
  rep.Ytilde.bottomLeftCorner(prob.n2, prob.n1) = y_mat.transpose();

  MatrixXd slack_mat = MatrixXd::Identity(n, n) - rep.Ytilde;
  EigDecomp ed = eig_sym(SymMatrix::symmetrized(slack_mat));
  rep.lambda_min = ed.values(n - 1);
  rep.psd_ok = rep.lambda_min >= -1e-10 * std::max(1.0, std::abs(ed.values(0)));

  MatrixXd stacked(n, prob.r);
  stacked.topRows(prob.n1) = prob.U;
  stacked.bottomRows(prob.n2) = prob.V;
  rep.null_residual = (slack_mat * stacked).norm() / std::sqrt(2.0);

  MatrixXd xstar = stacked * prob.sigma.asDiagonal() * stacked.transpose();
  rep.complementarity = slack_mat.cwiseProduct(xstar).sum();
  rep.lambda_threshold = ed.values(n - prob.r - 1);
  rep.bound_38_ok = rep.lambda_threshold >= 3.0 / 8.0;
  rep.duality_residual =
      std::abs(2.0 * prob.X_natural.cwiseProduct(y_mat).sum() - xstar.trace());
  return rep;
}

struct McDualDemo {
  SolverSolution sol;
  int rank_star = 0;
  VectorXd spectrum_identity;  // eigenvalues of Z_C, descending
  VectorXd spectrum_random;
  double distance = 0;
  bool multiplicity = false;

  explicit McDualDemo(SolverSolution s) : sol(std::move(s)) {}
};

/// Solves the lifted instance, then resolves the dual slack on the face
/// null(X*) twice with different restricted objectives; declares multiplicity
/// when the two dual solutions differ.
inline McDualDemo dual_multiplicity_demo(const McProblem& prob, SolverConfig cfg,
                                         std::uint64_t seed, double eps = 1e-6) {
  Instance lifted = mc_lift(prob);
  McDualDemo demo(solve(lifted.sdp, cfg));
  EigDecomp ed = eig_sym(demo.sol.X);
  demo.rank_star = rank_eps(ed.values, eps).rank;
  const int n = lifted.sdp.n;
  const int k = n - demo.rank_star;
  MatrixXd u_null = ed.vectors.rightCols(k);

  CounterRng rng(CounterRng::derive(seed, 0xD0A1));
  SymMatrix c_rand = random_sym(k, rng);
  SymMatrix z1 = solve_restricted(lifted.sdp, u_null, SymMatrix::identity(k), cfg);
  SymMatrix z2 = solve_restricted(lifted.sdp, u_null, c_rand, cfg);

  MatrixXd zc1 = u_null * z1.mat() * u_null.transpose();
  MatrixXd zc2 = u_null * z2.mat() * u_null.transpose();
  demo.spectrum_identity = eig_sym(SymMatrix::symmetrized(zc1)).values;
  demo.spectrum_random = eig_sym(SymMatrix::symmetrized(zc2)).values;
  demo.distance = (zc1 - zc2).norm();
  demo.multiplicity = demo.distance > 1e-3 * std::max(zc1.norm(), 1.0);
  return demo;
}

}  // namespace sdpcert
