#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sdpcert/model.hpp"
#include "sdpcert/rng.hpp"

namespace sdpcert {

struct Graph {
  int n_vertices = 0;
  struct Edge {
    int i, j;  // 1-based vertex ids
    double w;
  };
  std::vector<Edge> edges;
};

/// Edge-list format: header "n m", then m lines "i j w" with 1-based ids.
inline Graph parse_gset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("parse_gset: cannot open " + path);
  Graph g;
  std::string line;
  int line_no = 0;
  long long m_declared = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    if (m_declared < 0) {
      long long n;
      if (!(ss >> n >> m_declared) || n < 1 || m_declared < 0)
        throw ParseError("parse_gset: malformed header", line_no);
      std::string rest;
      if (ss >> rest) throw ParseError("parse_gset: trailing tokens in header", line_no);
      g.n_vertices = static_cast<int>(n);
      continue;
    }
    if (static_cast<long long>(g.edges.size()) == m_declared) {
      std::string tok;
      if (std::istringstream(line) >> tok)
        throw ParseError("parse_gset: extra content after declared edges", line_no);
      continue;
    }
    int i, j;
    double w;
    if (!(ss >> i >> j >> w)) throw ParseError("parse_gset: malformed edge line", line_no);
    if (i < 1 || j < 1 || i > g.n_vertices || j > g.n_vertices)
      throw ParseError("parse_gset: vertex id out of range", line_no);
    g.edges.push_back({i, j, w});
  }
  if (m_declared < 0) throw ParseError("parse_gset: empty file", 1);
  if (static_cast<long long>(g.edges.size()) != m_declared)
    throw ParseError("parse_gset: fewer edges than declared", line_no + 1);
  return g;
}

inline Graph random_graph(int n, double density, std::uint64_t seed) {
  if (n < 1 || density < 0 || density > 1) throw InvalidInput("random_graph: bad parameters");
  CounterRng rng(seed);
  Graph g;
  g.n_vertices = n;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (rng.bernoulli(density)) g.edges.push_back({i, j, 1.0});
  return g;
}

/// Rectangular low-rank ground truth attached to a lifted instance.
struct LowRankSignal {
  MatrixXd X_natural;
  MatrixXd U, V;
  VectorXd sigma;
  std::vector<std::pair<int, int>> omega;  // 0-based, sorted
  double p = 1.0;
  double mu = 1.0;
};

struct InstanceTruth {
  SymMatrix X_star;
  std::optional<VectorXd> y_star;
  int rank_star = 0;
};

/// Closed-form dual certificate record (diag-constrained families).
struct CertificateRecord {
  VectorXd y_star;
  bool valid = false;          // Z* PSD up to the numerical slop
  double lambda_min = 0;       // lambda_n(Z*)
  double lambda_second = 0;    // lambda_{n-1}(Z*)
  double z_op_norm = 0;
};

struct Instance {
  StandardFormSDP sdp;
  std::optional<InstanceTruth> truth;
  std::optional<VectorXd> signal_z;
  std::optional<LowRankSignal> signal_lowrank;
  std::optional<CertificateRecord> certificate;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  explicit Instance(StandardFormSDP s) : sdp(std::move(s)) {}
};

namespace detail {

inline SparseSym dense_as_sparse(const MatrixXd& a) {
  SparseSym s(static_cast<int>(a.rows()));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i; j < a.cols(); ++j)
      if (a(i, j) != 0.0) s.add(i, j, a(i, j));
  return s;
}

inline std::vector<SparseSym> diag_constraints(int n) {
  std::vector<SparseSym> cons;
  cons.reserve(n);
  for (int i = 0; i < n; ++i) {
    SparseSym a(n);
    a.add(i, i, 1.0);
    cons.push_back(std::move(a));
  }
  return cons;
}

// Certificate for diag-constrained instances with cost C = -Y and planted z:
// y* = -ddiag(Y z z^T), Z* = ddiag(Y z z^T) - Y.
inline CertificateRecord diag_certificate(const MatrixXd& y_obs, const VectorXd& z) {
  const int n = static_cast<int>(z.size());
  VectorXd yz = y_obs * z;
  CertificateRecord cert;
  cert.y_star = VectorXd(n);
  MatrixXd zmat = -y_obs;
  for (int i = 0; i < n; ++i) {
    cert.y_star(i) = -yz(i) * z(i);
    zmat(i, i) += yz(i) * z(i);
  }
  EigDecomp ed = eig_sym(SymMatrix::from_dense(zmat));
  cert.lambda_min = ed.values(n - 1);
  cert.lambda_second = (n >= 2) ? ed.values(n - 2) : ed.values(n - 1);
  cert.z_op_norm = std::max(std::abs(ed.values(0)), std::abs(ed.values(n - 1)));
  cert.valid = cert.lambda_min >= -1e-8 * cert.z_op_norm;
  return cert;
}

}  // namespace detail

/// Instance whose unique solution is the given PSD matrix: objective tr(X),
/// constraints <v_i v_j^T (sym), X> pinned to the spectrum on the range of X.
inline Instance simple_from_psd(const SymMatrix& x_psd, double eps = 1e-6) {
  EigDecomp ed = eig_sym(x_psd);
  const int n = x_psd.n();
  if (ed.values(n - 1) < -eps)
    throw InvalidInput("simple_from_psd: input is significantly indefinite");
  VectorXd clipped = ed.values.cwiseMax(0.0);
  const int r = rank_eps(clipped, eps).rank;
  if (r == 0) throw InvalidInput("simple_from_psd: input is numerically zero");

  std::vector<SparseSym> cons;
  VectorXd b(r * (r + 1) / 2);
  VectorXd y_star = VectorXd::Zero(r * (r + 1) / 2);
  int k = 0;
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      MatrixXd a = 0.5 * (ed.vectors.col(i) * ed.vectors.col(j).transpose() +
                          ed.vectors.col(j) * ed.vectors.col(i).transpose());
      cons.push_back(detail::dense_as_sparse(a));
      b(k) = (i == j) ? ed.values(i) : 0.0;
      y_star(k) = (i == j) ? 1.0 : 0.0;
      ++k;
    }
  }

  MatrixXd x_clean = ed.vectors.leftCols(r) * ed.values.head(r).asDiagonal() *
                     ed.vectors.leftCols(r).transpose();
  Instance inst(StandardFormSDP(SymMatrix::identity(n), std::move(cons), std::move(b),
                                "simple-from-psd"));
  inst.truth = InstanceTruth{SymMatrix::symmetrized(x_clean), y_star, r};
  inst.params["n"] = n;
  inst.params["rank"] = r;
  return inst;
}

/// Random rank-r PSD matrix with Haar-distributed eigenvectors.
inline SymMatrix random_psd(int n, int r, std::uint64_t seed) {
  if (r < 1 || r > n) throw InvalidInput("random_psd: rank out of range");
  CounterRng rng(seed);
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  VectorXd vals = VectorXd::Zero(n);
  for (int i = 0; i < r; ++i) vals(i) = 0.5 + 2.0 * rng.uniform();
  std::sort(vals.data(), vals.data() + r, std::greater<double>());
  return SymMatrix::symmetrized(q.leftCols(r) * vals.head(r).asDiagonal() *
                                q.leftCols(r).transpose());
}

/// MaxCut relaxation of a weighted graph: C = -Laplacian, diag(X) = 1.
inline Instance maxcut(const Graph& g) {
  const int n = g.n_vertices;
  if (n < 1) throw InvalidInput("maxcut: empty graph");
  MatrixXd lap = MatrixXd::Zero(n, n);
  for (const auto& e : g.edges) {
    if (e.i == e.j) throw InvalidInput("maxcut: self-loop");
    int i = e.i - 1, j = e.j - 1;
    lap(i, j) -= e.w;
    lap(j, i) -= e.w;
    lap(i, i) += e.w;
    lap(j, j) += e.w;
  }
  Instance inst(StandardFormSDP(SymMatrix::from_dense(-lap), detail::diag_constraints(n),
                                VectorXd::Ones(n), "maxcut"));
  inst.params["n"] = n;
  return inst;
}

/// Block_s(X) = I_d for S diagonal d x d blocks, d in {1,2,3}.
inline Instance orthogonal_cut(int S, int d, const SymMatrix& C) {
  if (d < 1 || d > 3) throw InvalidInput("orthogonal_cut: d must be 1, 2, or 3");
  if (S < 1) throw InvalidInput("orthogonal_cut: S must be >= 1");
  if (C.n() != S * d) throw InvalidInput("orthogonal_cut: cost dimension != S*d");
  const int n = S * d;
  std::vector<SparseSym> cons;
  std::vector<double> rhs;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < d; ++a)
      for (int b2 = a; b2 < d; ++b2) {
        SparseSym m(n);
        m.add(s * d + a, s * d + b2, a == b2 ? 1.0 : 0.5);
        cons.push_back(std::move(m));
        rhs.push_back(a == b2 ? 1.0 : 0.0);
      }
  Instance inst(StandardFormSDP(C, std::move(cons),
                                Eigen::Map<VectorXd>(rhs.data(), rhs.size()), "ocut"));
  inst.params["S"] = S;
  inst.params["d"] = d;
  return inst;
}

/// sum_{k in S_i} X_kk = 1 over a disjoint partition of the index set.
inline Instance product_sdp(const std::vector<std::vector<int>>& partition, const SymMatrix& C) {
  const int n = C.n();
  std::vector<char> seen(n, 0);
  if (partition.empty()) throw InvalidInput("product_sdp: empty partition");
  std::vector<SparseSym> cons;
  for (const auto& group : partition) {
    if (group.empty()) throw InvalidInput("product_sdp: empty group");
    SparseSym a(n);
    for (int k : group) {
      if (k < 0 || k >= n || seen[k]) throw InvalidInput("product_sdp: overlap or out of range");
      seen[k] = 1;
      a.add(k, k, 1.0);
    }
    cons.push_back(std::move(a));
  }
  for (int k = 0; k < n; ++k)
    if (!seen[k]) throw InvalidInput("product_sdp: partition does not cover all indices");
  Instance inst(StandardFormSDP(C, std::move(cons),
                                VectorXd::Ones(static_cast<int>(partition.size())), "product"));
  inst.params["groups"] = static_cast<double>(partition.size());
  return inst;
}

/// Observation Y = z z^T + gamma W with W symmetric, zero diagonal, iid
/// standard normal above it. Cost is -Y over the diag(X)=1 constraints.
inline Instance z2_sync(int n, double gamma, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("z2_sync: n must be >= 2");
  CounterRng rng(seed);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.pm_one();
  MatrixXd w = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double g = rng.normal();
      w(i, j) = g;
      w(j, i) = g;
    }
  MatrixXd y_obs = z * z.transpose() + gamma * w;
  Instance inst(StandardFormSDP(SymMatrix::from_dense(-y_obs), detail::diag_constraints(n),
                                VectorXd::Ones(n), "z2sync"));
  inst.signal_z = z;
  inst.seed = seed;
  inst.params["n"] = n;
  inst.params["gamma"] = gamma;
  inst.certificate = detail::diag_certificate(y_obs, z);
  if (inst.certificate->valid)
    inst.truth = InstanceTruth{SymMatrix::from_dense(z * z.transpose()),
                               inst.certificate->y_star, 1};
  return inst;
}

struct SbmPair {
  Instance plain;     // cost A - (p+q)/2 J, folded to min form
  Instance rescaled;  // cost scaled by 2/(p-q)
  double lambda_pq = 0;
};

/// Balanced two-community stochastic block model with the diagonal of the
/// adjacency set to (p-q)/2. Both the plain and the rescaled instances are
/// returned; the closed-form certificate lives on the rescaled cost.
inline SbmPair sbm(int n, double p, double q, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw InvalidInput("sbm: n must be even and >= 2");
  if (!(0 <= q && q < p && p <= 1)) throw InvalidInput("sbm: need 0 <= q < p <= 1");
  CounterRng rng(seed);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = (i < n / 2) ? 1.0 : -1.0;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(i + 1));
    std::swap(z(i), z(j));
  }
  MatrixXd a = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = (p - q) / 2.0;
    for (int j = i + 1; j < n; ++j) {
      double prob = (z(i) == z(j)) ? p : q;
      double v = rng.bernoulli(prob) ? 1.0 : 0.0;
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  MatrixXd jmat = MatrixXd::Ones(n, n) - MatrixXd::Identity(n, n);
  MatrixXd cost_max = a - 0.5 * (p + q) * jmat;   // maximize <cost_max, X>
  MatrixXd rescaled = (2.0 / (p - q)) * cost_max;  // ~ zz^T + noise

  SbmPair out{
      Instance(StandardFormSDP(SymMatrix::from_dense(-cost_max), detail::diag_constraints(n),
                               VectorXd::Ones(n), "sbm")),
      Instance(StandardFormSDP(SymMatrix::from_dense(-rescaled), detail::diag_constraints(n),
                               VectorXd::Ones(n), "sbm-rescaled"))};
  out.lambda_pq = (p - q) / std::sqrt(2.0 * (p + q)) * std::sqrt(static_cast<double>(n));

  for (Instance* inst : {&out.plain, &out.rescaled}) {
    inst->signal_z = z;
    inst->seed = seed;
    inst->params["n"] = n;
    inst->params["p"] = p;
    inst->params["q"] = q;
    inst->params["lambda_pq"] = out.lambda_pq;
  }
  out.rescaled.certificate = detail::diag_certificate(rescaled, z);
  CertificateRecord plain_cert = detail::diag_certificate(cost_max, z);
  out.plain.certificate = plain_cert;
  if (out.rescaled.certificate->valid) {
    out.rescaled.truth =
        InstanceTruth{SymMatrix::from_dense(z * z.transpose()), out.rescaled.certificate->y_star, 1};
    out.plain.truth =
        InstanceTruth{SymMatrix::from_dense(z * z.transpose()), plain_cert.y_star, 1};
  }
  return out;
}

/// (p, q) on the line p + q = 1 achieving a given signal strength.
inline std::pair<double, double> sbm_params_for_lambda(int n, double lambda) {
  double diff = lambda * std::sqrt(2.0 / static_cast<double>(n));
  if (diff <= 0 || diff >= 1) throw InvalidInput("sbm_params_for_lambda: lambda out of range");
  return {0.5 + diff / 2.0, 0.5 - diff / 2.0};
}

inline SymMatrix random_sym(int n, CounterRng& rng) {
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double g = rng.normal();
      m(i, j) = g;
      m(j, i) = g;
    }
  return SymMatrix::from_dense(m);
}

}  // namespace sdpcert
