#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "sdpcert/instances.hpp"
#include "sdpcert/solver.hpp"

using namespace sdpcert;

namespace {

void write_tmp(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("simple_from_psd on diag(2,1,0)", "[instances]") {
  SymMatrix x(3);
  x.set(0, 0, 2.0);
  x.set(1, 1, 1.0);
  Instance inst = simple_from_psd(x);
  CHECK(inst.sdp.m == 3);
  REQUIRE(inst.truth.has_value());
  CHECK((inst.truth->X_star.mat() - x.mat()).norm() <= 1e-12);
  Residuals r = residuals(inst.sdp, inst.truth->X_star, *inst.truth->y_star);
  CHECK(r.max() <= 1e-10);
}

TEST_CASE("simple_from_psd on the identity pins every pair", "[instances]") {
  const int n = 4;
  Instance inst = simple_from_psd(SymMatrix::identity(n));
  CHECK(inst.sdp.m == n * (n + 1) / 2);
  CHECK((inst.truth->X_star.mat() - MatrixXd::Identity(n, n)).norm() <= 1e-12);
}

TEST_CASE("simple_from_psd slack of a rank-1 matrix", "[instances]") {
  CounterRng rng(8);
  const int n = 5;
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.pm_one();
  Instance inst = simple_from_psd(SymMatrix::symmetrized(z * z.transpose()));
  REQUIRE(inst.truth.has_value());
  SymMatrix zslack = slack(inst.sdp, *inst.truth->y_star);
  MatrixXd want = MatrixXd::Identity(n, n) - (z * z.transpose()) / z.squaredNorm();
  CHECK((zslack.mat() - want).norm() <= 1e-10);
  EigDecomp ed = eig_sym(zslack);
  CHECK(rank_eps(ed.values, 1e-6).rank == n - 1);
}

TEST_CASE("simple_from_psd rejects indefinite input", "[instances]") {
  SymMatrix x(2);
  x.set(0, 0, 1.0);
  x.set(1, 1, -0.5);
  CHECK_THROWS_AS(simple_from_psd(x), InvalidInput);
}

TEST_CASE("maxcut of a single edge matches the 2x2 oracle via the solver", "[instances]") {
  Graph g;
  g.n_vertices = 2;
  g.edges.push_back({1, 2, 1.0});
  Instance inst = maxcut(g);
  MatrixXd expect_c(2, 2);
  expect_c << -1, 1, 1, -1;
  CHECK((inst.sdp.C.mat() - expect_c).norm() == 0.0);
  auto oracle = oracles::maxcut_2x2(inst.sdp.C.mat());
  SolverSolution sol = solve(inst.sdp);
  CHECK(sol.primal_obj == Catch::Approx(oracle.opt).margin(1e-6));
  CHECK(oracle.opt == Catch::Approx(-4.0));
  CHECK(std::abs(sol.X(0, 1) - oracle.x12) <= 1e-6);
}

TEST_CASE("maxcut of an empty graph is solved by the identity", "[instances]") {
  Graph g;
  g.n_vertices = 3;
  Instance inst = maxcut(g);
  CHECK(inst.sdp.C.mat().norm() == 0.0);
  SymMatrix x = SymMatrix::identity(3);
  CHECK(residuals(inst.sdp, x, VectorXd::Zero(3)).max() == 0.0);
}

TEST_CASE("maxcut rejects self-loops", "[instances]") {
  Graph g;
  g.n_vertices = 2;
  g.edges.push_back({1, 1, 1.0});
  CHECK_THROWS_AS(maxcut(g), InvalidInput);
}

TEST_CASE("orthogonal_cut block constraints and rhs packing", "[instances]") {
  const int S = 2, d = 2;
  Instance inst = orthogonal_cut(S, d, SymMatrix(S * d));
  CHECK(inst.sdp.m == S * d * (d + 1) / 2);
  // apply_A(I) = b, the packed identities.
  VectorXd got = apply_A(inst.sdp, SymMatrix::identity(S * d));
  CHECK((got - inst.sdp.b).norm() == 0.0);
  // X = I is feasible and optimal for C = 0.
  CHECK(residuals(inst.sdp, SymMatrix::identity(S * d), VectorXd::Zero(inst.sdp.m)).max() ==
        0.0);
}

TEST_CASE("orthogonal_cut with d=1 reduces to maxcut constraints", "[instances]") {
  Instance ocut = orthogonal_cut(3, 1, SymMatrix(3));
  Graph g;
  g.n_vertices = 3;
  Instance mcut = maxcut(g);
  REQUIRE(ocut.sdp.m == mcut.sdp.m);
  for (int k = 0; k < ocut.sdp.m; ++k) {
    CHECK((ocut.sdp.constraints[k].dense() - mcut.sdp.constraints[k].dense()).norm() == 0.0);
  }
  CHECK((ocut.sdp.b - mcut.sdp.b).norm() == 0.0);
}

TEST_CASE("orthogonal_cut validates dimensions", "[instances]") {
  CHECK_THROWS_AS(orthogonal_cut(2, 2, SymMatrix(3)), InvalidInput);
  CHECK_THROWS_AS(orthogonal_cut(2, 4, SymMatrix(8)), InvalidInput);
}

TEST_CASE("product_sdp with singletons reduces to maxcut constraints", "[instances]") {
  std::vector<std::vector<int>> part{{0}, {1}, {2}};
  Instance prod = product_sdp(part, SymMatrix(3));
  Graph g;
  g.n_vertices = 3;
  Instance mcut = maxcut(g);
  for (int k = 0; k < 3; ++k)
    CHECK((prod.sdp.constraints[k].dense() - mcut.sdp.constraints[k].dense()).norm() == 0.0);
}

TEST_CASE("product_sdp single group is the trace constraint", "[instances]") {
  std::vector<std::vector<int>> part{{0, 1, 2, 3}};
  Instance prod = product_sdp(part, SymMatrix(4));
  CHECK(prod.sdp.m == 1);
  CHECK(apply_A(prod.sdp, SymMatrix::identity(4))(0) == 4.0);
}

TEST_CASE("product_sdp trace instance solved to the min eigenvalue", "[instances]") {
  // min <C, X> over tr(X) = 1, X PSD equals lambda_min(C).
  const int n = 4;
  MatrixXd c = -MatrixXd::Identity(n, n);
  c(0, 0) = -3.0;  // lambda_min(C) = -3 at e1 e1^T
  std::vector<std::vector<int>> part{{0, 1, 2, 3}};
  Instance prod = product_sdp(part, SymMatrix::from_dense(c));
  SolverSolution sol = solve(prod.sdp);
  EigDecomp ed = eig_sym(prod.sdp.C);
  CHECK(sol.primal_obj == Catch::Approx(ed.values(n - 1)).margin(1e-6));
  MatrixXd e11 = MatrixXd::Zero(n, n);
  e11(0, 0) = 1.0;
  CHECK((sol.X.mat() - e11).norm() <= 1e-5);
}

TEST_CASE("product_sdp validates the partition", "[instances]") {
  CHECK_THROWS_AS(product_sdp({{0, 1}, {1, 2}}, SymMatrix(3)), InvalidInput);  // overlap
  CHECK_THROWS_AS(product_sdp({{0, 1}}, SymMatrix(3)), InvalidInput);          // gap
}

TEST_CASE("z2_sync noiseless certificate", "[instances]") {
  Instance inst = z2_sync(6, 0.0, 3);
  REQUIRE(inst.certificate.has_value());
  CHECK(inst.certificate->valid);
  CHECK(inst.certificate->lambda_second == Catch::Approx(6.0));  // Z* = nI - zz^T
  REQUIRE(inst.truth.has_value());
  CHECK(residuals(inst.sdp, inst.truth->X_star, *inst.truth->y_star).max() <= 1e-10);
}

TEST_CASE("z2_sync slack annihilates the signal exactly", "[instances][property]") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    Instance inst = z2_sync(40, 1.5, seed);
    REQUIRE(inst.signal_z.has_value());
    REQUIRE(inst.certificate.has_value());
    SymMatrix zslack = slack(inst.sdp, inst.certificate->y_star);
    VectorXd resid = zslack.mat() * (*inst.signal_z);
    CHECK(resid.norm() <= 1e-10 * inst.sdp.n);
  }
}

TEST_CASE("generated instances pass check_surjective", "[instances][property]") {
  CHECK(check_surjective(z2_sync(12, 0.8, 1).sdp).surjective);
  CHECK(check_surjective(sbm(12, 0.9, 0.1, 2).rescaled.sdp).surjective);
  CHECK(check_surjective(simple_from_psd(random_psd(8, 3, 3)).sdp).surjective);
  CHECK(check_surjective(orthogonal_cut(3, 2, SymMatrix(6)).sdp).surjective);
  CHECK(check_surjective(product_sdp({{0, 1}, {2}}, SymMatrix(3)).sdp).surjective);
}

TEST_CASE("sbm p=1 q=0 gives two planted cliques and a valid certificate", "[instances]") {
  SbmPair pair = sbm(10, 1.0, 0.0, 7);
  REQUIRE(pair.rescaled.certificate.has_value());
  CHECK(pair.rescaled.certificate->valid);
  const VectorXd& z = *pair.rescaled.signal_z;
  // Adjacency (off-diagonal) has an edge exactly within communities.
  const MatrixXd a = -pair.plain.sdp.C.mat() + 0.5 * (1.0 + 0.0) *
                     (MatrixXd::Ones(10, 10) - MatrixXd::Identity(10, 10));
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) CHECK(a(i, j) == (z(i) == z(j) ? 1.0 : 0.0));
}

TEST_CASE("sbm balanced partition and certificate algebra", "[instances][property]") {
  for (std::uint64_t seed : {1ULL, 9ULL, 17ULL}) {
    SbmPair pair = sbm(20, 0.8, 0.2, seed);
    const VectorXd& z = *pair.rescaled.signal_z;
    CHECK(z.sum() == 0.0);  // balanced
    SymMatrix zslack = slack(pair.rescaled.sdp, pair.rescaled.certificate->y_star);
    CHECK((zslack.mat() * z).norm() <= 1e-10 * 20);
    // Plain and rescaled certificates agree up to the (p-q)/2 factor.
    SymMatrix zp = slack(pair.plain.sdp, pair.plain.certificate->y_star);
    CHECK((zp.mat() - 0.5 * (0.8 - 0.2) * zslack.mat()).norm() <= 1e-10);
  }
}

TEST_CASE("sbm parameter validation", "[instances]") {
  CHECK_THROWS_AS(sbm(9, 0.8, 0.2, 1), InvalidInput);   // odd n
  CHECK_THROWS_AS(sbm(10, 0.2, 0.8, 1), InvalidInput);  // q >= p
  CHECK_THROWS_AS(sbm(10, 1.2, 0.1, 1), InvalidInput);  // p > 1
}

TEST_CASE("sbm_params_for_lambda hits the requested signal strength", "[instances]") {
  auto [p, q] = sbm_params_for_lambda(200, 3.0 * std::sqrt(std::log(200.0)));
  double lambda = (p - q) / std::sqrt(2.0 * (p + q)) * std::sqrt(200.0);
  CHECK(lambda == Catch::Approx(3.0 * std::sqrt(std::log(200.0))));
  CHECK(q >= 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("parse_gset reads a tiny file", "[instances]") {
  const std::string path = "tiny_gset_test.txt";
  write_tmp(path, "2 1\n1 2 1\n");
  Graph g = parse_gset(path);
  CHECK(g.n_vertices == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].w == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("parse_gset accepts negative weights", "[instances]") {
  const std::string path = "tiny_gset_neg.txt";
  write_tmp(path, "3 2\n1 2 -1\n2 3 1\n");
  Graph g = parse_gset(path);
  CHECK(g.edges[0].w == -1.0);
  std::remove(path.c_str());
}

TEST_CASE("parse_gset reports malformed lines with their number", "[instances]") {
  const std::string path = "tiny_gset_bad.txt";
  write_tmp(path, "2 2\n1 2 1\n1 x 1\n");
  try {
    parse_gset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
  write_tmp(path, "2 2\n1 2 1\n");
  CHECK_THROWS_AS(parse_gset(path), ParseError);  // fewer edges than declared
  write_tmp(path, "2 1\n1 3 1\n");
  CHECK_THROWS_AS(parse_gset(path), ParseError);  // vertex id out of range
  std::remove(path.c_str());
}

TEST_CASE("generators are deterministic in (params, seed)", "[instances][property]") {
  Instance a = z2_sync(15, 1.2, 99);
  Instance b = z2_sync(15, 1.2, 99);
  CHECK((a.sdp.C.mat() - b.sdp.C.mat()).norm() == 0.0);
  CHECK((*a.signal_z - *b.signal_z).norm() == 0.0);
  SbmPair s1 = sbm(12, 0.7, 0.3, 5);
  SbmPair s2 = sbm(12, 0.7, 0.3, 5);
  CHECK((s1.plain.sdp.C.mat() - s2.plain.sdp.C.mat()).norm() == 0.0);
}
