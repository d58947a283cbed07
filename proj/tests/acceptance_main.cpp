// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria. An optional argv[1] selects a single criterion.
//
// Criterion 1 runs against the Gset benchmark files when they are present
// (directory from SDPCERT_GSET_DIR, default data/gset, files named G1..G20 or
// G1.txt..); otherwise it falls back to the documented small mode on random
// graphs with structural checks only.

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdpcert/sdpcert.hpp"

using namespace sdpcert;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << detail
            << "  [" << std::fixed << std::setprecision(1) << seconds << "s]\n";
  std::cout.flush();
  if (!pass) ++failures;
}

template <typename Fn>
void run_criterion(int id, const std::string& name, Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, pass, detail, secs);
}

struct GsetRow {
  const char* name;
  int rank_p, rank_d;
  double kappa_az, kappa_ax;
};

// Reference values for the 800-vertex benchmark graphs.
const GsetRow kGsetRows[] = {
    {"G1", 13, 787, 4.083, 2.026},  {"G2", 13, 787, 4.123, 1.901},
    {"G3", 14, 786, 4.413, 2.062},  {"G4", 14, 786, 4.527, 2.419},
    {"G5", 12, 788, 3.841, 2.055},  {"G6", 13, 787, 4.149, 1.935},
    {"G7", 12, 788, 3.84, 2.085},   {"G8", 12, 788, 3.84, 2.331},
    {"G9", 12, 788, 3.845, 2.086},  {"G10", 12, 788, 3.777, 1.929},
    {"G11", 6, 794, 9.478, 2.619},  {"G12", 8, 792, 9.876, 2.445},
    {"G13", 8, 792, 7.161, 2.177},  {"G14", 13, 787, 4.525, 2.222},
    {"G15", 13, 787, 4.523, 2.237}, {"G16", 14, 786, 4.918, 2.059},
    {"G17", 13, 787, 4.521, 2.199}, {"G18", 10, 790, 3.932, 1.915},
    {"G19", 9, 791, 3.51, 2.149},   {"G20", 9, 791, 3.502, 2.246},
};

std::string gset_path(const std::string& dir, const std::string& name) {
  for (const std::string cand : {dir + "/" + name, dir + "/" + name + ".txt"}) {
    std::ifstream f(cand);
    if (f) return cand;
  }
  return "";
}

bool criterion1(std::string& detail) {
  const char* env = std::getenv("SDPCERT_GSET_DIR");
  std::string dir = env ? env : "data/gset";
  if (!gset_path(dir, "G1").empty()) {
    std::ostringstream os;
    bool all = true;
    for (const GsetRow& row : kGsetRows) {
      std::string path = gset_path(dir, row.name);
      if (path.empty()) {
        os << row.name << ": file missing; ";
        all = false;
        continue;
      }
      Instance inst = maxcut(parse_gset(path));
      SolverConfig cfg;
      cfg.tol_feas = 1e-6;
      cfg.tol_gap = 1e-3;
      SolverSolution sol = solve(inst.sdp, cfg);
      SimplicityReport rep = certify(inst.sdp, sol);
      bool ranks = rep.rank_p == row.rank_p && rep.rank_d == row.rank_d &&
                   rep.rank_p + rep.rank_d == 800;
      bool kz = rep.kappa_AZ && std::abs(*rep.kappa_AZ - row.kappa_az) <= 0.25 * row.kappa_az;
      bool kx = rep.kappa_AX && std::abs(*rep.kappa_AX - row.kappa_ax) <= 0.25 * row.kappa_ax;
      if (!(ranks && kz && kx)) all = false;
      os << row.name << (ranks && kz && kx ? " ok" : " MISMATCH") << " (" << rep.rank_p << "/"
         << rep.rank_d << "); ";
    }
    detail = os.str();
    return all;
  }

  // Small mode: random graphs, structural checks only, budget 2 min each.
  std::ostringstream os;
  os << "gset files not found under '" << dir << "', running small mode; ";
  bool all = true;
  struct Cfg {
    int n;
    double density;
    std::uint64_t seed;
  };
  for (Cfg c : {Cfg{60, 0.15, 3}, Cfg{100, 0.08, 5}, Cfg{150, 0.05, 7}}) {
    auto t0 = std::chrono::steady_clock::now();
    Instance inst = maxcut(random_graph(c.n, c.density, c.seed));
    SolverConfig cfg;
    cfg.tol_feas = 1e-7;
    cfg.tol_gap = 1e-5;
    SolverSolution sol = solve(inst.sdp, cfg);
    SimplicityReport rep = certify(inst.sdp, sol);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = rep.flags.strict_complementarity && rep.flags.surjective &&
              rep.flags.strong_duality && rep.flags.primal_unique && rep.flags.dual_unique &&
              rep.flags.simple && secs <= 120.0;
    if (!ok) all = false;
    os << "n=" << c.n << (ok ? " simple" : " NOT-SIMPLE") << " rank_p=" << rep.rank_p << " ("
       << std::fixed << std::setprecision(1) << secs << "s); ";
  }
  detail = os.str();
  return all;
}

bool criterion2(std::string& detail) {
  const int trials = 100;
  int simple_ok = 0, x_ok = 0, y_ok = 0;
  for (int t = 0; t < trials; ++t) {
    CounterRng pick(CounterRng::derive(20250, t));
    int n = 4 + static_cast<int>(pick.uniform_int(9));  // 4..12
    int r = 1 + static_cast<int>(pick.uniform_int(std::min(n - 1, 6)));
    Instance inst = simple_from_psd(random_psd(n, r, CounterRng::derive(999, t)));
    SolverSolution sol = solve(inst.sdp);
    if ((sol.X.mat() - inst.truth->X_star.mat()).norm() <= 1e-5) ++x_ok;
    if ((sol.y - *inst.truth->y_star).norm() <= 1e-4) ++y_ok;
    SimplicityReport rep = certify(inst.sdp, sol);
    if (rep.flags.simple) ++simple_ok;
  }
  std::ostringstream os;
  os << "X within 1e-5: " << x_ok << "/100, simple: " << simple_ok << "/100, y within 1e-4: "
     << y_ok << "/100";
  detail = os.str();
  return x_ok == trials && simple_ok >= 99 && y_ok == trials;
}

bool criterion3(std::string& detail) {
  const int n = 200;
  const double gamma = std::sqrt(n / (3.0 * std::log(double(n))));
  int valid = 0, algebra_ok = 0;
  for (int t = 0; t < 20; ++t) {
    Instance inst = z2_sync(n, gamma, CounterRng::derive(31337, t));
    const CertificateRecord& cert = *inst.certificate;
    if (!(cert.valid && cert.lambda_second > 0)) continue;
    ++valid;
    SymMatrix zs = slack(inst.sdp, cert.y_star);
    bool kernel = (zs.mat() * (*inst.signal_z)).norm() <= 1e-10 * n;
    EigDecomp ed = eig_sym(zs);
    bool comp = 1 + rank_eps(ed.values, 1e-6).rank == n;
    if (kernel && comp) ++algebra_ok;
  }
  std::ostringstream os;
  os << "valid certificates: " << valid << "/20, kernel+complementarity in valid trials: "
     << algebra_ok << "/" << valid;
  detail = os.str();
  return valid >= 18 && algebra_ok == valid;
}

bool criterion4(std::string& detail) {
  const int n = 200;
  const double lambda = 3.0 * std::sqrt(std::log(double(n)));
  auto [p, q] = sbm_params_for_lambda(n, lambda);
  int valid = 0;
  std::vector<Instance> solvable;
  for (int t = 0; t < 20; ++t) {
    SbmPair pair = sbm(n, p, q, CounterRng::derive(60001, t));
    if (pair.rescaled.certificate->valid) {
      ++valid;
      if (solvable.size() < 5) solvable.push_back(std::move(pair.rescaled));
    }
  }
  int recovered = 0;
  for (const Instance& inst : solvable) {
    SolverConfig cfg;
    cfg.tol_feas = 1e-5;
    cfg.tol_gap = 1e-3;
    cfg.max_iter = 20000;
    SolverSolution sol = solve(inst.sdp, cfg);
    const VectorXd& z = *inst.signal_z;
    MatrixXd want = z * z.transpose();
    if ((sol.X.mat() - want).norm() <= 1e-3 * want.norm()) ++recovered;
  }
  std::ostringstream os;
  os << "valid certificates: " << valid << "/20, exact recovery: " << recovered << "/"
     << solvable.size();
  detail = os.str();
  return valid >= 16 && recovered == static_cast<int>(solvable.size()) && solvable.size() == 5;
}

bool criterion5(std::string& detail) {
  std::ostringstream os;
  // (a) solver vs closed-form lifted solution at n=30.
  const int n = 30, r = 2;
  const double p = std::min(1.0, 3.0 * r * std::log(double(n)) / n);
  int match = 0, nec_false = 0;
  for (int t = 0; t < 10; ++t) {
    McProblem prob = mc_generate(n, n, r, p, CounterRng::derive(4242, t));
    Instance inst = mc_lift(prob);
    if (!dual_uniqueness_necessary(inst.sdp.n, inst.sdp.m, r)) ++nec_false;
    SolverConfig cfg;
    cfg.tol_feas = 1e-7;
    cfg.tol_gap = 1e-5;
    SolverSolution sol = solve(inst.sdp, cfg);
    double rel = (sol.X.mat() - inst.truth->X_star.mat()).norm() /
                 std::max(1.0, inst.truth->X_star.mat().norm());
    if (rel <= 1e-4) ++match;
  }
  os << "lifted solve matches truth: " << match << "/10, counting bound false: " << nec_false
     << "/10; ";
  bool part_a = match >= 7 && nec_false == 10;

  // (b) dual multiplicity at the same scale.
  McProblem prob = mc_generate(n, n, r, p, CounterRng::derive(4242, 0));
  McDualDemo demo = dual_multiplicity_demo(prob, {}, 17);
  os << "multiplicity=" << (demo.multiplicity ? "true" : "false") << " distance=" << demo.distance
     << "; ";
  bool part_b = demo.multiplicity;

  // (c) golfing certificate at n=60 with generous p. The batch constant is
  // run at its desk-scale calibration (the asymptotic default oversplits the
  // observations at n=60 and the tangent iteration stops contracting).
  const int ng = 60, rg = 2;
  const double pg = 0.9;
  int checks_pass = 0, lambda_ok = 0;
  for (int t = 0; t < 10; ++t) {
    McProblem gp = mc_generate(ng, ng, rg, pg, CounterRng::derive(777001, t));
    try {
      GolfingCertificate cert = golfing_certificate(gp, 1.0, CounterRng::derive(88, t));
      if (cert.checks.pomega_residual != 0.0) continue;
      if (cert.checks.pit_residual <= 1e-6 && cert.checks.opnorm_bound_ok) {
        ++checks_pass;
        LiftedDualReport rep = lifted_dual_from_Y(gp, cert.Y, cert.state.omega_union);
        if (rep.lambda_threshold >= 3.0 / 8.0 - 1e-6) ++lambda_ok;
      }
    } catch (const CertificateFailure&) {
    }
  }
  os << "golfing checks pass: " << checks_pass << "/10, 3/8 bound in passing trials: " << lambda_ok
     << "/" << checks_pass;
  bool part_c = checks_pass >= 8 && lambda_ok == checks_pass;
  detail = os.str();
  return part_a && part_b && part_c;
}

bool criterion6(std::string& detail) {
  const int n = 30, r = 9;
  CounterRng rng(515151);
  SymMatrix c = random_sym(n, rng);
  Graph g;
  g.n_vertices = n;
  Instance frame = maxcut(g);
  StandardFormSDP sdp(c, frame.sdp.constraints, frame.sdp.b, "maxcut-random-cost");
  SolverSolution sol = solve(sdp);
  Manifold man = *detect_manifold(sdp);
  auto results = bm_multistart(sdp, man, r, 10, 2026);
  int obj_ok = 0, sosp_ok = 0;
  for (const auto& res : results) {
    if (std::abs(res.objective - sol.primal_obj) <= 1e-4 * (1 + std::abs(sol.primal_obj)))
      ++obj_ok;
    SospCheck chk = check_sosp(sdp, man, res.F, BmConfig{}.grad_tol(c.mat()),
                               BmConfig{}.hess_tol(c.mat()));
    if (chk.sosp) ++sosp_ok;
  }

  // Gradient and Hessian finite-difference spot suites (retraction curves).
  int fd_fail = 0;
  for (int t = 0; t < 25; ++t) {
    MatrixXd f = manifold_random_point(man, 3, rng);
    MatrixXd grad = 2.0 * (multiplier_matrix(man, c.mat(), f) * f);
    MatrixXd v(n, 3);
    for (int i = 0; i < v.size(); ++i) v(i) = rng.normal();
    v = manifold_project_tangent(man, f, v);
    v /= v.norm();
    double h = 1e-5;
    double fp = bm_objective(c.mat(), manifold_retract(man, f, h * v));
    double fm = bm_objective(c.mat(), manifold_retract(man, f, -h * v));
    double fd = (fp - fm) / (2 * h);
    double an = grad.cwiseProduct(v).sum();
    if (std::abs(fd - an) > 1e-5 * std::max(1.0, std::abs(an)) + 1e-7) ++fd_fail;
    double f0 = bm_objective(c.mat(), f);
    double hh = 1e-4;
    double fd2 = (bm_objective(c.mat(), manifold_retract(man, f, hh * v)) - 2 * f0 +
                  bm_objective(c.mat(), manifold_retract(man, f, -hh * v))) /
                 (hh * hh);
    double quad = 2.0 * v.cwiseProduct(multiplier_matrix(man, c.mat(), f) * v).sum();
    if (std::abs(fd2 - quad) > 1e-3 * std::max(1.0, std::abs(quad)) + 2e-3) ++fd_fail;
  }
  std::ostringstream os;
  os << "objective match: " << obj_ok << "/10, sosp: " << sosp_ok
     << "/10, fd mismatches: " << fd_fail << "/50";
  detail = os.str();
  return obj_ok == 10 && sosp_ok == 10 && fd_fail == 0;
}

bool criterion7(std::string& detail) {
  std::ostringstream os;
  bool all = true;
  CounterRng rng(456);

  {  // adjoint identity + svec isometry
    Instance inst = z2_sync(14, 0.8, 5);
    bool ok = true;
    for (int t = 0; t < 100; ++t) {
      SymMatrix h = random_sym(14, rng);
      VectorXd y(14);
      for (int i = 0; i < 14; ++i) y(i) = rng.normal();
      SymMatrix hn = SymMatrix::from_dense(h.mat() / h.mat().norm());
      VectorXd yn = y / y.norm();
      if (std::abs(apply_A(inst.sdp, hn).dot(yn) -
                   hn.mat().cwiseProduct(apply_Aadj(inst.sdp, yn).mat()).sum()) > 1e-12)
        ok = false;
      SymMatrix a = random_sym(9, rng);
      SymMatrix b = random_sym(9, rng);
      if (std::abs(svec(a).data.dot(svec(b).data) - a.mat().cwiseProduct(b.mat()).sum()) >
          1e-12 * std::max(1.0, a.mat().norm() * b.mat().norm()))
        ok = false;
      if ((smat(svec(a)).mat() - a.mat()).norm() > 1e-12 * std::max(1.0, a.mat().norm()))
        ok = false;
    }
    os << "adjoint+svec: " << (ok ? "ok" : "FAIL") << "; ";
    all = all && ok;
  }

  {  // projector idempotence (completion tangent spaces)
    McProblem prob = mc_generate(10, 8, 2, 0.5, 3);
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      MatrixXd a(10, 8);
      for (int i = 0; i < a.size(); ++i) a(i) = rng.normal();
      MatrixXd ta = project_tangent_lr(a, prob.U, prob.V);
      MatrixXd pa = project_omega(a, prob.omega);
      if ((project_tangent_lr(ta, prob.U, prob.V) - ta).norm() > 1e-12 * std::max(1.0, a.norm()))
        ok = false;
      if ((project_omega(pa, prob.omega) - pa).norm() > 0) ok = false;
      if ((ta + project_tangent_perp_lr(a, prob.U, prob.V) - a).norm() >
          1e-12 * std::max(1.0, a.norm()))
        ok = false;
    }
    os << "projectors: " << (ok ? "ok" : "FAIL") << "; ";
    all = all && ok;
  }

  {  // manifold non-drift over 1e5 retractions
    Graph g;
    g.n_vertices = 6;
    Manifold man = *detect_manifold(maxcut(g).sdp);
    MatrixXd f = manifold_random_point(man, 2, rng);
    for (int k = 0; k < 100000; ++k) {
      MatrixXd v(6, 2);
      for (int i = 0; i < v.size(); ++i) v(i) = rng.normal();
      f = manifold_retract(man, f, 0.05 * manifold_project_tangent(man, f, v));
    }
    bool ok = manifold_violation(man, f) <= 1e-12 * 6;
    os << "non-drift: " << (ok ? "ok" : "FAIL") << "; ";
    all = all && ok;
  }

  {  // weak duality on iterates once feasibility is reached
    Instance inst = simple_from_psd(random_psd(6, 2, 11));
    SolverConfig cfg;
    bool feas = false;
    double worst = 0;
    cfg.on_iterate = [&](const IterateInfo& it) {
      if (it.primal_infeas <= cfg.tol_feas && it.dual_infeas <= cfg.tol_feas) feas = true;
      if (feas) worst = std::min(worst, it.primal_obj - it.dual_obj);
    };
    solve(inst.sdp, cfg);
    bool ok = worst >= -10 * cfg.tol_feas;
    os << "weak-duality: " << (ok ? "ok" : "FAIL") << "; ";
    all = all && ok;
  }

  {  // determinism by seed across generators, solver, factored solver
    Instance a = z2_sync(12, 0.6, 77);
    Instance b = z2_sync(12, 0.6, 77);
    bool ok = (a.sdp.C.mat() - b.sdp.C.mat()).norm() == 0.0;
    SolverSolution s1 = solve(a.sdp);
    SolverSolution s2 = solve(b.sdp);
    ok = ok && (s1.X.mat() - s2.X.mat()).norm() == 0.0 && (s1.y - s2.y).norm() == 0.0;
    Manifold man = *detect_manifold(a.sdp);
    BmResult r1 = bm_solve(a.sdp, man, 2, std::nullopt, 5);
    BmResult r2 = bm_solve(b.sdp, man, 2, std::nullopt, 5);
    ok = ok && r1.objective == r2.objective && (r1.F - r2.F).norm() == 0.0;
    os << "determinism: " << (ok ? "ok" : "FAIL");
    all = all && ok;
  }

  detail = os.str();
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = (argc > 1) ? std::atoi(argv[1]) : 0;
  auto want = [&](int id) { return only == 0 || only == id; };

  if (want(1)) run_criterion(1, "benchmark graph verification", criterion1);
  if (want(2)) run_criterion(2, "PSD-pinning suite", criterion2);
  if (want(3)) run_criterion(3, "sign synchronization certificates", criterion3);
  if (want(4)) run_criterion(4, "block model certificates and recovery", criterion4);
  if (want(5)) run_criterion(5, "matrix completion pipeline", criterion5);
  if (want(6)) run_criterion(6, "factored solver correctness", criterion6);
  if (want(7)) run_criterion(7, "property suites", criterion7);

  if (failures == 0) std::cout << "all criteria passed\n";
  return failures;
}
