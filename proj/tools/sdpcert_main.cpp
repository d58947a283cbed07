// Command-line front end: generate instances, solve, certify, run factored
// solves, and drive the matrix-completion experiments. Data goes to files or
// stdout; logs go to stderr. Exit codes: 1 usage/data error, 2 infeasible,
// 3 unbounded, 4 numerical breakdown.

#include <CLI11.hpp>
#include <atomic>
#include <iostream>
#include <thread>

#include "sdpcert/sdpcert.hpp"

using namespace sdpcert;

namespace {

void emit_json(const json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json_file(out_path, j);
}

Instance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

template <typename Fn>
void parallel_indexed(int count, Fn&& fn) {
  unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int k = next.fetch_add(1);
      if (k >= count) return;
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct GenCommon {
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const std::string& family, const GenCommon& common, Instance inst) {
  inst.seed = inst.seed ? inst.seed : common.seed;
  emit_json(instance_to_json(inst), common.out);
  std::cerr << "gen " << family << ": n=" << inst.sdp.n << " m=" << inst.sdp.m;
  if (inst.certificate)
    std::cerr << " certificate_valid=" << (inst.certificate->valid ? "true" : "false");
  std::cerr << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale SDP solving and simplicity certification"};
  app.require_subcommand(1);

  // ---- gen ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  gen->require_subcommand(1);
  GenCommon common;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.seed, "generator seed");
    cmd->add_option("--out", common.out, "output instance JSON path");
  };

  int g_n = 8, g_rank = 2, g_n2 = 0, g_blocks = 2, g_d = 2;
  double g_gamma = 1.0, g_p = -1, g_q = -1, g_lambda = -1, g_density = 0.1;
  std::string g_gset, g_groups = "2,2";
  int g_random_n = 0;

  auto* gpsd = gen->add_subcommand("simple-from-psd", "pin a random PSD matrix");
  gpsd->add_option("--n", g_n, "dimension");
  gpsd->add_option("--rank", g_rank, "rank of the pinned matrix");
  add_common(gpsd);

  auto* gmax = gen->add_subcommand("maxcut", "negative-Laplacian SDP from a graph");
  gmax->add_option("--gset", g_gset, "edge-list file (n m / i j w)");
  gmax->add_option("--random", g_random_n, "random graph vertex count");
  gmax->add_option("--density", g_density, "random graph edge density");
  add_common(gmax);

  auto* gocut = gen->add_subcommand("ocut", "block-identity constraints, random cost");
  gocut->add_option("--blocks", g_blocks, "number of blocks S");
  gocut->add_option("--d", g_d, "block size (1..3)");
  add_common(gocut);

  auto* gprod = gen->add_subcommand("product", "group trace constraints, random cost");
  gprod->add_option("--groups", g_groups, "comma-separated group sizes");
  add_common(gprod);

  auto* gz2 = gen->add_subcommand("z2sync", "planted signs with Gaussian noise");
  gz2->add_option("--n", g_n, "dimension");
  gz2->add_option("--gamma", g_gamma, "noise level");
  add_common(gz2);

  auto* gsbm = gen->add_subcommand("sbm", "two balanced communities");
  gsbm->add_option("--n", g_n, "vertex count (even)");
  gsbm->add_option("--p", g_p, "within-community edge probability");
  gsbm->add_option("--q", g_q, "across-community edge probability");
  gsbm->add_option("--lambda", g_lambda, "signal strength (chooses p,q on p+q=1)");
  bool g_rescaled = false;
  gsbm->add_flag("--rescaled", g_rescaled, "emit the rescaled-cost variant");
  add_common(gsbm);

  auto* gmc = gen->add_subcommand("mc", "lifted matrix-completion SDP");
  gmc->add_option("--n", g_n, "rows");
  gmc->add_option("--n2", g_n2, "columns (default: rows)");
  gmc->add_option("--rank", g_rank, "ground-truth rank");
  gmc->add_option("--p", g_p, "observation probability");
  add_common(gmc);

  // ---- solve ----------------------------------------------------------
  auto* cmd_solve = app.add_subcommand("solve", "solve an instance file");
  std::string solve_in, solve_out;
  SolverConfig scfg;
  cmd_solve->add_option("instance", solve_in, "instance JSON")->required();
  cmd_solve->add_option("--tol", scfg.tol_feas, "feasibility tolerance");
  cmd_solve->add_option("--gap-tol", scfg.tol_gap, "duality-gap tolerance");
  cmd_solve->add_option("--max-iter", scfg.max_iter, "iteration cap");
  cmd_solve->add_option("--alpha", scfg.alpha, "over-relaxation in (0,2)");
  cmd_solve->add_option("--rho", scfg.rho, "initial penalty");
  cmd_solve->add_option("--out", solve_out, "solution JSON path");

  // ---- certify ----------------------------------------------------------
  auto* cmd_cert = app.add_subcommand("certify", "verify simplicity of a solved instance");
  std::string cert_inst, cert_sol, cert_out;
  double cert_eps = 1e-6;
  cmd_cert->add_option("instance", cert_inst, "instance JSON")->required();
  cmd_cert->add_option("solution", cert_sol, "solution JSON")->required();
  cmd_cert->add_option("--eps", cert_eps, "rank threshold");
  cmd_cert->add_option("--out", cert_out, "report JSON path");

  // ---- bm ---------------------------------------------------------------
  auto* cmd_bm = app.add_subcommand("bm", "factored multi-start solve");
  std::string bm_inst, bm_out, bm_sol;
  int bm_r = 2, bm_starts = 1;
  std::uint64_t bm_seed = 0;
  cmd_bm->add_option("instance", bm_inst, "instance JSON")->required();
  cmd_bm->add_option("--r", bm_r, "factor rank")->required();
  cmd_bm->add_option("--starts", bm_starts, "number of random starts");
  cmd_bm->add_option("--seed", bm_seed, "base seed");
  cmd_bm->add_option("--sol", bm_sol, "solution JSON providing a dual bound");
  cmd_bm->add_option("--out", bm_out, "summary JSON path");

  // ---- mc-demo ------------------------------------------------------------
  auto* cmd_demo = app.add_subcommand("mc-demo", "dual multiplicity experiment");
  int demo_n = 50, demo_rank = 2;
  double demo_p = -1;
  std::uint64_t demo_seed = 0;
  std::string demo_out = "mc_demo";
  cmd_demo->add_option("--n", demo_n, "matrix size");
  cmd_demo->add_option("--rank", demo_rank, "ground-truth rank");
  cmd_demo->add_option("--p", demo_p, "observation probability (default 3 r log(n)/n)");
  cmd_demo->add_option("--seed", demo_seed, "seed");
  cmd_demo->add_option("--out", demo_out, "output prefix");

  // ---- mc-cert -------------------------------------------------------------
  auto* cmd_mcert = app.add_subcommand("mc-cert", "iterative dual-certificate construction");
  int mcert_n = 60, mcert_rank = 2, mcert_trials = 1;
  double mcert_p = 0.9, mcert_c0 = 4.0;
  std::uint64_t mcert_seed = 0;
  std::string mcert_out;
  cmd_mcert->add_option("--n", mcert_n, "matrix size");
  cmd_mcert->add_option("--rank", mcert_rank, "ground-truth rank");
  cmd_mcert->add_option("--p", mcert_p, "observation probability");
  cmd_mcert->add_option("--c0", mcert_c0, "batch-count constant");
  cmd_mcert->add_option("--seed", mcert_seed, "base seed");
  cmd_mcert->add_option("--trials", mcert_trials, "number of seeds");
  cmd_mcert->add_option("--out", mcert_out, "checks JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gpsd->parsed())
      return run_gen("simple-from-psd", common,
                     simple_from_psd(random_psd(g_n, g_rank, common.seed)));
    if (gmax->parsed()) {
      if (g_gset.empty() == (g_random_n == 0))
        throw InvalidInput("maxcut: give exactly one of --gset or --random");
      Graph graph = g_gset.empty() ? random_graph(g_random_n, g_density, common.seed)
                                   : parse_gset(g_gset);
      Instance inst = maxcut(graph);
      inst.seed = common.seed;
      return run_gen("maxcut", common, std::move(inst));
    }
    if (gocut->parsed()) {
      CounterRng rng(common.seed);
      Instance inst = orthogonal_cut(g_blocks, g_d, random_sym(g_blocks * g_d, rng));
      inst.seed = common.seed;
      return run_gen("ocut", common, std::move(inst));
    }
    if (gprod->parsed()) {
      std::vector<std::vector<int>> partition;
      int idx = 0;
      std::stringstream ss(g_groups);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        int size = std::stoi(tok);
        if (size < 1) throw InvalidInput("product: group sizes must be positive");
        std::vector<int> group;
        for (int i = 0; i < size; ++i) group.push_back(idx++);
        partition.push_back(std::move(group));
      }
      CounterRng rng(common.seed);
      Instance inst = product_sdp(partition, random_sym(idx, rng));
      inst.seed = common.seed;
      return run_gen("product", common, std::move(inst));
    }
    if (gz2->parsed()) return run_gen("z2sync", common, z2_sync(g_n, g_gamma, common.seed));
    if (gsbm->parsed()) {
      if (g_lambda > 0) std::tie(g_p, g_q) = sbm_params_for_lambda(g_n, g_lambda);
      if (g_p < 0 || g_q < 0) throw InvalidInput("sbm: give --p and --q, or --lambda");
      SbmPair pair = sbm(g_n, g_p, g_q, common.seed);
      return run_gen("sbm", common, g_rescaled ? std::move(pair.rescaled) : std::move(pair.plain));
    }
    if (gmc->parsed()) {
      int n2 = g_n2 > 0 ? g_n2 : g_n;
      double p = g_p > 0 ? g_p : std::min(1.0, 3.0 * g_rank * std::log(double(g_n)) / g_n);
      return run_gen("mc", common, mc_lift(mc_generate(g_n, n2, g_rank, p, common.seed)));
    }

    if (cmd_solve->parsed()) {
      Instance inst = load_instance(solve_in);
      SolverSolution sol = solve(inst.sdp, scfg);
      emit_json(solution_to_json(sol), solve_out);
      std::cerr << "solve: status=" << sol.status << " iterations=" << sol.iterations
                << " primal_obj=" << sol.primal_obj << " max_residual=" << sol.res.max() << "\n";
      return 0;
    }

    if (cmd_cert->parsed()) {
      Instance inst = load_instance(cert_inst);
      SolverSolution sol = solution_from_json(read_json_file(cert_sol), inst.sdp);
      SimplicityReport rep = certify(inst.sdp, sol, cert_eps);
      std::cout << render_report_table(rep, inst.sdp.metadata);
      if (!cert_out.empty()) write_json_file(cert_out, report_to_json(rep));
      return 0;
    }

    if (cmd_bm->parsed()) {
      Instance inst = load_instance(bm_inst);
      auto man = detect_manifold(inst.sdp);
      if (!man) throw InvalidInput("bm: instance family has no supported factored form");
      std::optional<VectorXd> dual_y;
      if (!bm_sol.empty()) {
        SolverSolution s = solution_from_json(read_json_file(bm_sol), inst.sdp);
        dual_y = s.y;
      } else if (inst.certificate && inst.certificate->valid) {
        dual_y = inst.certificate->y_star;
      }
      auto results = bm_multistart(inst.sdp, *man, bm_r, bm_starts, bm_seed, {}, dual_y);
      json starts = json::array();
      bool witness = false;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : results) {
        json row{{"seed", r.seed},         {"objective", r.objective},
                 {"grad_norm", r.grad_norm}, {"hess_min_eig", r.hess_min_eig},
                 {"sosp", r.sosp},           {"iterations", r.iterations},
                 {"status", r.status}};
        row["gap_to_dual"] = r.gap_to_dual ? json(*r.gap_to_dual) : json(nullptr);
        if (r.sosp && r.gap_to_dual &&
            *r.gap_to_dual > 1e-6 * (1 + std::abs(r.objective)))
          witness = true;
        best = std::min(best, r.objective);
        starts.push_back(row);
      }
      json out{{"schema", 1},           {"type", "bm_summary"},
               {"generated_at", utc_timestamp()}, {"r", bm_r},
               {"starts", starts},      {"best_objective", best},
               {"spurious_sosp_witness", witness}};
      emit_json(out, bm_out);
      std::cerr << "bm: starts=" << bm_starts << " best=" << best
                << " spurious_witness=" << (witness ? "true" : "false") << "\n";
      return 0;
    }

    if (cmd_demo->parsed()) {
      double p = demo_p > 0 ? demo_p
                            : std::min(1.0, 3.0 * demo_rank * std::log(double(demo_n)) / demo_n);
      McProblem prob = mc_generate(demo_n, demo_n, demo_rank, p, demo_seed);
      McDualDemo demo = dual_multiplicity_demo(prob, {}, demo_seed);
      write_spectrum_csv(demo_out + "_spectrum_identity.csv", demo.spectrum_identity);
      write_spectrum_csv(demo_out + "_spectrum_gaussian.csv", demo.spectrum_random);
      json rep{{"schema", 1},
               {"type", "mc_dual_demo"},
               {"generated_at", utc_timestamp()},
               {"n", demo_n},
               {"rank", demo_rank},
               {"p", p},
               {"seed", demo_seed},
               {"rank_star", demo.rank_star},
               {"distance", demo.distance},
               {"multiplicity", demo.multiplicity},
               {"necessary_condition_for_unique_dual",
                dual_uniqueness_necessary(2 * demo_n, static_cast<int>(prob.omega.size()),
                                          demo.rank_star)},
               {"solver_status", demo.sol.status}};
      write_json_file(demo_out + "_report.json", rep);
      std::cerr << "mc-demo: multiplicity=" << (demo.multiplicity ? "true" : "false")
                << " distance=" << demo.distance << "\n";
      return 0;
    }

    if (cmd_mcert->parsed()) {
      json trials = json::array();
      std::vector<json> rows(mcert_trials);
      parallel_indexed(mcert_trials, [&](int t) {
        std::uint64_t s = CounterRng::derive(mcert_seed, t);
        McProblem prob = mc_generate(mcert_n, mcert_n, mcert_rank, mcert_p, s);
        json row{{"seed", s}};
        try {
          GolfingCertificate cert = golfing_certificate(prob, mcert_c0, s + 1);
          LiftedDualReport rep = lifted_dual_from_Y(prob, cert.Y, cert.state.omega_union);
          row["ok"] = true;
          row["k0"] = cert.state.k0;
          row["t0"] = cert.state.t0;
          row["q_batch"] = cert.state.q_batch;
          row["pomega_residual"] = cert.checks.pomega_residual;
          row["pit_residual"] = cert.checks.pit_residual;
          row["pitperp_opnorm"] = cert.checks.pitperp_opnorm;
          row["opnorm_bound_ok"] = cert.checks.opnorm_bound_ok;
          row["lambda_threshold"] = rep.lambda_threshold;
          row["bound_38_ok"] = rep.bound_38_ok;
          row["psd_ok"] = rep.psd_ok;
        } catch (const CertificateFailure& e) {
          row["ok"] = false;
          row["error"] = e.what();
        }
        rows[t] = std::move(row);
      });
      int pass = 0;
      for (auto& r : rows) {
        if (r.value("ok", false) && r.value("opnorm_bound_ok", false) &&
            r.value("pit_residual", 1.0) <= 1e-6)
          ++pass;
        trials.push_back(std::move(r));
      }
      json out{{"schema", 1},
               {"type", "mc_cert_report"},
               {"generated_at", utc_timestamp()},
               {"n", mcert_n},
               {"rank", mcert_rank},
               {"p", mcert_p},
               {"c0", mcert_c0},
               {"trials", trials},
               {"pass_count", pass},
               {"trial_count", mcert_trials}};
      emit_json(out, mcert_out);
      std::cerr << "mc-cert: " << pass << "/" << mcert_trials << " trials passed the checks\n";
      return 0;
    }
  } catch (const Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Unbounded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalBreakdown& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
