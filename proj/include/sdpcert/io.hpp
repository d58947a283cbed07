#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <string>

#include "sdpcert/certifier.hpp"
#include "sdpcert/instances.hpp"
#include "sdpcert/mc.hpp"
#include "sdpcert/model.hpp"

namespace sdpcert {

using nlohmann::json;

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- matrices ---------------------------------------------------------------

inline json sym_to_json(const SymMatrix& a) {
  return json{{"n", a.n()}, {"upper", a.to_upper()}};
}

inline SymMatrix sym_from_json(const json& j) {
  return SymMatrix::from_upper(j.at("n").get<int>(), j.at("upper").get<std::vector<double>>());
}

inline json mat_to_json(const MatrixXd& m) {
  std::vector<double> data(m.size());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) data[i * m.cols() + j] = m(i, j);
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline MatrixXd mat_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols) throw InvalidInput("matrix json: bad size");
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int jj = 0; jj < cols; ++jj) m(i, jj) = data[i * cols + jj];
  return m;
}

inline json vec_to_json(const VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline VectorXd vec_from_json(const json& j) {
  auto data = j.get<std::vector<double>>();
  return Eigen::Map<VectorXd>(data.data(), data.size());
}

// --- instances ---------------------------------------------------------------

inline json instance_to_json(const Instance& inst) {
  json j{{"schema", 1},
         {"type", "instance"},
         {"generated_at", utc_timestamp()},
         {"metadata", inst.sdp.metadata},
         {"n", inst.sdp.n},
         {"m", inst.sdp.m},
         {"C", sym_to_json(inst.sdp.C)},
         {"b", vec_to_json(inst.sdp.b)},
         {"seed", inst.seed}};
  json cons = json::array();
  for (const auto& a : inst.sdp.constraints) {
    json trip = json::array();
    for (const auto& e : a.entries) trip.push_back(json::array({e.i, e.j, e.v}));
    cons.push_back(trip);
  }
  j["constraints"] = cons;
  j["params"] = inst.params;
  if (inst.truth) {
    json t{{"X_star", sym_to_json(inst.truth->X_star)}, {"rank_star", inst.truth->rank_star}};
    t["y_star"] = inst.truth->y_star ? vec_to_json(*inst.truth->y_star) : json(nullptr);
    j["truth"] = t;
  } else {
    j["truth"] = nullptr;
  }
  j["signal_z"] = inst.signal_z ? vec_to_json(*inst.signal_z) : json(nullptr);
  if (inst.signal_lowrank) {
    const auto& s = *inst.signal_lowrank;
    json omega = json::array();
    for (auto [a, b] : s.omega) omega.push_back(json::array({a, b}));
    j["signal_lowrank"] = json{{"X_natural", mat_to_json(s.X_natural)}, {"U", mat_to_json(s.U)},
                               {"V", mat_to_json(s.V)},      {"sigma", vec_to_json(s.sigma)},
                               {"omega", omega},             {"p", s.p},
                               {"mu", s.mu}};
  } else {
    j["signal_lowrank"] = nullptr;
  }
  if (inst.certificate) {
    const auto& c = *inst.certificate;
    j["certificate"] = json{{"y_star", vec_to_json(c.y_star)},
                            {"valid", c.valid},
                            {"lambda_min", c.lambda_min},
                            {"lambda_second", c.lambda_second},
                            {"z_op_norm", c.z_op_norm}};
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

inline Instance instance_from_json(const json& j) {
  if (j.value("schema", 0) != 1 || j.value("type", "") != "instance")
    throw InvalidInput("instance json: wrong schema or type");
  const int n = j.at("n").get<int>();
  std::vector<SparseSym> cons;
  for (const auto& trip : j.at("constraints")) {
    SparseSym a(n);
    for (const auto& e : trip) a.add(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
    cons.push_back(std::move(a));
  }
  Instance inst(StandardFormSDP(sym_from_json(j.at("C")), std::move(cons),
                                vec_from_json(j.at("b")), j.value("metadata", "")));
  inst.seed = j.value("seed", 0ULL);
  if (j.contains("params") && j.at("params").is_object())
    inst.params = j.at("params").get<std::map<std::string, double>>();
  if (j.contains("truth") && !j.at("truth").is_null()) {
    const auto& t = j.at("truth");
    InstanceTruth tr{sym_from_json(t.at("X_star")), std::nullopt, t.at("rank_star").get<int>()};
    if (!t.at("y_star").is_null()) tr.y_star = vec_from_json(t.at("y_star"));
    inst.truth = std::move(tr);
  }
  if (j.contains("signal_z") && !j.at("signal_z").is_null())
    inst.signal_z = vec_from_json(j.at("signal_z"));
  if (j.contains("signal_lowrank") && !j.at("signal_lowrank").is_null()) {
    const auto& s = j.at("signal_lowrank");
    LowRankSignal sig;
    sig.X_natural = mat_from_json(s.at("X_natural"));
    sig.U = mat_from_json(s.at("U"));
    sig.V = mat_from_json(s.at("V"));
    sig.sigma = vec_from_json(s.at("sigma"));
    for (const auto& e : s.at("omega")) sig.omega.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    sig.p = s.at("p").get<double>();
    sig.mu = s.at("mu").get<double>();
    inst.signal_lowrank = std::move(sig);
  }
  if (j.contains("certificate") && !j.at("certificate").is_null()) {
    const auto& c = j.at("certificate");
    CertificateRecord cert;
    cert.y_star = vec_from_json(c.at("y_star"));
    cert.valid = c.at("valid").get<bool>();
    cert.lambda_min = c.at("lambda_min").get<double>();
    cert.lambda_second = c.at("lambda_second").get<double>();
    cert.z_op_norm = c.at("z_op_norm").get<double>();
    inst.certificate = std::move(cert);
  }
  return inst;
}

/// McProblem reconstructed from a lifted instance file.
inline McProblem mc_problem_from_instance(const Instance& inst) {
  if (!inst.signal_lowrank) throw InvalidInput("instance carries no low-rank signal");
  const auto& s = *inst.signal_lowrank;
  McProblem prob;
  prob.n1 = static_cast<int>(s.X_natural.rows());
  prob.n2 = static_cast<int>(s.X_natural.cols());
  prob.r = static_cast<int>(s.U.cols());
  prob.X_natural = s.X_natural;
  prob.U = s.U;
  prob.V = s.V;
  prob.sigma = s.sigma;
  prob.omega = s.omega;
  prob.p = s.p;
  prob.mu = s.mu;
  prob.seed = inst.seed;
  return prob;
}

// --- solutions ---------------------------------------------------------------

inline json solution_to_json(const SolverSolution& sol) {
  return json{{"schema", 1},
              {"type", "solution"},
              {"generated_at", utc_timestamp()},
              {"X", sym_to_json(sol.X)},
              {"y", vec_to_json(sol.y)},
              {"primal_obj", sol.primal_obj},
              {"dual_obj", sol.dual_obj},
              {"residuals",
               {{"primal_infeas", sol.res.primal_infeas},
                {"dual_infeas", sol.res.dual_infeas},
                {"cone_infeas", sol.res.cone_infeas},
                {"gap", sol.res.gap}}},
              {"converged", sol.converged},
              {"iterations", sol.iterations},
              {"status", sol.status}};
}

inline SolverSolution solution_from_json(const json& j, const StandardFormSDP& sdp) {
  if (j.value("schema", 0) != 1 || j.value("type", "") != "solution")
    throw InvalidInput("solution json: wrong schema or type");
  SymMatrix x = sym_from_json(j.at("X"));
  VectorXd y = vec_from_json(j.at("y"));
  SolverSolution sol{x, y, slack(sdp, y)};
  sol.primal_obj = j.at("primal_obj").get<double>();
  sol.dual_obj = j.at("dual_obj").get<double>();
  const auto& r = j.at("residuals");
  sol.res = {r.at("primal_infeas").get<double>(), r.at("dual_infeas").get<double>(),
             r.at("cone_infeas").get<double>(), r.at("gap").get<double>()};
  sol.converged = j.at("converged").get<bool>();
  sol.iterations = j.at("iterations").get<int>();
  sol.status = j.value("status", "");
  return sol;
}

// --- reports -----------------------------------------------------------------

namespace detail {
inline json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}
inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace detail

inline json report_to_json(const SimplicityReport& rep) {
  return json{{"schema", 1},
              {"type", "simplicity_report"},
              {"generated_at", utc_timestamp()},
              {"n", rep.n},
              {"m", rep.m},
              {"eps", rep.eps},
              {"rank_p", rep.rank_p},
              {"rank_d", rep.rank_d},
              {"lambda_minpos_X", detail::opt_to_json(rep.lambda_minpos_X)},
              {"lambda_minpos_Z", detail::opt_to_json(rep.lambda_minpos_Z)},
              {"kappa_X", detail::opt_to_json(rep.kappa_X)},
              {"kappa_Z", detail::opt_to_json(rep.kappa_Z)},
              {"sigma_min_AZ", rep.sigma_min_AZ},
              {"sigma_max_AZ", rep.sigma_max_AZ},
              {"kappa_AZ", detail::opt_to_json(rep.kappa_AZ)},
              {"sigma_min_AX", rep.sigma_min_AX},
              {"sigma_max_AX", rep.sigma_max_AX},
              {"kappa_AX", detail::opt_to_json(rep.kappa_AX)},
              {"sigma_min_A", rep.sigma_min_A},
              {"gap", rep.gap},
              {"primal_obj", rep.primal_obj},
              {"dual_obj", rep.dual_obj},
              {"flags",
               {{"surjective", rep.flags.surjective},
                {"strong_duality", rep.flags.strong_duality},
                {"strict_complementarity", rep.flags.strict_complementarity},
                {"primal_unique", rep.flags.primal_unique},
                {"dual_unique", rep.flags.dual_unique},
                {"simple", rep.flags.simple},
                {"primal_simple", rep.flags.primal_simple}}},
              {"warnings", rep.warnings},
              {"instance_hash", detail::hex64(rep.sdp_hash)},
              {"solution_hash", detail::hex64(rep.sol_hash)}};
}

/// Aligned text rendering of one report row plus flag summary.
inline std::string render_report_table(const SimplicityReport& rep, const std::string& label) {
  std::ostringstream os;
  auto fmt_opt = [](const std::optional<double>& v) {
    if (!v) return std::string("inf");
    std::ostringstream o;
    o << std::setprecision(4) << *v;
    return o.str();
  };
  os << std::left << std::setw(18) << "instance" << std::setw(7) << "n" << std::setw(8)
     << "rank_p" << std::setw(8) << "rank_d" << std::setw(12) << "kappa_X" << std::setw(12)
     << "kappa_Z" << std::setw(12) << "kappa(A_Z)" << std::setw(12) << "kappa(A*_X)" << "\n";
  os << std::left << std::setw(18) << label << std::setw(7) << rep.n << std::setw(8) << rep.rank_p
     << std::setw(8) << rep.rank_d << std::setw(12) << fmt_opt(rep.kappa_X) << std::setw(12)
     << fmt_opt(rep.kappa_Z) << std::setw(12) << fmt_opt(rep.kappa_AZ) << std::setw(12)
     << fmt_opt(rep.kappa_AX) << "\n";
  os << "flags: surjective=" << rep.flags.surjective
     << " strong_duality=" << rep.flags.strong_duality
     << " strict_complementarity=" << rep.flags.strict_complementarity
     << " primal_unique=" << rep.flags.primal_unique << " dual_unique=" << rep.flags.dual_unique
     << " simple=" << rep.flags.simple << " primal_simple=" << rep.flags.primal_simple << "\n";
  for (const auto& w : rep.warnings) os << "warning: " << w << "\n";
  return os.str();
}

// --- files ---------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

inline void write_spectrum_csv(const std::string& path, const VectorXd& values) {
  std::ostringstream os;
  os << "index,eigenvalue\n";
  os << std::setprecision(17);
  for (int i = 0; i < values.size(); ++i) os << i << "," << values(i) << "\n";
  write_text_file(path, os.str());
}

}  // namespace sdpcert
