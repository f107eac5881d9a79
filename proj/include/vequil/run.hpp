#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <vequil/assumptions.hpp>
#include <vequil/config.hpp>
#include <vequil/discretize.hpp>
#include <vequil/equilibrium.hpp>
#include <vequil/solver.hpp>

namespace vequil {

// Exit codes of the check/solve drivers.
inline constexpr int kExitCertified = 0;
inline constexpr int kExitNotCertified = 2;
inline constexpr int kExitAssumptionsFail = 3;
inline constexpr int kExitInputError = 4;

/// 17-significant-digit decimal rendering: doubles round-trip exactly.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

inline nlohmann::json json_vector(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline nlohmann::json assumptions_to_json(const AssumptionReport& r) {
  nlohmann::json j;
  j["compatNS"] = to_string(r.compatNS.status);
  j["H2"] = to_string(r.H2.status);
  j["H1"] = to_string(r.H1.status);
  j["imageAC"] = to_string(r.imageAC.status);
  j["cij0"] = to_string(r.cij0.status);
  j["admissible"] = to_string(r.admissible.status);
  j["K_compact"] = r.K.compact;
  j["K_feasible"] = r.K.feasible;
  j["existence"] = r.existence_guaranteed;
  j["uniqueness"] = r.uniqueness_guaranteed;

  nlohmann::json detail;
  auto pairs = [](const std::vector<std::pair<int, int>>& ps) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [i, k] : ps) a.push_back({i, k});
    return a;
  };
  if (!r.compatNS.violating_pairs.empty())
    detail["compatNS_violating_pairs"] = pairs(r.compatNS.violating_pairs);
  if (!r.cij0.violating_pairs.empty())
    detail["cij0_violating_pairs"] = pairs(r.cij0.violating_pairs);
  if (r.H2.witness.size() > 0) detail["H2_witness"] = json_vector(r.H2.witness);
  if (!r.H2.note.empty()) detail["H2_note"] = r.H2.note;
  if (!r.H1.violating_set.empty()) detail["H1_violating_set"] = r.H1.violating_set;
  if (!r.H1.note.empty()) detail["H1_note"] = r.H1.note;
  if (r.imageAC.kernel_vector.size() > 0)
    detail["imageAC_kernel_vector"] = json_vector(r.imageAC.kernel_vector);
  detail["admissible_per_component"] = r.admissible.per_component;
  if (r.K.feasible) detail["K_feasible_point"] = json_vector(r.K.feasible_point);
  if (!r.K.compact) detail["K_recession_direction"] = json_vector(r.K.recession_direction);
  j["detail"] = detail;
  return j;
}

inline std::string assumptions_to_text(const AssumptionReport& r) {
  std::ostringstream os;
  auto pairlist = [](const std::vector<std::pair<int, int>>& ps) {
    std::ostringstream s;
    for (std::size_t k = 0; k < ps.size(); ++k)
      s << (k ? ", " : "") << "(" << ps[k].first << "," << ps[k].second << ")";
    return s.str();
  };
  os << "compatNS:   " << to_string(r.compatNS.status);
  if (!r.compatNS.violating_pairs.empty())
    os << "  [violating pairs " << pairlist(r.compatNS.violating_pairs) << "]";
  os << "\nH2:         " << to_string(r.H2.status);
  if (r.H2.witness.size() > 0) {
    os << "  [witness y = (";
    for (Eigen::Index k = 0; k < r.H2.witness.size(); ++k)
      os << (k ? ", " : "") << fmt17(r.H2.witness(k));
    os << ")]";
  }
  if (!r.H2.note.empty()) os << "  [" << r.H2.note << "]";
  os << "\nH1:         " << to_string(r.H1.status);
  if (!r.H1.violating_set.empty()) {
    os << "  [violating set {";
    for (std::size_t k = 0; k < r.H1.violating_set.size(); ++k)
      os << (k ? ", " : "") << r.H1.violating_set[k];
    os << "}]";
  }
  if (!r.H1.note.empty()) os << "  [" << r.H1.note << "]";
  os << "\nimageAC:    " << to_string(r.imageAC.status);
  if (r.imageAC.kernel_vector.size() > 0) {
    os << "  [kernel vector (";
    for (Eigen::Index k = 0; k < r.imageAC.kernel_vector.size(); ++k)
      os << (k ? ", " : "") << fmt17(r.imageAC.kernel_vector(k));
    os << ")]";
  }
  os << "\ncij0:       " << to_string(r.cij0.status);
  if (!r.cij0.violating_pairs.empty())
    os << "  [violating pairs " << pairlist(r.cij0.violating_pairs) << "]";
  os << "\nadmissible: " << to_string(r.admissible.status);
  os << "\nK_feasible: " << (r.K.feasible ? "yes" : "no");
  os << "\nK_compact:  " << (r.K.compact ? "yes" : "no");
  os << "\nexistence guaranteed:  " << (r.existence_guaranteed ? "yes" : "no");
  os << "\nuniqueness guaranteed: " << (r.uniqueness_guaranteed ? "yes" : "no") << "\n";
  return os.str();
}

inline nlohmann::json equilibrium_to_json(const EquilibriumReport& r) {
  nlohmann::json j;
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index k = 0; k < r.w.size(); ++k) {
    if (r.active[static_cast<std::size_t>(k)])
      w.push_back(r.w(k));
    else
      w.push_back(nullptr);
  }
  j["w"] = w;
  j["F"] = json_vector(r.F);
  j["residual"] = r.residual;
  j["lower_violation"] = r.lower_violation;
  j["upper_violation"] = r.upper_violation;
  j["boundary_mass"] = json_vector(r.boundary_mass);
  j["pass"] = r.pass;
  if (!r.advice.empty()) j["advice"] = r.advice;
  return j;
}

struct RunOverrides {
  std::optional<std::vector<int>> nodes;
  std::optional<double> gap_tol;
  std::optional<double> eq_tol;
  std::optional<unsigned> seed;
  bool force = false;
  bool overwrite = false;
};

namespace detail {

inline void apply_overrides(RunConfig& cfg, const RunOverrides& ov) {
  if (ov.nodes) {
    std::vector<int> n = *ov.nodes;
    if (n.size() == 1) n.assign(cfg.sets.size(), n[0]);
    if (n.size() != cfg.sets.size())
      throw ConfigError("config: --nodes needs one value or one per component");
    for (int v : n)
      if (v < 2) throw ConfigError("config: --nodes values must be >= 2");
    cfg.nodes = std::move(n);
  }
  if (ov.gap_tol) cfg.solver.gap_tol = *ov.gap_tol;
  if (ov.eq_tol) cfg.eq_tol = *ov.eq_tol;
  if (ov.seed) cfg.solver.seed = *ov.seed;
  cfg.solver.validate();
  if (!(cfg.eq_tol > 0.0)) throw ConfigError("config: eq_tol must be > 0");
}

/// Claims the artifact paths this run will write: creates the directory,
/// errors on collision unless overwrite is set.
inline std::vector<std::filesystem::path> claim_outputs(const std::string& out_dir,
                                                        const std::vector<std::string>& names,
                                                        bool overwrite) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (const auto& n : names) paths.push_back(dir / n);
  if (!overwrite)
    for (const auto& p : paths)
      if (fs::exists(p))
        throw std::runtime_error("output collision: " + p.string() +
                                 " exists (pass --overwrite to replace)");
  return paths;
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
}

}  // namespace detail

/// `check`: assumption report only. Exit 0 when existence is guaranteed,
/// 3 otherwise.
inline int run_check(RunConfig cfg, const std::string& out_dir, const RunOverrides& ov,
                     std::ostream& console) {
  detail::apply_overrides(cfg, ov);
  auto paths = detail::claim_outputs(out_dir, {"assumptions.json", "run.log"}, ov.overwrite);

  ProblemInstance p = cfg.problem();
  AssumptionReport rep = check_all(p, cfg.graph);
  const int exit_code = rep.existence_guaranteed ? kExitCertified : kExitAssumptionsFail;

  detail::write_text(paths[0], assumptions_to_json(rep).dump(2) + "\n");
  std::string text = assumptions_to_text(rep);
  std::ostringstream log;
  log << "subcommand: check\ncomponents: " << p.dimension() << "\n"
      << text << "exit: " << exit_code << "\n";
  detail::write_text(paths[1], log.str());
  console << text;
  return exit_code;
}

/// Weights of a solved instance in CSV form; widths/nodes rendered with 17
/// significant digits so a reload is bit-exact.
inline std::string solution_to_csv(const MeasureTuple& m) {
  std::ostringstream os;
  os << "component,node,cell_width,weight\n";
  for (int i = 0; i < m.components(); ++i) {
    const Grid& g = m.grids[static_cast<std::size_t>(i)];
    const int o = m.offset(i);
    for (int k = 0; k < g.size(); ++k)
      os << i << "," << fmt17(g.nodes[static_cast<std::size_t>(k)]) << ","
         << fmt17(g.widths[static_cast<std::size_t>(k)]) << "," << fmt17(m.weights(o + k))
         << "\n";
  }
  return os.str();
}

/// Reload of solution.csv against a reference discretization of the same
/// config: grids must match bit-exactly; returns the tuple with the loaded
/// weights in place.
inline MeasureTuple load_solution_csv(const std::string& path, const MeasureTuple& reference) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "component,node,cell_width,weight")
    throw std::runtime_error(path + ": bad header");
  MeasureTuple out = reference;
  out.weights.setZero();
  std::vector<int> seen(static_cast<std::size_t>(reference.components()), 0);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int i;
    double x, h, w;
    try {
      std::getline(row, cell, ',');
      i = std::stoi(cell);
      std::getline(row, cell, ',');
      x = std::stod(cell);
      std::getline(row, cell, ',');
      h = std::stod(cell);
      std::getline(row, cell, ',');
      w = std::stod(cell);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (i < 0 || i >= reference.components())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad component index");
    const Grid& g = reference.grids[static_cast<std::size_t>(i)];
    int k = seen[static_cast<std::size_t>(i)]++;
    if (k >= g.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": extra row of component " +
                               std::to_string(i));
    if (x != g.nodes[static_cast<std::size_t>(k)] || h != g.widths[static_cast<std::size_t>(k)])
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": grid mismatch with the reference discretization");
    out.weights(out.offset(i) + k) = w;
  }
  for (int i = 0; i < reference.components(); ++i)
    if (seen[static_cast<std::size_t>(i)] != reference.grids[static_cast<std::size_t>(i)].size())
      throw std::runtime_error(path + ": missing rows of component " + std::to_string(i));
  return out;
}

inline std::string potentials_to_csv(const MeasureTuple& m, const ProblemInstance& p,
                                     const Eigen::VectorXd& level) {
  std::ostringstream os;
  os << "component,x,U_i,Q_i,U_i+Q_i,AtF_i\n";
  for (int i = 0; i < m.components(); ++i) {
    const Grid& g = m.grids[static_cast<std::size_t>(i)];
    for (int k = 0; k < g.size(); ++k) {
      double x = g.nodes[static_cast<std::size_t>(k)];
      double u = partial_potential(m, p.interaction.C(), i, x);
      double q = p.fields[static_cast<std::size_t>(i)](x);
      os << i << "," << fmt17(x) << "," << fmt17(u) << "," << fmt17(q) << "," << fmt17(u + q)
         << "," << fmt17(level(i)) << "\n";
    }
  }
  return os.str();
}

/// `solve`: check, discretize, minimize, certify, persist. Exit codes:
/// 0 solved+certified; 2 solved, certification failed; 3 assumptions
/// preclude guarantees (pipeline runs only with --force, exit stays 3);
/// 4 input error (thrown as ConfigError before any artifact is written).
inline int run_solve(RunConfig cfg, const std::string& out_dir, const RunOverrides& ov,
                     std::ostream& console) {
  detail::apply_overrides(cfg, ov);
  auto paths = detail::claim_outputs(
      out_dir, {"assumptions.json", "solution.csv", "potentials.csv", "report.json", "run.log"},
      ov.overwrite);
  const auto& p_assump = paths[0];
  const auto& p_sol = paths[1];
  const auto& p_pot = paths[2];
  const auto& p_rep = paths[3];
  const auto& p_log = paths[4];

  std::ostringstream log;
  log << "subcommand: solve\n";

  ProblemInstance p = cfg.problem();
  log << "components: " << p.dimension() << "\n";

  AssumptionReport assump = check_all(p, cfg.graph);
  detail::write_text(p_assump, assumptions_to_json(assump).dump(2) + "\n");
  log << assumptions_to_text(assump);

  const bool precluded = !assump.existence_guaranteed;
  if (precluded && !ov.force) {
    log << "stopping: existence not guaranteed (pass --force to run diagnostically)\n";
    log << "exit: " << kExitAssumptionsFail << "\n";
    detail::write_text(p_log, log.str());
    console << "assumptions preclude guarantees; stopping (use --force to run anyway)\n";
    return kExitAssumptionsFail;
  }
  if (precluded) log << "continuing despite failed assumptions (--force)\n";
  if (!precluded && !assump.uniqueness_guaranteed)
    log << "note: existence guaranteed but uniqueness is not\n";

  double radius_override = std::numeric_limits<double>::quiet_NaN();
  if (cfg.truncation_radius) radius_override = *cfg.truncation_radius;
  DiscreteProblem dp = assemble(p, cfg.nodes, radius_override);
  for (int i = 0; i < dp.dimension(); ++i) {
    const Grid& g = dp.grid(i);
    log << "grid[" << i << "]: " << g.size() << " cells on [" << fmt17(g.cell_left(0)) << ", "
        << fmt17(g.cell_right(g.size() - 1)) << "]"
        << (g.left_truncated || g.right_truncated ? " (truncated)" : "") << "\n";
  }

  SolveResult sol = solve(dp, cfg.solver);
  log << "solver: iterations=" << sol.iterations << " objective=" << fmt17(sol.objective)
      << " gap=" << fmt17(sol.gap) << " converged=" << (sol.converged ? "yes" : "no") << "\n";

  nlohmann::json report;
  report["objective"] = sol.objective;
  report["gap"] = sol.gap;
  report["iterations"] = sol.iterations;
  report["converged"] = sol.converged;
  report["assumptions_preclude"] = precluded;

  bool certified = false;
  std::string verdict;
  try {
    MultiplierRecovery mult = recover_multipliers(sol.weights, p);
    EquilibriumReport eq =
        verify(sol.weights, p, mult, cfg.audit_density, cfg.eq_tol, cfg.boundary_tol);
    certified = eq.pass;
    report["F"] = json_vector(eq.F);
    report["violations"] = equilibrium_to_json(eq);
    detail::write_text(p_pot, potentials_to_csv(sol.weights, p,
                                                p.masses.A().transpose() * eq.F));
    log << "verify: lower=" << fmt17(eq.lower_violation) << " upper=" << fmt17(eq.upper_violation)
        << " residual=" << fmt17(eq.residual) << " pass=" << (eq.pass ? "yes" : "no") << "\n";
    if (!eq.advice.empty()) log << "advice: " << eq.advice << "\n";
  } catch (const std::exception& e) {
    report["F"] = nlohmann::json::array();
    report["violations"] = nlohmann::json::object();
    report["violations"]["error"] = e.what();
    detail::write_text(p_pot, "component,x,U_i,Q_i,U_i+Q_i,AtF_i\n");
    log << "verify: failed (" << e.what() << ")\n";
  }

  int exit_code;
  if (precluded) {
    verdict = certified ? "certified-but-assumptions-fail" : "assumptions-preclude";
    exit_code = kExitAssumptionsFail;
  } else if (certified) {
    verdict = "certified";
    exit_code = kExitCertified;
  } else {
    verdict = "not-certified";
    exit_code = kExitNotCertified;
  }
  report["verdict"] = verdict;
  report["exit_code"] = exit_code;

  detail::write_text(p_sol, solution_to_csv(sol.weights));
  detail::write_text(p_rep, report.dump(2) + "\n");
  log << "verdict: " << verdict << "\nexit: " << exit_code << "\n";
  detail::write_text(p_log, log.str());

  console << "objective " << fmt17(sol.objective) << ", gap " << fmt17(sol.gap) << ", verdict "
          << verdict << "\n";
  return exit_code;
}

}  // namespace vequil
