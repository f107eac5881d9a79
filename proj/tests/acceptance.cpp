// Acceptance gate: eight end-to-end checks covering equilibrium energies,
// elliptic-integral and closed-form oracles, assumption verdicts, graph
// equivalences, discrete positivity, solver contracts, and the behavior on a
// degenerate instance with non-unique minimizers. Prints one PASS/FAIL line
// per check; the exit code is the number of failures.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <vequil/assumptions.hpp>
#include <vequil/config.hpp>
#include <vequil/discretize.hpp>
#include <vequil/equilibrium.hpp>
#include <vequil/graph.hpp>
#include <vequil/oracles.hpp>
#include <vequil/problem.hpp>
#include <vequil/run.hpp>
#include <vequil/solver.hpp>

namespace {

using namespace vequil;

// Pinned gate tolerances.
constexpr double kScalarTol = 1e-2;         // |J -/+ log 2| on the scalar runs
constexpr double kCondenserRelTol = 2e-2;   // relative error vs 2piK/K'
constexpr double kTvTol = 5e-2;             // per-component TV vs closed form
constexpr double kPositivityFloor = -1e-8;  // zero-mass discrete energy bound
constexpr double kFeasTol = 1e-10;          // constraint drift at the solution
constexpr double kLatticeTol = 1e-4;        // |J_fw - J_lattice| at tiny scale
constexpr double kVertexTol = 1e-6;         // vertex-ness of degenerate masses
constexpr double kLog2 = 0.6931471805599453;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct Outcome {
  bool ok = false;
  std::string detail;
};

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) M(r, c++) = v;
    ++r;
  }
  return M;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

IntervalUnion iu(double lo, double hi) { return IntervalUnion({{lo, hi}}); }

ProblemInstance make_instance(std::vector<IntervalUnion> sets, const Eigen::MatrixXd& C,
                              MassPolyhedron K,
                              std::vector<ExternalField> fields = {}) {
  if (fields.empty()) fields.assign(sets.size(), ExternalField());
  return ProblemInstance(std::move(sets), std::move(fields), InteractionMatrix::factorize(C),
                         std::move(K));
}

// Converged runs collected by the energy checks and audited by check 7.
struct Sample {
  std::string name;
  DiscreteProblem dp;
  SolveResult res;
  SolveOptions opt;
};
std::vector<Sample> g_samples;

double feasibility_drift(const DiscreteProblem& dp, const Eigen::VectorXd& w) {
  return (dp.A() * dp.masses(w) - dp.a()).cwiseAbs().maxCoeff();
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// 1. Scalar equilibrium energies: [-1,1] -> log 2 and [-4,4] -> -log 2.
Outcome check_scalar_energies() {
  Timer t;
  bool ok = true;
  std::ostringstream d;
  const double targets[2] = {kLog2, -kLog2};
  const double lohi[2][2] = {{-1.0, 1.0}, {-4.0, 4.0}};
  for (int c = 0; c < 2; ++c) {
    ProblemInstance p =
        make_instance({iu(lohi[c][0], lohi[c][1])}, mat({{1.0}}), MassPolyhedron::fixed(vec({1.0})));
    DiscreteProblem dp = assemble(p, {400});
    SolveOptions o;
    SolveResult r = solve(dp, o);
    double err = std::abs(r.objective - targets[c]);
    ok = ok && r.converged && err <= kScalarTol;
    d << (c ? ", " : "") << "[" << lohi[c][0] << "," << lohi[c][1] << "] J="
      << fmt("%.6f err %.1e", r.objective, err);
    g_samples.push_back({fmt("scalar[%g,%g]", lohi[c][0], lohi[c][1]), std::move(dp), r, o});
  }
  double secs = t.seconds();
  ok = ok && secs <= 30.0;
  d << fmt(", %.1fs (limit 30s)", secs);
  return {ok, "scalar equilibrium energy: " + d.str()};
}

// ---------------------------------------------------------------------------
// 2. Condenser capacity at n=4 against the elliptic-integral value.
Outcome check_condenser_energy() {
  Timer t;
  ProblemInstance p = make_instance({iu(-0.5, -0.25), iu(0.25, 0.5)}, mat({{1, -1}, {-1, 1}}),
                                    MassPolyhedron::fixed(vec({1.0, 1.0})));
  DiscreteProblem dp = assemble(p, {400, 400});
  SolveOptions o;
  o.max_iters = 40000;
  SolveResult r = solve(dp, o);
  const double target = oracles::condenser_energy(4.0);
  const double rel = std::abs(r.objective - target) / target;
  double secs = t.seconds();
  bool ok = r.converged && rel <= kCondenserRelTol && secs <= 60.0;
  g_samples.push_back({"condenser n=4", std::move(dp), r, o});
  return {ok, fmt("condenser capacity: J=%.6f vs 2piK/K'=%.6f rel %.1e, %.1fs (limit 60s)",
                  r.objective, target, rel, secs)};
}

// ---------------------------------------------------------------------------
// 3. Overlapping two-component closed form: per-cell masses within TV 5e-2
//    per component and a passing equilibrium certificate.
Outcome check_overlap_closed_form() {
  ProblemInstance p = make_instance({iu(-1.0, 1.0), iu(-0.5, 0.5)}, mat({{2, -1}, {-1, 2}}),
                                    MassPolyhedron::fixed(vec({1.0, 1.0})));
  DiscreteProblem dp = assemble(p, {800, 800});
  SolveOptions o;
  o.max_iters = 60000;
  // The interior density spike at the inner endpoints keeps the active set
  // large; 1e-5 relative gap already sits ~100x below the N=800 grid error.
  o.gap_tol = 1e-5;
  SolveResult r = solve(dp, o);

  MeasureTuple closed =
      oracles::condenser2_solution(1.0, 1.0, -1.0, 1.0, -0.5, 0.5, dp.grid(0), dp.grid(1));
  double tv[2];
  for (int i = 0; i < 2; ++i) {
    int o0 = r.weights.offset(i), n = r.weights.grids[static_cast<std::size_t>(i)].size();
    tv[i] = 0.5 * (r.weights.weights.segment(o0, n) - closed.weights.segment(o0, n))
                      .cwiseAbs()
                      .sum();
  }
  MultiplierRecovery mult = recover_multipliers(r.weights, p);
  EquilibriumReport eq = verify(r.weights, p, mult);
  bool ok = r.converged && tv[0] <= kTvTol && tv[1] <= kTvTol && eq.pass;
  g_samples.push_back({"overlap closed form", std::move(dp), r, o});
  return {ok, fmt("overlap closed form: TV=(%.2e, %.2e) <= %.0e, certificate %s "
                  "(lower %.2e upper %.2e)",
                  tv[0], tv[1], kTvTol, eq.pass ? "pass" : "FAIL", eq.lower_violation,
                  eq.upper_violation)};
}

// ---------------------------------------------------------------------------
// 4. Assumption-checker fixture matrix: five exact boolean verdicts.
Outcome check_assumption_fixtures() {
  bool ok = true;
  double worst = 0.0;
  std::ostringstream d;

  auto timed = [&](const char* name, bool verdict, double secs) {
    ok = ok && verdict && secs <= 1.0;
    worst = std::max(worst, secs);
    d << name << "=" << (verdict ? "ok" : "FAIL") << " ";
  };

  {
    Timer t;
    AssumptionReport r = check_all(make_instance({iu(-0.5, 0.0), iu(0.0, 0.5)},
                                                 mat({{1, -1}, {-1, 1}}),
                                                 MassPolyhedron::fixed(vec({1.0, 1.0}))));
    timed("touching:H2-fail", r.H2.status == CheckStatus::fail && !r.existence_guaranteed,
          t.seconds());
  }
  {
    Timer t;
    AssumptionReport r = check_all(make_instance(
        {iu(-1.0, 1.0), iu(-1.0, 1.0)}, mat({{1, 1}, {1, 1}}), MassPolyhedron::simplex(2, 1.0)));
    timed("shared-sum:H1-fail", r.H1.status == CheckStatus::fail, t.seconds());
  }
  {
    Timer t;
    AssumptionReport r = check_all(make_instance(
        {iu(-4.0, 4.0), iu(-4.0, 4.0)}, Eigen::MatrixXd::Identity(2, 2),
        MassPolyhedron::simplex(2, 1.0)));
    timed("decoupled:imageAC-fail", r.imageAC.status == CheckStatus::fail, t.seconds());
  }
  {
    Timer t;
    DirectedMultigraph g(3, {{0, 2}, {0, 1}, {2, 1}});
    Eigen::MatrixXd A = incidence_matrix(g);
    ProblemInstance p = make_instance({iu(-1.0, 0.0), iu(0.0, 1.0), iu(-0.5, 0.5)},
                                      A.transpose() * A, MassPolyhedron(A, vec({-2.0, 1.0, 1.0})));
    AssumptionReport r = check_all(p, g);
    timed("cycle-graph:H1+H2-pass",
          r.H1.status == CheckStatus::pass && r.H2.status == CheckStatus::pass, t.seconds());
  }
  {
    Timer t;
    AssumptionReport r = check_all(make_instance({iu(-1.0, 1.0), iu(-0.5, 0.5)},
                                                 mat({{2, -1}, {-1, 2}}),
                                                 MassPolyhedron::fixed(vec({1.0, 1.0}))));
    timed("pd+point-K:exist+unique", r.existence_guaranteed && r.uniqueness_guaranteed,
          t.seconds());
  }
  d << fmt("(max %.3fs, limit 1s each)", worst);
  return {ok, "assumption fixtures: " + d.str()};
}

// ---------------------------------------------------------------------------
// 5. Graph equivalences on 200 random multigraphs: full rank of A'A iff no
//    undirected cycle; compact mass polyhedron iff no directed cycle.
Outcome check_graph_equivalences() {
  Timer t;
  std::mt19937 rng(20260814u);
  int bad_rank = 0, bad_compact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nv(2, 6);
    const int n = nv(rng);
    std::uniform_int_distribution<int> ne(1, 8);
    const int m = ne(rng);
    std::uniform_int_distribution<int> vx(0, n - 1);
    std::vector<std::pair<int, int>> edges;
    while (static_cast<int>(edges.size()) < m) {
      int u = vx(rng), v = vx(rng);
      if (u != v) edges.push_back({u, v});
    }
    DirectedMultigraph g(n, edges);
    if ((interaction_from_graph(g).rank() == m) != !has_undirected_cycle(g)) ++bad_rank;

    Eigen::MatrixXd A = incidence_matrix(g);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(m, 1.0);
    for (int j = 0; j < m; ++j) x0(j) += 0.1 * (j % 3);
    MassPolyhedron K(A, A * x0);
    if (K.compact() != !has_directed_cycle(g)) ++bad_compact;
  }
  double secs = t.seconds();
  bool ok = bad_rank == 0 && bad_compact == 0 && secs <= 10.0;
  return {ok, fmt("graph equivalences: 200 multigraphs, rank mismatches %d, "
                  "compactness mismatches %d, %.2fs (limit 10s)",
                  bad_rank, bad_compact, secs)};
}

// ---------------------------------------------------------------------------
// 6. Discrete positivity: corrected-kernel energy of 1000 random equal-mass
//    weight differences stays above -1e-8.
Outcome check_discrete_positivity() {
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> nn(20, 80);
  int fails = 0;
  double min_energy = std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd cs[3] = {mat({{1.0}}), mat({{2, -1}, {-1, 2}}), mat({{1, -1}, {-1, 1}})};
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::MatrixXd& C = cs[trial % 3];
    const int d = static_cast<int>(C.rows());
    std::vector<Grid> grids;
    int total = 0;
    for (int i = 0; i < d; ++i) {
      double a = -3.0 + 6.0 * unif(rng);
      double len = 0.5 + 3.5 * unif(rng);
      grids.push_back(build_grid(iu(a, a + len), nn(rng), 0.0));
      total += grids.back().size();
    }
    Eigen::VectorXd wa(total), wb(total);
    for (int k = 0; k < total; ++k) {
      wa(k) = unif(rng);
      wb(k) = unif(rng);
    }
    int off = 0;
    for (int i = 0; i < d; ++i) {  // match the component masses exactly
      int n = grids[static_cast<std::size_t>(i)].size();
      wb.segment(off, n) *= wa.segment(off, n).sum() / wb.segment(off, n).sum();
      off += n;
    }
    MeasureTuple diff{grids, wa - wb};
    double e = energy(diff, C, std::vector<ExternalField>(static_cast<std::size_t>(d)));
    min_energy = std::min(min_energy, e);
    if (e < kPositivityFloor) ++fails;
  }
  return {fails == 0, fmt("discrete positivity: 1000 zero-mass differences, failures %d, "
                          "min energy %.2e (floor %.0e)",
                          fails, min_energy, kPositivityFloor)};
}

// ---------------------------------------------------------------------------
// 7. Solver contracts on the collected converged runs + lattice oracle.
double lattice_minimum_3(const Eigen::MatrixXd& M, const Eigen::VectorXd& q, double t, int L) {
  const double s = t / L;
  const double qs = 2.0 / s;
  double best = std::numeric_limits<double>::infinity();
  for (int k0 = 0; k0 <= L; ++k0) {
    const double part0 = M(0, 0) * k0 * static_cast<double>(k0) + qs * q(0) * k0;
    const double lin1 = 2.0 * M(0, 1) * k0 + qs * q(1);
    const double lin2_0 = 2.0 * M(0, 2) * k0 + qs * q(2);
    for (int k1 = 0; k1 <= L - k0; ++k1) {
      const int k2 = L - k0 - k1;
      const double val = part0 + M(1, 1) * k1 * static_cast<double>(k1) + lin1 * k1 +
                         (lin2_0 + 2.0 * M(1, 2) * k1) * k2 + M(2, 2) * k2 * static_cast<double>(k2);
      if (val < best) best = val;
    }
  }
  return s * s * best;
}

double lattice_minimum_4(const Eigen::MatrixXd& M, const Eigen::VectorXd& q, double t, int L) {
  const double s = t / L;
  const double qs = 2.0 / s;
  double best = std::numeric_limits<double>::infinity();
  for (int k0 = 0; k0 <= L; ++k0) {
    const double part0 = M(0, 0) * k0 * static_cast<double>(k0) + qs * q(0) * k0;
    for (int k1 = 0; k1 <= L - k0; ++k1) {
      const int rem = L - k0 - k1;
      const double base = part0 + M(1, 1) * k1 * static_cast<double>(k1) +
                          2.0 * M(0, 1) * k0 * static_cast<double>(k1) + qs * q(1) * k1;
      const double lin2 = 2.0 * (M(0, 2) * k0 + M(1, 2) * k1) + qs * q(2);
      const double lin3 = 2.0 * (M(0, 3) * k0 + M(1, 3) * k1) + qs * q(3);
      for (int k2 = 0; k2 <= rem; ++k2) {
        const int k3 = rem - k2;
        const double val = base + lin2 * k2 + lin3 * k3 + M(2, 2) * k2 * static_cast<double>(k2) +
                           2.0 * M(2, 3) * k2 * static_cast<double>(k3) +
                           M(3, 3) * k3 * static_cast<double>(k3);
        if (val < best) best = val;
      }
    }
  }
  return s * s * best;
}

Outcome check_solver_contracts() {
  bool ok = true;
  std::ostringstream d;

  int audited = 0;
  double worst_drift = 0.0;
  for (const Sample& s : g_samples) {
    if (!s.res.converged) {
      ok = false;
      d << s.name << ":not-converged ";
      continue;
    }
    ++audited;
    bool monotone = true;
    for (std::size_t k = 1; k < s.res.history.size(); ++k)
      monotone = monotone && s.res.history[k] <= s.res.history[k - 1] +
                                                     1e-12 * (1.0 + std::abs(s.res.history[k - 1]));
    double drift = feasibility_drift(s.dp, s.res.weights.weights);
    worst_drift = std::max(worst_drift, drift);
    bool gap_ok = s.res.gap <= s.opt.gap_tol * (1.0 + std::abs(s.res.objective));
    if (!(monotone && drift <= kFeasTol && gap_ok)) {
      ok = false;
      d << s.name << (monotone ? "" : ":history-not-monotone")
        << (drift <= kFeasTol ? "" : ":feasibility-drift") << (gap_ok ? "" : ":gap-bound") << " ";
    }
  }

  // Brute-force lattice agreement on tiny singleton-K instances.
  double worst_lat = 0.0;
  {
    SolveOptions o;
    o.gap_tol = 1e-9;
    o.max_iters = 100000;

    DiscreteProblem dp1 = assemble(
        make_instance({iu(-1.0, 1.0)}, mat({{1.0}}), MassPolyhedron::fixed(vec({1.0}))), {4});
    double j1 = lattice_minimum_4(dp1.block(0, 0), dp1.field(), 1.0, 400);
    worst_lat = std::max(worst_lat, std::abs(solve(dp1, o).objective - j1));

    DiscreteProblem dp2 = assemble(
        make_instance({iu(0.0, 2.0)}, mat({{1.0}}), MassPolyhedron::fixed(vec({1.0})),
                      {ExternalField({0.0, 0.0, 1.0}, 0.0)}),
        {4});
    double j2 = lattice_minimum_4(dp2.block(0, 0), dp2.field(), 1.0, 400);
    worst_lat = std::max(worst_lat, std::abs(solve(dp2, o).objective - j2));

    // Decoupled pair: the lattice minimum separates into per-block searches.
    DiscreteProblem dp3 = assemble(
        make_instance({iu(-4.0, 4.0), iu(1.0, 3.0)}, Eigen::MatrixXd::Identity(2, 2),
                      MassPolyhedron::fixed(vec({0.7, 0.3}))),
        {3, 3});
    double j3 = lattice_minimum_3(dp3.block(0, 0), dp3.field().head(3), 0.7, 1200) +
                lattice_minimum_3(dp3.block(1, 1), dp3.field().tail(3), 0.3, 1200);
    worst_lat = std::max(worst_lat, std::abs(solve(dp3, o).objective - j3));
  }
  ok = ok && worst_lat <= kLatticeTol;

  d << fmt("%d runs audited, worst feasibility drift %.1e (tol %.0e), "
           "worst lattice gap %.1e (tol %.0e)",
           audited, worst_drift, kFeasTol, worst_lat, kLatticeTol);
  return {ok, "solver contracts: " + d.str()};
}

// ---------------------------------------------------------------------------
// 8. Degenerate decoupled pair on [-4,4]: forced run reaches -log 2 at a
//    vertex mass split, and relabeling the components permutes the answer.
Outcome check_degenerate_pair() {
  namespace fs = std::filesystem;
  RunConfig cfg{{iu(-4.0, 4.0), iu(-4.0, 4.0)},
                {ExternalField(), ExternalField()},
                InteractionMatrix::factorize(Eigen::MatrixXd::Identity(2, 2)),
                MassPolyhedron(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)),
                std::nullopt};

  RunOverrides ov;
  ov.force = true;
  ov.overwrite = true;
  std::ostringstream sink;
  fs::path base = fs::temp_directory_path() / "vequil_acceptance";

  auto run = [&](std::vector<int> nodes, const std::string& name, int& rc) {
    cfg.nodes = std::move(nodes);
    fs::path out = base / name;
    rc = run_solve(cfg, out.string(), ov, sink);
    std::ifstream in(out / "report.json");
    nlohmann::json rep = nlohmann::json::parse(in);
    DiscreteProblem dp = assemble(cfg.problem(), cfg.nodes);
    MeasureTuple ref{dp.grids(), Eigen::VectorXd::Zero(dp.total_nodes())};
    MeasureTuple sol = load_solution_csv((out / "solution.csv").string(), ref);
    return std::pair<double, Eigen::VectorXd>(rep["objective"].get<double>(), sol.masses());
  };

  int rc1 = 0, rc2 = 0;
  auto [j1, m1] = run({200, 240}, "degenerate_a", rc1);
  auto [j2, m2] = run({240, 200}, "degenerate_b", rc2);

  auto is_vertex = [](const Eigen::VectorXd& m) {
    return m.maxCoeff() >= 1.0 - kVertexTol && m.minCoeff() <= kVertexTol;
  };
  bool permuted = std::abs(m1(0) - m2(1)) <= kVertexTol && std::abs(m1(1) - m2(0)) <= kVertexTol;
  bool ok = std::abs(j1 + kLog2) <= kScalarTol && std::abs(j2 + kLog2) <= kScalarTol &&
            is_vertex(m1) && is_vertex(m2) && permuted && rc1 == rc2 &&
            rc1 != kExitInputError && rc1 != kExitAssumptionsFail;

  // The same instances solved directly feed the contract audit.
  for (const std::vector<int>& nodes : {std::vector<int>{200, 240}, std::vector<int>{240, 200}}) {
    cfg.nodes = nodes;
    DiscreteProblem dp = assemble(cfg.problem(), cfg.nodes);
    SolveOptions o;
    SolveResult r = solve(dp, o);
    g_samples.push_back({fmt("degenerate{%d,%d}", nodes[0], nodes[1]), std::move(dp), r, o});
  }

  return {ok, fmt("degenerate pair: J=(%.6f, %.6f) vs -log2, masses (%.3g, %.3g) / "
                  "(%.3g, %.3g), permuted %s, exit %d",
                  j1, j2, m1(0), m1(1), m2(0), m2(1), permuted ? "yes" : "NO", rc1)};
}

}  // namespace

int main() {
  Outcome results[8];
  auto guard = [](Outcome (*f)(), const char* fallback) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string(fallback) + ": exception: " + e.what()};
    }
  };
  results[0] = guard(check_scalar_energies, "scalar equilibrium energy");
  results[1] = guard(check_condenser_energy, "condenser capacity");
  results[2] = guard(check_overlap_closed_form, "overlap closed form");
  results[3] = guard(check_assumption_fixtures, "assumption fixtures");
  results[4] = guard(check_graph_equivalences, "graph equivalences");
  results[5] = guard(check_discrete_positivity, "discrete positivity");
  results[7] = guard(check_degenerate_pair, "degenerate pair");
  results[6] = guard(check_solver_contracts, "solver contracts");  // audits all runs above

  int failures = 0;
  for (int k = 0; k < 8; ++k) {
    if (!results[k].ok) ++failures;
    std::printf("%s  %d. %s\n", results[k].ok ? "PASS" : "FAIL", k + 1, results[k].detail.c_str());
  }
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures;
}
