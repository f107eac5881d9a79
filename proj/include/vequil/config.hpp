#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <vequil/graph.hpp>
#include <vequil/problem.hpp>
#include <vequil/solver.hpp>

namespace vequil {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A fully parsed problem description plus run parameters. The JSON schema:
///
///   {
///     "sets":     [ [[-1, 1]], [["-inf", -2], [2, "inf"]] ],
///     "C":        [[1, -1], [-1, 1]],                  // exactly one of
///     "graph":    {"vertices": 4, "edges": [[1,2]]},   // "C" / "graph"
///     "fields":   [ {"poly": [0, 0, 1]}, {"poly": [], "log": 2.0} ],
///     "masses":   {"fixed": [1, 1]}                    // or {"simplex": t}
///                                                      // or {"A": rows, "a": [...]}
///     "nodes":    400,                                 // or per-component list
///     "truncation": 6.5,                               // optional radius override
///     "solver":   {"max_iters": 20000, "gap_tol": 1e-6,
///                  "away_steps": true, "seed": 0},
///     "eq_tol": 0.05, "boundary_tol": 1e-3, "audit_density": 4
///   }
///
/// "fields" is optional (default: all-zero fields). Intervals accept the
/// string tokens "inf" / "-inf" for unbounded endpoints. Graph edges are
/// 1-indexed vertex pairs; each edge becomes one measure component with
/// C = transpose(incidence) * incidence.
struct RunConfig {
  std::vector<IntervalUnion> sets;
  std::vector<ExternalField> fields;
  InteractionMatrix interaction;
  MassPolyhedron masses;
  std::optional<DirectedMultigraph> graph;

  std::vector<int> nodes;  // per component
  std::optional<double> truncation_radius;
  SolveOptions solver;
  double eq_tol = 5e-2;
  double boundary_tol = 1e-3;
  int audit_density = 4;

  ProblemInstance problem() const { return ProblemInstance(sets, fields, interaction, masses); }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

inline double parse_endpoint(const nlohmann::json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    config_fail(path, "expected a number or \"inf\"/\"-inf\", got \"" + s + "\"");
  }
  config_fail(path, "expected a number or \"inf\"/\"-inf\"");
}

inline IntervalUnion parse_set(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_fail(path, "expected a non-empty list of intervals");
  std::vector<Interval> ivs;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto& iv = v[k];
    const std::string p = path + "[" + std::to_string(k) + "]";
    if (!iv.is_array() || iv.size() != 2) config_fail(p, "expected an interval [lo, hi]");
    double lo = parse_endpoint(iv[0], p + "[0]");
    double hi = parse_endpoint(iv[1], p + "[1]");
    if (!(lo <= hi)) config_fail(p, "interval endpoints out of order");
    ivs.push_back({lo, hi});
  }
  try {
    return IntervalUnion(ivs);
  } catch (const std::exception& e) {
    config_fail(path, e.what());
  }
}

inline Eigen::MatrixXd parse_matrix(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_fail(path, "expected a non-empty list of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) config_fail(path + "[0]", "expected a non-empty row");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string p = path + "[" + std::to_string(r) + "]";
    if (!v[r].is_array() || v[r].size() != cols) config_fail(p, "ragged or non-array row");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number()) config_fail(p + "[" + std::to_string(c) + "]", "expected a number");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
    }
  }
  return M;
}

inline Eigen::VectorXd parse_vector(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array()) config_fail(path, "expected a list of numbers");
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) config_fail(path + "[" + std::to_string(k) + "]", "expected a number");
    x(static_cast<Eigen::Index>(k)) = v[k].get<double>();
  }
  return x;
}

inline ExternalField parse_field(const nlohmann::json& v, const std::string& path) {
  if (!v.is_object()) config_fail(path, "expected an object with \"poly\" and optional \"log\"");
  std::vector<double> coeffs{0.0};
  double log_coeff = 0.0;
  for (const auto& [key, val] : v.items()) {
    if (key == "poly") {
      Eigen::VectorXd c = parse_vector(val, path + ".poly");
      coeffs.assign(c.data(), c.data() + c.size());
      if (coeffs.empty()) coeffs = {0.0};
    } else if (key == "log") {
      if (!val.is_number()) config_fail(path + ".log", "expected a number");
      log_coeff = val.get<double>();
    } else {
      config_fail(path + "." + key, "unknown field key");
    }
  }
  try {
    return ExternalField(std::move(coeffs), log_coeff);
  } catch (const std::exception& e) {
    config_fail(path, e.what());
  }
}

inline MassPolyhedron parse_masses(const nlohmann::json& v, int d, const std::string& path) {
  if (!v.is_object()) config_fail(path, "expected {\"fixed\"| \"simplex\"| \"A\",\"a\"}");
  if (v.contains("fixed")) {
    Eigen::VectorXd t = parse_vector(v["fixed"], path + ".fixed");
    if (t.size() != d) config_fail(path + ".fixed", "mass vector length must match components");
    return MassPolyhedron::fixed(t);
  }
  if (v.contains("simplex")) {
    if (!v["simplex"].is_number()) config_fail(path + ".simplex", "expected the total mass");
    return MassPolyhedron::simplex(d, v["simplex"].get<double>());
  }
  if (v.contains("A") && v.contains("a")) {
    Eigen::MatrixXd A = parse_matrix(v["A"], path + ".A");
    Eigen::VectorXd a = parse_vector(v["a"], path + ".a");
    if (A.cols() != d) config_fail(path + ".A", "column count must match components");
    if (a.size() != A.rows()) config_fail(path + ".a", "length must match rows of A");
    return MassPolyhedron(std::move(A), std::move(a));
  }
  config_fail(path, "expected one of \"fixed\", \"simplex\", or \"A\"+\"a\"");
}

}  // namespace detail

inline RunConfig parse_config_json(const nlohmann::json& j) {
  using detail::config_fail;
  if (!j.is_object()) config_fail("$", "top level must be an object");

  static const std::vector<std::string> known = {
      "sets",   "C",          "graph",  "fields",       "masses",       "nodes",
      "solver", "truncation", "eq_tol", "boundary_tol", "audit_density"};
  for (const auto& [key, val] : j.items()) {
    (void)val;
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) config_fail(key, "unknown top-level key");
  }

  if (!j.contains("sets")) config_fail("sets", "missing");
  if (!j["sets"].is_array() || j["sets"].empty()) config_fail("sets", "expected a non-empty list");
  std::vector<IntervalUnion> sets;
  for (std::size_t i = 0; i < j["sets"].size(); ++i)
    sets.push_back(detail::parse_set(j["sets"][i], "sets[" + std::to_string(i) + "]"));
  const int d = static_cast<int>(sets.size());

  const bool has_C = j.contains("C");
  const bool has_graph = j.contains("graph");
  if (has_C == has_graph) config_fail("C", "exactly one of \"C\" or \"graph\" is required");

  std::optional<DirectedMultigraph> graph;
  InteractionMatrix interaction = [&] {
    if (has_C) {
      Eigen::MatrixXd C = detail::parse_matrix(j["C"], "C");
      if (C.rows() != d || C.cols() != d) config_fail("C", "must be d x d for d components");
      try {
        return InteractionMatrix::factorize(C);
      } catch (const std::exception& e) {
        config_fail("C", e.what());
      }
    }
    const auto& g = j["graph"];
    if (!g.is_object() || !g.contains("vertices") || !g.contains("edges"))
      config_fail("graph", "expected {\"vertices\": n, \"edges\": [[u,v],...]}");
    if (!g["vertices"].is_number_integer() || g["vertices"].get<int>() < 1)
      config_fail("graph.vertices", "expected a positive integer");
    const int n = g["vertices"].get<int>();
    if (!g["edges"].is_array()) config_fail("graph.edges", "expected a list of [u,v] pairs");
    std::vector<std::pair<int, int>> edges;
    for (std::size_t k = 0; k < g["edges"].size(); ++k) {
      const auto& e = g["edges"][k];
      const std::string p = "graph.edges[" + std::to_string(k) + "]";
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        config_fail(p, "expected a pair of 1-indexed vertices");
      int u = e[0].get<int>(), v = e[1].get<int>();
      if (u < 1 || u > n || v < 1 || v > n) config_fail(p, "vertex index out of range");
      edges.push_back({u - 1, v - 1});
    }
    if (static_cast<int>(edges.size()) != d)
      config_fail("graph.edges", "one edge per measure component required");
    try {
      graph = DirectedMultigraph(n, std::move(edges));
      return interaction_from_graph(*graph);
    } catch (const std::exception& e) {
      config_fail("graph", e.what());
    }
  }();

  std::vector<ExternalField> fields(static_cast<std::size_t>(d));
  if (j.contains("fields")) {
    if (!j["fields"].is_array() || static_cast<int>(j["fields"].size()) != d)
      config_fail("fields", "expected one field per component");
    for (std::size_t i = 0; i < j["fields"].size(); ++i)
      fields[i] = detail::parse_field(j["fields"][i], "fields[" + std::to_string(i) + "]");
  }

  if (!j.contains("masses")) config_fail("masses", "missing");
  MassPolyhedron masses = detail::parse_masses(j["masses"], d, "masses");

  RunConfig cfg{std::move(sets), std::move(fields), std::move(interaction),
                std::move(masses), std::move(graph)};

  cfg.nodes.assign(static_cast<std::size_t>(d), 400);
  if (j.contains("nodes")) {
    const auto& nd = j["nodes"];
    if (nd.is_number_integer()) {
      cfg.nodes.assign(static_cast<std::size_t>(d), nd.get<int>());
    } else if (nd.is_array() && static_cast<int>(nd.size()) == d) {
      for (std::size_t i = 0; i < nd.size(); ++i) {
        if (!nd[i].is_number_integer())
          config_fail("nodes[" + std::to_string(i) + "]", "expected an integer");
        cfg.nodes[i] = nd[i].get<int>();
      }
    } else {
      config_fail("nodes", "expected an integer or one integer per component");
    }
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i)
      if (cfg.nodes[i] < 2) config_fail("nodes", "grid sizes must be >= 2");
  }

  if (j.contains("truncation")) {
    if (!j["truncation"].is_number() || !(j["truncation"].get<double>() > 0.0))
      config_fail("truncation", "expected a positive radius");
    cfg.truncation_radius = j["truncation"].get<double>();
  }

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (!s.is_object()) config_fail("solver", "expected an object");
    for (const auto& [key, val] : s.items()) {
      if (key == "max_iters") {
        if (!val.is_number_integer()) config_fail("solver.max_iters", "expected an integer");
        cfg.solver.max_iters = val.get<long>();
      } else if (key == "gap_tol") {
        if (!val.is_number()) config_fail("solver.gap_tol", "expected a number");
        cfg.solver.gap_tol = val.get<double>();
      } else if (key == "away_steps") {
        if (!val.is_boolean()) config_fail("solver.away_steps", "expected a boolean");
        cfg.solver.away_steps = val.get<bool>();
      } else if (key == "seed") {
        if (!val.is_number_integer()) config_fail("solver.seed", "expected an integer");
        cfg.solver.seed = val.get<unsigned>();
      } else {
        config_fail("solver." + key, "unknown solver key");
      }
    }
    try {
      cfg.solver.validate();
    } catch (const std::exception& e) {
      config_fail("solver", e.what());
    }
  }

  if (j.contains("eq_tol")) {
    if (!j["eq_tol"].is_number() || !(j["eq_tol"].get<double>() > 0.0))
      config_fail("eq_tol", "expected a positive number");
    cfg.eq_tol = j["eq_tol"].get<double>();
  }
  if (j.contains("boundary_tol")) {
    if (!j["boundary_tol"].is_number() || !(j["boundary_tol"].get<double>() > 0.0))
      config_fail("boundary_tol", "expected a positive number");
    cfg.boundary_tol = j["boundary_tol"].get<double>();
  }
  if (j.contains("audit_density")) {
    if (!j["audit_density"].is_number_integer() || j["audit_density"].get<int>() < 1)
      config_fail("audit_density", "expected a positive integer");
    cfg.audit_density = j["audit_density"].get<int>();
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config_json(j);
}

}  // namespace vequil
