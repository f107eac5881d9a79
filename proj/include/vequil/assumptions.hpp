#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <vequil/graph.hpp>
#include <vequil/linprog.hpp>
#include <vequil/problem.hpp>

namespace vequil {

enum class CheckStatus { pass, fail, indeterminate };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "indeterminate";
  }
}

struct PairCheck {
  CheckStatus status = CheckStatus::indeterminate;
  std::vector<std::pair<int, int>> violating_pairs;
};

struct SignWitnessCheck {
  CheckStatus status = CheckStatus::indeterminate;
  Eigen::VectorXd witness;  // y in Im(C) with the required signs, when pass
  std::string note;
};

struct DependenceCheck {
  CheckStatus status = CheckStatus::indeterminate;
  std::vector<int> violating_set;  // dependent columns over a fat intersection
  std::string note;
};

struct KernelCheck {
  CheckStatus status = CheckStatus::indeterminate;
  Eigen::VectorXd kernel_vector;  // Ker(A) direction escaping Ker(C), when fail
};

struct AdmissibilityCheck {
  CheckStatus status = CheckStatus::indeterminate;
  std::vector<bool> per_component;
};

struct KCheck {
  bool feasible = false;
  bool compact = false;
  Eigen::VectorXd feasible_point;
  Eigen::VectorXd recession_direction;
};

/// Touching components must attract or ignore each other: distance-0 pairs
/// need C_ij >= 0.
inline PairCheck check_compatNS(const ProblemInstance& p) {
  PairCheck out;
  const int d = p.dimension();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (set_distance(p.sets[static_cast<std::size_t>(i)],
                       p.sets[static_cast<std::size_t>(j)]) == 0.0 &&
          p.interaction.coeff(i, j) < 0.0)
        out.violating_pairs.push_back({i, j});
  out.status = out.violating_pairs.empty() ? CheckStatus::pass : CheckStatus::fail;
  return out;
}

/// Stronger variant: distance-0 pairs must not interact at all (C_ij = 0).
inline PairCheck check_cij0(const ProblemInstance& p) {
  PairCheck out;
  const int d = p.dimension();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (set_distance(p.sets[static_cast<std::size_t>(i)],
                       p.sets[static_cast<std::size_t>(j)]) == 0.0 &&
          p.interaction.coeff(i, j) != 0.0)
        out.violating_pairs.push_back({i, j});
  out.status = out.violating_pairs.empty() ? CheckStatus::pass : CheckStatus::fail;
  return out;
}

/// Sign-coherence witness: some y in Im(C) with y_i y_j > 0 for every pair
/// of touching sets (and y_i != 0 throughout, since each set touches
/// itself). Touching forces a common sign per connected component of the
/// intersection graph; the search enumerates sign patterns over components
/// (global flip fixed by giving the first component sign +) and solves the
/// LP feasibility problem  y = Cz, s_i y_i >= 1  for each pattern.
inline SignWitnessCheck check_H2(const ProblemInstance& p) {
  SignWitnessCheck out;
  const int d = p.dimension();
  const Eigen::MatrixXd& C = p.interaction.C();

  if (p.interaction.invertible()) {
    // C nonsingular: y = (1,...,1) = C (C^{-1} 1) works for every geometry.
    out.status = CheckStatus::pass;
    out.witness = Eigen::VectorXd::Ones(d);
    out.note = "C invertible; constant witness";
    return out;
  }

  auto comps = connected_components(d, intersection_graph_edges(p.sets));
  const std::size_t ncomp = comps.size();
  if (ncomp > 17) {
    out.status = CheckStatus::indeterminate;
    out.note = "too many intersection components to enumerate sign patterns";
    return out;
  }
  std::vector<int> comp_of(static_cast<std::size_t>(d), 0);
  for (std::size_t c = 0; c < ncomp; ++c)
    for (int v : comps[c]) comp_of[static_cast<std::size_t>(v)] = static_cast<int>(c);

  // Variables (z+, z-, u) >= 0 with  s_i (C(z+ - z-))_i - u_i = 1.
  try {
    const std::uint64_t npat = std::uint64_t{1} << (ncomp - 1);
    for (std::uint64_t pat = 0; pat < npat; ++pat) {
      Eigen::VectorXd s(d);
      for (int i = 0; i < d; ++i) {
        int c = comp_of[static_cast<std::size_t>(i)];
        s(i) = (c == 0) ? 1.0 : ((pat >> (c - 1)) & 1 ? -1.0 : 1.0);
      }
      Eigen::MatrixXd A_lp(d, 3 * d);
      A_lp.block(0, 0, d, d) = s.asDiagonal() * C;
      A_lp.block(0, d, d, d) = -(s.asDiagonal() * C);
      A_lp.block(0, 2 * d, d, d) = -Eigen::MatrixXd::Identity(d, d);
      LpResult r = solve_lp(A_lp, Eigen::VectorXd::Ones(d),
                            Eigen::VectorXd::Zero(3 * d));
      if (r.status == LpStatus::optimal) {
        Eigen::VectorXd z = r.x.head(d) - r.x.segment(d, d);
        out.status = CheckStatus::pass;
        out.witness = C * z;
        return out;
      }
    }
    out.status = CheckStatus::fail;
  } catch (const std::exception& e) {
    out.status = CheckStatus::indeterminate;
    out.note = std::string("LP failure: ") + e.what();
  }
  return out;
}

namespace detail {

/// Numerical rank of the columns of C indexed by `idx`.
inline int column_rank(const Eigen::MatrixXd& C, const std::vector<int>& idx, double tol_rel) {
  Eigen::MatrixXd S(C.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) S.col(static_cast<Eigen::Index>(k)) = C.col(idx[k]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > tol_rel * sv(0)) ++r;
  return r;
}

inline bool columns_dependent(const Eigen::MatrixXd& C, const std::vector<int>& idx,
                              double tol_rel) {
  return column_rank(C, idx, tol_rel) < static_cast<int>(idx.size());
}

/// Maximal index families whose common set intersection contains an
/// interval of positive length, found by sweeping the elementary segments of
/// the endpoint arrangement.
inline std::vector<std::vector<int>> fat_intersection_families(
    const std::vector<IntervalUnion>& sets) {
  std::vector<double> bp;
  for (const auto& s : sets)
    for (const auto& iv : s.intervals()) {
      if (std::isfinite(iv.lo)) bp.push_back(iv.lo);
      if (std::isfinite(iv.hi)) bp.push_back(iv.hi);
    }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  std::vector<std::pair<double, double>> segments;
  if (bp.empty()) {
    segments.push_back({-kInf, kInf});
  } else {
    segments.push_back({-kInf, bp.front()});
    for (std::size_t t = 0; t + 1 < bp.size(); ++t) segments.push_back({bp[t], bp[t + 1]});
    segments.push_back({bp.back(), kInf});
  }

  std::vector<std::vector<int>> families;
  for (const auto& [u, v] : segments) {
    if (!(v - u > 0.0)) continue;
    std::vector<int> active;
    for (std::size_t i = 0; i < sets.size(); ++i)
      for (const auto& iv : sets[i].intervals())
        if (iv.lo <= u && iv.hi >= v) {
          active.push_back(static_cast<int>(i));
          break;
        }
    if (!active.empty()) families.push_back(std::move(active));
  }
  // Keep one copy of each family and drop those contained in another.
  std::sort(families.begin(), families.end());
  families.erase(std::unique(families.begin(), families.end()), families.end());
  std::vector<std::vector<int>> maximal;
  for (const auto& f : families) {
    bool contained = false;
    for (const auto& g : families) {
      if (&f == &g || f.size() >= g.size()) continue;
      if (std::includes(g.begin(), g.end(), f.begin(), f.end())) {
        contained = true;
        break;
      }
    }
    if (!contained) maximal.push_back(f);
  }
  return maximal;
}

/// Shrinks a dependent column set to a minimal one (a circuit): repeatedly
/// drop any index whose removal keeps the columns dependent.
inline std::vector<int> minimize_dependent_set(const Eigen::MatrixXd& C, std::vector<int> set,
                                               double tol_rel) {
  bool shrunk = true;
  while (shrunk && set.size() > 1) {
    shrunk = false;
    for (std::size_t k = 0; k < set.size(); ++k) {
      std::vector<int> trial;
      trial.reserve(set.size() - 1);
      for (std::size_t l = 0; l < set.size(); ++l)
        if (l != k) trial.push_back(set[l]);
      if (columns_dependent(C, trial, tol_rel)) {
        set = std::move(trial);
        shrunk = true;
        break;
      }
    }
  }
  return set;
}

}  // namespace detail

/// Degeneracy needs a thin meeting ground: every index set with linearly
/// dependent interaction columns must have a capacity-zero common
/// intersection. With a generating graph the minimal dependent sets are
/// exactly the undirected cycles; otherwise the check runs over the maximal
/// families with a fat common intersection and tests column rank there.
inline DependenceCheck check_H1(const ProblemInstance& p,
                                const std::optional<DirectedMultigraph>& g = std::nullopt,
                                double tol_rel = 1e-10) {
  DependenceCheck out;
  const Eigen::MatrixXd& C = p.interaction.C();

  if (g.has_value()) {
    CycleEnumeration cyc = enumerate_undirected_cycles(*g);
    if (!cyc.overflow) {
      for (const auto& cycle : cyc.cycles) {
        if (intersection_capacity_positive(p.sets, cycle)) {
          out.status = CheckStatus::fail;
          out.violating_set = cycle;
          return out;
        }
      }
      out.status = CheckStatus::pass;
      out.note = "verified over the undirected cycles of the generating graph";
      return out;
    }
    out.note = "cycle enumeration overflow; fell back to column-rank search";
  }

  for (const auto& family : detail::fat_intersection_families(p.sets)) {
    if (detail::columns_dependent(C, family, tol_rel)) {
      out.status = CheckStatus::fail;
      out.violating_set = detail::minimize_dependent_set(C, family, tol_rel);
      return out;
    }
  }
  out.status = CheckStatus::pass;
  return out;
}

/// Ker(A) must sit inside Ker(C): otherwise two feasible mass vectors can
/// carry distinct minimizers. Checked on an orthonormal kernel basis of A.
inline KernelCheck check_imageAC(const ProblemInstance& p, double tol = 1e-10) {
  KernelCheck out;
  const Eigen::MatrixXd& A = p.masses.A();
  const Eigen::MatrixXd& C = p.interaction.C();
  const int d = static_cast<int>(A.cols());

  Eigen::MatrixXd kernel;
  if (A.rows() == 0) {
    kernel = Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0)
      for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > tol * sv(0)) ++rank;
    kernel = svd.matrixV().rightCols(d - rank);
  }

  const double cscale = C.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
    Eigen::VectorXd v = kernel.col(k);
    if ((C * v).cwiseAbs().maxCoeff() > tol * std::max(1.0, cscale)) {
      out.status = CheckStatus::fail;
      out.kernel_vector = v;
      return out;
    }
  }
  out.status = CheckStatus::pass;
  return out;
}

/// Admissibility of each field on its set (continuity is built into the
/// field class; only the growth condition on unbounded sets can fail).
inline AdmissibilityCheck check_admissibility(const ProblemInstance& p) {
  AdmissibilityCheck out;
  out.per_component.resize(static_cast<std::size_t>(p.dimension()));
  bool all = true;
  for (int i = 0; i < p.dimension(); ++i) {
    bool ok = p.fields[static_cast<std::size_t>(i)].admissible_on(
        p.sets[static_cast<std::size_t>(i)]);
    out.per_component[static_cast<std::size_t>(i)] = ok;
    all = all && ok;
  }
  out.status = all ? CheckStatus::pass : CheckStatus::fail;
  return out;
}

inline KCheck check_K(const ProblemInstance& p) {
  KCheck out;
  out.feasible = p.masses.feasible();
  out.compact = p.masses.compact();
  if (out.feasible) out.feasible_point = p.masses.feasible_point();
  if (!out.compact) out.recession_direction = p.masses.recession_direction();
  return out;
}

struct AssumptionReport {
  PairCheck compatNS;
  SignWitnessCheck H2;
  DependenceCheck H1;
  KernelCheck imageAC;
  PairCheck cij0;
  AdmissibilityCheck admissible;
  KCheck K;
  bool existence_guaranteed = false;
  bool uniqueness_guaranteed = false;
};

inline AssumptionReport check_all(const ProblemInstance& p,
                                  const std::optional<DirectedMultigraph>& g = std::nullopt) {
  AssumptionReport rep;
  rep.compatNS = check_compatNS(p);
  rep.H2 = check_H2(p);
  rep.H1 = check_H1(p, g);
  rep.imageAC = check_imageAC(p);
  rep.cij0 = check_cij0(p);
  rep.admissible = check_admissibility(p);
  rep.K = check_K(p);
  rep.existence_guaranteed = rep.H2.status == CheckStatus::pass && rep.K.compact &&
                             rep.K.feasible && rep.admissible.status == CheckStatus::pass;
  rep.uniqueness_guaranteed = rep.existence_guaranteed &&
                              rep.H1.status == CheckStatus::pass &&
                              rep.imageAC.status == CheckStatus::pass;
  return rep;
}

}  // namespace vequil
