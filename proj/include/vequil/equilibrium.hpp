#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <vequil/discretize.hpp>
#include <vequil/numeric.hpp>
#include <vequil/problem.hpp>

namespace vequil {

namespace kernel {

/// -log|x - t| averaged over the cell [xc - h/2, xc + h/2] when x lies
/// inside it (closed form; removes the singularity), midpoint value else.
inline double point_entry(double x, double xc, double h) {
  double dist = std::abs(x - xc);
  if (dist < 0.5 * h) {
    auto xlogx = [](double t) { return t > 0.0 ? t * std::log(t) : 0.0; };
    double a = x - (xc - 0.5 * h);
    double b = (xc + 0.5 * h) - x;
    return 1.0 - (xlogx(a) + xlogx(b)) / h;
  }
  return -std::log(dist);
}

}  // namespace kernel

/// Logarithmic potential of component i of the tuple at x.
inline double potential(const MeasureTuple& m, int i, double x) {
  const Grid& g = m.grids[static_cast<std::size_t>(i)];
  const int o = m.offset(i);
  double acc = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    double wk = m.weights(o + k);
    if (wk == 0.0) continue;
    acc += wk * kernel::point_entry(x, g.nodes[static_cast<std::size_t>(k)],
                                    g.widths[static_cast<std::size_t>(k)]);
  }
  return acc;
}

/// Partial potential felt by component i: sum_j C_ij U^{mu_j}(x).
inline double partial_potential(const MeasureTuple& m, const Eigen::MatrixXd& C, int i,
                                double x) {
  std::vector<double> terms(static_cast<std::size_t>(m.components()));
  for (int j = 0; j < m.components(); ++j) {
    double cij = C(i, j);
    terms[static_cast<std::size_t>(j)] = (cij == 0.0) ? 0.0 : cij * potential(m, j, x);
  }
  return stable_sum(terms);
}

/// Discrete weighted energy, recomputed by plain summation over node pairs
/// (audit path, independent of the assembled energy blocks).
inline double energy(const MeasureTuple& m, const Eigen::MatrixXd& C,
                     const std::vector<ExternalField>& Q) {
  const int d = m.components();
  if (static_cast<int>(Q.size()) != d) throw std::invalid_argument("energy: field count mismatch");
  double quad = 0.0, lin = 0.0;
  for (int i = 0; i < d; ++i) {
    const Grid& gi = m.grids[static_cast<std::size_t>(i)];
    const int oi = m.offset(i);
    for (int j = 0; j < d; ++j) {
      double cij = C(i, j);
      if (cij == 0.0) continue;
      const Grid& gj = m.grids[static_cast<std::size_t>(j)];
      const int oj = m.offset(j);
      const bool same = (i == j);
      for (int k = 0; k < gi.size(); ++k) {
        double wk = m.weights(oi + k);
        if (wk == 0.0) continue;
        for (int l = 0; l < gj.size(); ++l) {
          double wl = m.weights(oj + l);
          if (wl == 0.0) continue;
          double e = (same && k == l)
                         ? kernel::self_entry(gi.widths[static_cast<std::size_t>(k)])
                         : kernel::entry(gi.nodes[static_cast<std::size_t>(k)],
                                         gi.widths[static_cast<std::size_t>(k)],
                                         gj.nodes[static_cast<std::size_t>(l)],
                                         gj.widths[static_cast<std::size_t>(l)]);
          quad += cij * wk * wl * e;
        }
      }
    }
    for (int k = 0; k < gi.size(); ++k)
      lin += m.weights(oi + k) * Q[static_cast<std::size_t>(i)](
                                     gi.nodes[static_cast<std::size_t>(k)]);
  }
  return quad + 2.0 * lin;
}

/// Per-component equilibrium constants and the constraint multipliers.
struct MultiplierRecovery {
  Eigen::VectorXd w;          // mass-weighted average of U_i + Q_i (NaN when inactive)
  std::vector<bool> active;   // component mass above the floor
  Eigen::VectorXd F;          // least-squares solution of (A' F)_i = w_i on active rows
  double residual = 0.0;      // l2 misfit on the active rows
  double mass_floor = 0.0;
};

inline MultiplierRecovery recover_multipliers(const MeasureTuple& m, const ProblemInstance& p,
                                              double mass_floor_rel = 1e-9) {
  const int d = m.components();
  MultiplierRecovery out;
  out.mass_floor = mass_floor_rel * m.weights.sum();
  out.w = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  out.active.assign(static_cast<std::size_t>(d), false);

  Eigen::VectorXd masses = m.masses();
  int n_active = 0;
  for (int i = 0; i < d; ++i) {
    if (masses(i) > out.mass_floor) {
      out.active[static_cast<std::size_t>(i)] = true;
      ++n_active;
    }
  }
  if (n_active == 0)
    throw std::invalid_argument("recover_multipliers: every component has zero mass");

  for (int i = 0; i < d; ++i) {
    if (!out.active[static_cast<std::size_t>(i)]) continue;
    const Grid& g = m.grids[static_cast<std::size_t>(i)];
    const int o = m.offset(i);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      double wk = m.weights(o + k);
      if (wk <= out.mass_floor) continue;
      double x = g.nodes[static_cast<std::size_t>(k)];
      num += wk * (partial_potential(m, p.interaction.C(), i, x) +
                   p.fields[static_cast<std::size_t>(i)](x));
      den += wk;
    }
    out.w(i) = num / den;
  }

  // A' F = w on the active rows, least squares (minimum-norm on ties).
  const Eigen::MatrixXd At = p.masses.A().transpose();
  Eigen::MatrixXd T(n_active, At.cols());
  Eigen::VectorXd rhs(n_active);
  int r = 0;
  for (int i = 0; i < d; ++i) {
    if (!out.active[static_cast<std::size_t>(i)]) continue;
    T.row(r) = At.row(i);
    rhs(r) = out.w(i);
    ++r;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.F = svd.solve(rhs);
  out.residual = (T * out.F - rhs).norm();
  return out;
}

/// Certification report for a candidate tuple against the variational
/// conditions: the field U_i + Q_i must sit above the level (A'F)_i on the
/// whole set (checked on an audit grid) and at that level on the support
/// (checked at the weight-carrying nodes).
struct EquilibriumReport {
  Eigen::VectorXd w;
  std::vector<bool> active;
  Eigen::VectorXd F;
  double residual = 0.0;
  double lower_violation = 0.0;   // worst shortfall below the level, off-support side
  double upper_violation = 0.0;   // worst excess above the level on the support
  Eigen::VectorXd boundary_mass;  // outermost-2-cell mass fraction per truncated end
  bool pass = false;
  double eq_tol = 0.0;
  double boundary_tol = 0.0;
  std::string advice;
};

/// Audit points for one grid: `density` midpoints per cell plus each
/// interval endpoint nudged inward by a tenth of its end cell.
inline std::vector<double> audit_points(const Grid& g, int density) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(g.size() * density + 8));
  for (int k = 0; k < g.size(); ++k) {
    double left = g.cell_left(k);
    double h = g.widths[static_cast<std::size_t>(k)] / density;
    for (int j = 0; j < density; ++j) pts.push_back(left + (j + 0.5) * h);
  }
  for (int k = 0; k < g.size(); ++k) {
    bool first_of_interval =
        (k == 0) || (g.interval_id[static_cast<std::size_t>(k)] !=
                     g.interval_id[static_cast<std::size_t>(k) - 1]);
    bool last_of_interval =
        (k == g.size() - 1) || (g.interval_id[static_cast<std::size_t>(k)] !=
                                g.interval_id[static_cast<std::size_t>(k) + 1]);
    if (first_of_interval)
      pts.push_back(g.cell_left(k) + 0.1 * g.widths[static_cast<std::size_t>(k)]);
    if (last_of_interval)
      pts.push_back(g.cell_right(k) - 0.1 * g.widths[static_cast<std::size_t>(k)]);
  }
  return pts;
}

inline EquilibriumReport verify(const MeasureTuple& m, const ProblemInstance& p,
                                const MultiplierRecovery& mult, int audit_density = 4,
                                double eq_tol = 5e-2, double boundary_tol = 1e-3,
                                double support_tail = 1e-3) {
  const int d = m.components();
  EquilibriumReport rep;
  rep.w = mult.w;
  rep.active = mult.active;
  rep.F = mult.F;
  rep.residual = mult.residual;
  rep.eq_tol = eq_tol;
  rep.boundary_tol = boundary_tol;

  const Eigen::VectorXd level = p.masses.A().transpose() * mult.F;
  const Eigen::MatrixXd& C = p.interaction.C();
  const Eigen::VectorXd masses = m.masses();

  double lower = 0.0, upper = 0.0;
  for (int i = 0; i < d; ++i) {
    const Grid& g = m.grids[static_cast<std::size_t>(i)];
    const auto& Q = p.fields[static_cast<std::size_t>(i)];
    for (double x : audit_points(g, audit_density)) {
      double val = partial_potential(m, C, i, x) + Q(x);
      lower = std::max(lower, level(i) - val);
    }
    // Support = heaviest nodes carrying all but a `support_tail` fraction of
    // the component mass. An iterative solver leaves harmless sub-tail dust
    // on abandoned nodes; the equilibrium equality is a mu-a.e. condition,
    // so nodes of negligible total measure do not belong in the check.
    if (masses(i) <= mult.mass_floor) continue;
    const int o = m.offset(i);
    std::vector<int> order(static_cast<std::size_t>(g.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double wa = m.weights(o + a), wb = m.weights(o + b);
      return wa != wb ? wa > wb : a < b;
    });
    const double target = (1.0 - support_tail) * masses(i);
    double covered = 0.0;
    for (int k : order) {
      double wk = m.weights(o + k);
      if (wk <= mult.mass_floor) break;
      double x = g.nodes[static_cast<std::size_t>(k)];
      double val = partial_potential(m, C, i, x) + Q(x);
      upper = std::max(upper, val - level(i));
      covered += wk;
      if (covered >= target) break;
    }
  }
  rep.lower_violation = lower;
  rep.upper_violation = upper;

  rep.boundary_mass = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    const Grid& g = m.grids[static_cast<std::size_t>(i)];
    if (!(g.left_truncated || g.right_truncated) || masses(i) <= mult.mass_floor) continue;
    const int o = m.offset(i);
    double edge = 0.0;
    if (g.left_truncated)
      for (int k = 0; k < std::min(2, g.size()); ++k) edge += m.weights(o + k);
    if (g.right_truncated)
      for (int k = std::max(0, g.size() - 2); k < g.size(); ++k) edge += m.weights(o + k);
    rep.boundary_mass(i) = edge / masses(i);
  }

  double worst_boundary = (d > 0) ? rep.boundary_mass.maxCoeff() : 0.0;
  rep.pass = lower <= eq_tol && upper <= eq_tol && worst_boundary <= boundary_tol;
  if (worst_boundary > boundary_tol)
    rep.advice = "truncated ends carry " + std::to_string(worst_boundary) +
                 " of the component mass; rerun with a larger truncation radius";
  return rep;
}

}  // namespace vequil
