#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <vequil/grid.hpp>
#include <vequil/numeric.hpp>
#include <vequil/problem.hpp>

namespace vequil {

namespace kernel {

/// Exact double cell average of -log|x - y| over a single cell of width h:
/// (1/h^2) int int -log|x-y| = 3/2 - log h. Replaces the singular diagonal.
inline double self_entry(double h) { return 1.5 - std::log(h); }

/// Entry for nodes of two cells. Distinct nodes use the midpoint kernel
/// -log|x-y|; coincident nodes across grids (distance < 1e-14) fall back to
/// the cell-averaged diagonal at the geometric-mean width, which reduces to
/// the exact single-cell average when the widths agree.
inline double entry(double x, double hx, double y, double hy) {
  double dist = std::abs(x - y);
  if (dist < 1e-14) return 1.5 - std::log(std::sqrt(hx * hy));
  return -std::log(dist);
}

}  // namespace kernel

/// Mutual-energy block between two grids: E_kl approximates the average of
/// -log|x - y| over cell k of g1 and cell l of g2.
inline Eigen::MatrixXd energy_block(const Grid& g1, const Grid& g2) {
  const int n1 = g1.size(), n2 = g2.size();
  Eigen::MatrixXd E(n1, n2);
  const bool same = (&g1 == &g2) || (g1.nodes == g2.nodes && g1.widths == g2.widths);
  for (int k = 0; k < n1; ++k) {
    const std::size_t sk = static_cast<std::size_t>(k);
    for (int l = 0; l < n2; ++l) {
      const std::size_t sl = static_cast<std::size_t>(l);
      if (same && k == l)
        E(k, l) = kernel::self_entry(g1.widths[sk]);
      else
        E(k, l) = kernel::entry(g1.nodes[sk], g1.widths[sk], g2.nodes[sl], g2.widths[sl]);
    }
  }
  return E;
}

/// Truncation radius for an unbounded component: the smallest R >= R_min
/// with Q_i(x) >= slope * log(1 + |x|) + margin whenever |x| >= R, where
/// slope = 2 * sum_j |C_ij| * M_j and M_j is the largest mass component j
/// can carry inside K. Beyond R the field outweighs any attraction the other
/// measures can exert, so clipping there cannot move the minimizer.
struct TruncationChoice {
  double radius = 0.0;
  bool compactness_guaranteed = false;  // all unbounded pairs interact nonnegatively
};

inline TruncationChoice choose_truncation(const ProblemInstance& p, int i, double margin = 10.0) {
  const std::size_t si = static_cast<std::size_t>(i);
  if (p.sets[si].bounded())
    throw std::invalid_argument("choose_truncation: component set is bounded");
  if (!p.fields[si].admissible_on(p.sets[si]))
    throw std::invalid_argument("choose_truncation: field not admissible on unbounded set");
  if (!p.masses.feasible() || !p.masses.compact())
    throw std::invalid_argument(
        "choose_truncation: K must be nonempty and compact to bound masses; "
        "pass an explicit truncation radius instead");

  double slope = 0.0;
  for (int j = 0; j < p.dimension(); ++j) {
    double Mj = p.masses.coordinate_max(j);
    slope += 2.0 * std::abs(p.interaction.coeff(i, j)) * Mj;
  }

  double r_min = 1.0;
  for (const auto& s : p.sets) r_min = std::max(r_min, 1.0 + s.max_finite_endpoint());

  const auto& q = p.fields[si];
  auto deficit = [&](double r) {
    // Worst violation of the growth inequality at radius r over the
    // unbounded directions of this set.
    double v = 0.0;
    double bound = slope * std::log1p(r) + margin;
    if (!std::isfinite(p.sets[si].intervals().back().hi)) v = std::min(v, q(r) - bound);
    if (!std::isfinite(p.sets[si].intervals().front().lo)) v = std::min(v, q(-r) - bound);
    return v;  // >= 0 iff the inequality holds at radius r in all directions
  };

  // Find a radius X with the inequality holding on [X, 4X] (the polynomial
  // dominates from some point on; the spot checks guard mid-range dips),
  // then bisect for the smallest admissible radius.
  double X = r_min;
  while (deficit(X) < 0.0 || deficit(2.0 * X) < 0.0 || deficit(4.0 * X) < 0.0) {
    X *= 2.0;
    if (X > 1e12)
      throw std::runtime_error("choose_truncation: growth condition not reachable below 1e12");
  }
  TruncationChoice out;
  if (X == r_min) {
    out.radius = r_min;
  } else {
    double lo = X / 2.0, hi = X;  // deficit(lo) < 0 in some direction, hi fine
    for (int it = 0; it < 200 && (hi - lo) > 1e-9 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      if (deficit(mid) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    out.radius = hi;
  }

  out.compactness_guaranteed = true;
  for (int a = 0; a < p.dimension() && out.compactness_guaranteed; ++a)
    for (int b = 0; b < p.dimension(); ++b)
      if (!p.sets[static_cast<std::size_t>(a)].bounded() &&
          !p.sets[static_cast<std::size_t>(b)].bounded() && p.interaction.coeff(a, b) < 0.0) {
        out.compactness_guaranteed = false;
        break;
      }
  return out;
}

/// Finite-dimensional image of a ProblemInstance: per-component grids, the
/// pairwise energy blocks, field values at the nodes, and the mass
/// constraints A (S w) = a acting on per-component sums.
class DiscreteProblem {
 public:
  DiscreteProblem(std::vector<Grid> grids, Eigen::MatrixXd C, Eigen::VectorXd q,
                  Eigen::MatrixXd A, Eigen::VectorXd a)
      : grids_(std::move(grids)), C_(std::move(C)), q_(std::move(q)), A_(std::move(A)),
        a_(std::move(a)) {
    const int d = dimension();
    offsets_.assign(static_cast<std::size_t>(d) + 1, 0);
    for (int i = 0; i < d; ++i)
      offsets_[static_cast<std::size_t>(i) + 1] =
          offsets_[static_cast<std::size_t>(i)] + grids_[static_cast<std::size_t>(i)].size();
    if (q_.size() != total_nodes())
      throw std::invalid_argument("DiscreteProblem: field vector length mismatch");
    blocks_.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      blocks_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d));
      for (int j = 0; j <= i; ++j) {
        Eigen::MatrixXd E = energy_block(grids_[static_cast<std::size_t>(i)],
                                         grids_[static_cast<std::size_t>(j)]);
        if (j < i)
          blocks_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = E.transpose();
        blocks_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::move(E);
      }
    }
  }

  int dimension() const { return static_cast<int>(grids_.size()); }
  int total_nodes() const { return static_cast<int>(offsets_.back()); }
  int offset(int i) const { return static_cast<int>(offsets_[static_cast<std::size_t>(i)]); }
  int block_size(int i) const { return grids_[static_cast<std::size_t>(i)].size(); }
  const std::vector<Grid>& grids() const { return grids_; }
  const Grid& grid(int i) const { return grids_[static_cast<std::size_t>(i)]; }
  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& block(int i, int j) const {
    return blocks_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd& field() const { return q_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& a() const { return a_; }

  /// 0/1 block-summation matrix S with (S w)_i = mass of component i.
  Eigen::MatrixXd mass_map() const {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dimension(), total_nodes());
    for (int i = 0; i < dimension(); ++i)
      S.block(i, offset(i), 1, block_size(i)).setOnes();
    return S;
  }

  Eigen::VectorXd masses(const Eigen::VectorXd& w) const {
    Eigen::VectorXd m(dimension());
    for (int i = 0; i < dimension(); ++i) m(i) = w.segment(offset(i), block_size(i)).sum();
    return m;
  }

  /// p^{(i)} = sum_j C_ij E^{(i,j)} w^{(j)}: the discrete partial potential
  /// at the nodes. Cross-component terms are combined value-sorted per node,
  /// so the result is invariant under component relabeling.
  Eigen::VectorXd partial_potentials(const Eigen::VectorXd& w) const {
    const int d = dimension();
    Eigen::VectorXd p(total_nodes());
    std::vector<Eigen::VectorXd> contrib(static_cast<std::size_t>(d));
    std::vector<double> terms(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double cij = C_(i, j);
        if (cij == 0.0)
          contrib[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(block_size(i));
        else
          contrib[static_cast<std::size_t>(j)] =
              cij * (block(i, j) * w.segment(offset(j), block_size(j)));
      }
      for (int k = 0; k < block_size(i); ++k) {
        for (int j = 0; j < d; ++j)
          terms[static_cast<std::size_t>(j)] = contrib[static_cast<std::size_t>(j)](k);
        p(offset(i) + k) = stable_sum(terms);
      }
    }
    return p;
  }

  /// Gradient of the discrete objective: 2 (p + q).
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    return 2.0 * (partial_potentials(w) + q_);
  }

  /// J(w) = sum_ij C_ij w_i' E^{(ij)} w_j + 2 sum_i q_i' w_i, with the
  /// cross-component reduction value-sorted (see partial_potentials).
  double objective(const Eigen::VectorXd& w) const {
    const int d = dimension();
    std::vector<double> quad;
    quad.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double cij = C_(i, j);
        if (cij == 0.0) {
          quad.push_back(0.0);
          continue;
        }
        quad.push_back(cij * w.segment(offset(i), block_size(i))
                                 .dot(block(i, j) * w.segment(offset(j), block_size(j))));
      }
    std::vector<double> lin(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      lin[static_cast<std::size_t>(i)] =
          q_.segment(offset(i), block_size(i)).dot(w.segment(offset(i), block_size(i)));
    return stable_sum(quad) + 2.0 * stable_sum(lin);
  }

  /// Per-block dot products of two concatenated vectors, combined stably.
  double stable_dot(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    std::vector<double> terms(static_cast<std::size_t>(dimension()));
    for (int i = 0; i < dimension(); ++i)
      terms[static_cast<std::size_t>(i)] =
          x.segment(offset(i), block_size(i)).dot(y.segment(offset(i), block_size(i)));
    return stable_sum(terms);
  }

 private:
  std::vector<Grid> grids_;
  std::vector<std::size_t> offsets_;
  Eigen::MatrixXd C_;
  std::vector<std::vector<Eigen::MatrixXd>> blocks_;
  Eigen::VectorXd q_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd a_;
};

/// Nonnegative weights on the grids of a DiscreteProblem; weight w_k is the
/// mass the discrete measure places on cell k.
struct MeasureTuple {
  std::vector<Grid> grids;
  Eigen::VectorXd weights;

  int components() const { return static_cast<int>(grids.size()); }

  int offset(int i) const {
    int o = 0;
    for (int j = 0; j < i; ++j) o += grids[static_cast<std::size_t>(j)].size();
    return o;
  }

  Eigen::VectorXd masses() const {
    Eigen::VectorXd m(components());
    int o = 0;
    for (int i = 0; i < components(); ++i) {
      int n = grids[static_cast<std::size_t>(i)].size();
      m(i) = weights.segment(o, n).sum();
      o += n;
    }
    return m;
  }
};

/// Discretizes a problem: grids per component (unbounded sets clipped at the
/// supplied or automatically chosen radius), energy blocks, node fields.
/// `nodes_per_component` must have one entry per component; `radius_override`
/// (if finite) replaces choose_truncation for every unbounded component.
inline DiscreteProblem assemble(const ProblemInstance& p, const std::vector<int>& nodes,
                                double radius_override = std::numeric_limits<double>::quiet_NaN(),
                                double margin = 10.0) {
  const int d = p.dimension();
  if (static_cast<int>(nodes.size()) != d)
    throw std::invalid_argument("assemble: need one node count per component");
  if (!p.masses.feasible()) throw std::invalid_argument("assemble: mass polyhedron is empty");

  std::vector<Grid> grids;
  grids.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const auto& s = p.sets[static_cast<std::size_t>(i)];
    double R = std::numeric_limits<double>::quiet_NaN();
    if (!s.bounded())
      R = std::isfinite(radius_override) ? radius_override
                                         : choose_truncation(p, i, margin).radius;
    grids.push_back(build_grid(s, nodes[static_cast<std::size_t>(i)], R));
  }

  int total = 0;
  for (const auto& g : grids) total += g.size();
  Eigen::VectorXd q(total);
  int o = 0;
  for (int i = 0; i < d; ++i) {
    const auto& g = grids[static_cast<std::size_t>(i)];
    for (int k = 0; k < g.size(); ++k)
      q(o + k) = p.fields[static_cast<std::size_t>(i)](g.nodes[static_cast<std::size_t>(k)]);
    o += g.size();
  }
  if (!q.allFinite()) throw std::runtime_error("assemble: field evaluated non-finite at a node");

  return DiscreteProblem(std::move(grids), p.interaction.C(), std::move(q), p.masses.A(),
                         p.masses.a());
}

}  // namespace vequil
