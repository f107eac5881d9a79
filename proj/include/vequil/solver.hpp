#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <vequil/discretize.hpp>
#include <vequil/linprog.hpp>
#include <vequil/numeric.hpp>

namespace vequil {

struct SolveOptions {
  long max_iters = 20000;
  double gap_tol = 1e-6;     // relative: stop at gap <= gap_tol * (1 + |J|)
  bool away_steps = true;    // away-step variant; plain FW zig-zags near faces and
                             // needs ~100x the iterations for the same gap
  unsigned seed = 0;         // recorded for reproducibility; tie-breaking is by lowest index

  void validate() const {
    if (!(gap_tol > 0.0)) throw std::invalid_argument("SolveOptions: gap_tol must be > 0");
    if (max_iters < 1) throw std::invalid_argument("SolveOptions: max_iters must be >= 1");
  }
};

struct SolveResult {
  MeasureTuple weights;
  double objective = 0.0;
  double gap = 0.0;               // Frank-Wolfe gap g'(w - v) at exit
  long iterations = 0;
  bool converged = false;
  std::vector<double> history;    // decimated objective values, ends with the final one
};

/// One column of the feasible set's vertex structure: mass t_i placed on a
/// single node of each component block.
struct SparseVertex {
  std::vector<int> node;  // global node index per component
  Eigen::VectorXd t;      // mass per component

  Eigen::VectorXd dense(const DiscreteProblem& dp) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dp.total_nodes());
    for (int i = 0; i < dp.dimension(); ++i) v(node[static_cast<std::size_t>(i)]) += t(i);
    return v;
  }
};

/// All vertices of K = {t >= 0 : A t = a} by basis enumeration: row-reduce
/// (A, a) to full row rank r, then solve every r-column subsystem and keep
/// the nonnegative solutions. Intended for d <= 12.
inline std::vector<Eigen::VectorXd> enumerate_polyhedron_vertices(const Eigen::MatrixXd& A,
                                                                  const Eigen::VectorXd& a) {
  const int d = static_cast<int>(A.cols());
  const double scale = std::max({1.0, A.size() ? A.cwiseAbs().maxCoeff() : 0.0,
                                 a.size() ? a.cwiseAbs().maxCoeff() : 0.0});
  // Row echelon reduction of [A | a].
  Eigen::MatrixXd M(A.rows(), d + 1);
  if (A.rows() > 0) M << A, a;
  int rank = 0;
  for (int col = 0; col < d && rank < M.rows(); ++col) {
    int piv = -1;
    double best = 1e-12 * scale;
    for (int r = rank; r < M.rows(); ++r)
      if (std::abs(M(r, col)) > best) {
        best = std::abs(M(r, col));
        piv = r;
      }
    if (piv < 0) continue;
    M.row(rank).swap(M.row(piv));
    for (int r = 0; r < M.rows(); ++r) {
      if (r == rank) continue;
      double f = M(r, col) / M(rank, col);
      if (f != 0.0) M.row(r) -= f * M.row(rank);
    }
    ++rank;
  }
  Eigen::MatrixXd Ar = M.topRows(rank).leftCols(d);
  Eigen::VectorXd ar = M.topRows(rank).rightCols(1);

  std::vector<Eigen::VectorXd> vertices;
  if (rank == 0) {
    // No effective constraints: the orthant's only vertex is the origin.
    vertices.push_back(Eigen::VectorXd::Zero(d));
    return vertices;
  }
  std::vector<int> idx(static_cast<std::size_t>(rank));
  for (int k = 0; k < rank; ++k) idx[static_cast<std::size_t>(k)] = k;
  auto advance = [&]() {
    int k = rank - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == d - rank + k) --k;
    if (k < 0) return false;
    ++idx[static_cast<std::size_t>(k)];
    for (int l = k + 1; l < rank; ++l)
      idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l) - 1] + 1;
    return true;
  };
  do {
    Eigen::MatrixXd B(rank, rank);
    for (int k = 0; k < rank; ++k) B.col(k) = Ar.col(idx[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    lu.setThreshold(1e-10);
    if (lu.rank() < rank) continue;
    Eigen::VectorXd xb = lu.solve(ar);
    if (xb.minCoeff() < -1e-9 * scale) continue;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < rank; ++k)
      v(idx[static_cast<std::size_t>(k)]) = std::max(0.0, xb(k));
    vertices.push_back(std::move(v));
  } while (advance());
  return vertices;
}

namespace detail {

/// Shared selection core: given per-node scores s (= g up to a positive
/// factor), pick the argmin node per block (lowest index on ties), then the
/// best mass vector from the supplied vertex list or, when absent, from the
/// simplex LP over K.
inline SparseVertex select_vertex(const DiscreteProblem& dp, const Eigen::VectorXd& s,
                                  const std::vector<Eigen::VectorXd>* vertices) {
  const int d = dp.dimension();
  SparseVertex v;
  v.node.resize(static_cast<std::size_t>(d));
  Eigen::VectorXd smin(d);
  for (int i = 0; i < d; ++i) {
    int best = 0;
    const auto seg = s.segment(dp.offset(i), dp.block_size(i));
    for (int k = 1; k < dp.block_size(i); ++k)
      if (seg(k) < seg(best)) best = k;
    v.node[static_cast<std::size_t>(i)] = dp.offset(i) + best;
    smin(i) = seg(best);
  }
  if (vertices != nullptr) {
    if (vertices->empty()) throw std::runtime_error("linear_subproblem: K has no vertices");
    auto score = [&](const Eigen::VectorXd& t) {
      std::vector<double> terms(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) terms[static_cast<std::size_t>(i)] = smin(i) * t(i);
      return stable_sum(terms);
    };
    std::size_t best = 0;
    double best_val = score((*vertices)[0]);
    for (std::size_t k = 1; k < vertices->size(); ++k) {
      double val = score((*vertices)[k]);
      if (val < best_val) {
        best_val = val;
        best = k;
      }
    }
    v.t = (*vertices)[best];
  } else {
    LpResult lp = solve_lp(dp.A(), dp.a(), smin);
    if (lp.status == LpStatus::unbounded)
      throw std::runtime_error(
          "linear_subproblem: LP unbounded (mass polyhedron is not compact)");
    if (lp.status != LpStatus::optimal)
      throw std::runtime_error("linear_subproblem: mass polyhedron is empty");
    v.t = lp.x;
  }
  return v;
}

/// M v for a sparse vertex: block i of the result is
/// sum_j C_ij t_j E^{(i,j)}(:, local node of j), combined value-sorted.
inline Eigen::VectorXd sparse_matvec(const DiscreteProblem& dp, const SparseVertex& v) {
  const int d = dp.dimension();
  Eigen::VectorXd out(dp.total_nodes());
  std::vector<Eigen::VectorXd> contrib(static_cast<std::size_t>(d));
  std::vector<double> terms(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const int ni = dp.block_size(i);
    for (int j = 0; j < d; ++j) {
      double coef = dp.C()(i, j) * v.t(j);
      if (coef == 0.0) {
        contrib[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(ni);
      } else {
        int local = v.node[static_cast<std::size_t>(j)] - dp.offset(j);
        contrib[static_cast<std::size_t>(j)] = coef * dp.block(i, j).col(local);
      }
    }
    for (int k = 0; k < ni; ++k) {
      for (int j = 0; j < d; ++j)
        terms[static_cast<std::size_t>(j)] = contrib[static_cast<std::size_t>(j)](k);
      out(dp.offset(i) + k) = stable_sum(terms);
    }
  }
  return out;
}

/// u' M v for sparse u, v: a d x d sum of single kernel entries.
inline double sparse_quadratic(const DiscreteProblem& dp, const SparseVertex& u,
                               const SparseVertex& v) {
  const int d = dp.dimension();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double coef = dp.C()(i, j) * u.t(i) * v.t(j);
      if (coef == 0.0) {
        terms.push_back(0.0);
        continue;
      }
      int li = u.node[static_cast<std::size_t>(i)] - dp.offset(i);
      int lj = v.node[static_cast<std::size_t>(j)] - dp.offset(j);
      terms.push_back(coef * dp.block(i, j)(li, lj));
    }
  return stable_sum(terms);
}

/// g' v for sparse v given per-node values s with g = 2 s.
inline double sparse_dot(const DiscreteProblem& dp, const Eigen::VectorXd& s,
                         const SparseVertex& v) {
  std::vector<double> terms(static_cast<std::size_t>(dp.dimension()));
  for (int i = 0; i < dp.dimension(); ++i)
    terms[static_cast<std::size_t>(i)] = v.t(i) * s(v.node[static_cast<std::size_t>(i)]);
  return stable_sum(terms);
}

}  // namespace detail

/// Uniform surrogate start: a feasible mass vector spread evenly across each
/// component's nodes. When the vertices of K are enumerable the masses are
/// their centroid, accumulated magnitude-sorted per coordinate, so a component
/// relabeling permutes the start exactly; the phase-1 point of the simplex
/// method depends on column order and is used only as the fallback.
inline MeasureTuple feasible_start(const DiscreteProblem& dp) {
  const int d = dp.dimension();
  std::optional<Eigen::VectorXd> t0;
  if (d <= 12 && max_sum_box_kernel(dp.A()).value <= 1e-9) {
    auto vertices = enumerate_polyhedron_vertices(dp.A(), dp.a());
    if (!vertices.empty()) {
      Eigen::VectorXd c(d);
      std::vector<double> coord(vertices.size());
      for (int i = 0; i < d; ++i) {
        for (std::size_t v = 0; v < vertices.size(); ++v)
          coord[v] = vertices[v](i);
        c(i) = stable_sum(coord) / static_cast<double>(vertices.size());
      }
      t0 = std::move(c);
    }
  }
  if (!t0) t0 = lp_feasible_point(dp.A(), dp.a());
  if (!t0) throw std::invalid_argument("feasible_start: mass polyhedron is empty");
  MeasureTuple m;
  m.grids = dp.grids();
  m.weights.resize(dp.total_nodes());
  for (int i = 0; i < dp.dimension(); ++i)
    m.weights.segment(dp.offset(i), dp.block_size(i))
        .setConstant((*t0)(i) / dp.block_size(i));
  return m;
}

/// Gradient of the discrete objective at w (doubled partial potentials plus
/// fields at the nodes).
inline Eigen::VectorXd gradient(const DiscreteProblem& dp, const Eigen::VectorXd& w) {
  return dp.gradient(w);
}

/// Minimizer of g'v over {v >= 0 : A(Sv) = a}: per-block argmin nodes plus a
/// d-dimensional LP for the masses (vertex enumeration for d <= 12 over a
/// compact K, dense simplex otherwise).
inline SparseVertex linear_subproblem(const DiscreteProblem& dp, const Eigen::VectorXd& g) {
  if (dp.dimension() <= 12 && max_sum_box_kernel(dp.A()).value <= 1e-9) {
    auto vertices = enumerate_polyhedron_vertices(dp.A(), dp.a());
    return detail::select_vertex(dp, g, &vertices);
  }
  return detail::select_vertex(dp, g, nullptr);
}

/// Frank-Wolfe with exact line search on the quadratic objective.
/// The iterate's image p = M w under the blocked quadratic form is updated
/// incrementally (vertices touch d columns only) and refreshed periodically
/// against drift; each iteration costs O(N d) instead of O(N^2).
inline SolveResult solve(const DiscreteProblem& dp, const SolveOptions& opts = {}) {
  opts.validate();
  const int d = dp.dimension();
  const long refresh_every = 512;

  // Precompute the vertex list once when enumeration applies.
  std::optional<std::vector<Eigen::VectorXd>> vertices;
  if (d <= 12 && max_sum_box_kernel(dp.A()).value <= 1e-9)
    vertices = enumerate_polyhedron_vertices(dp.A(), dp.a());

  MeasureTuple start = feasible_start(dp);
  Eigen::VectorXd w = start.weights;
  Eigen::VectorXd p = dp.partial_potentials(w);

  // Atom decomposition for away steps: the dense start plus visited vertices.
  const Eigen::VectorXd w0 = w;
  Eigen::VectorXd mw0;
  double alpha0 = 1.0;
  std::vector<SparseVertex> atoms;
  std::vector<double> alpha;
  if (opts.away_steps) mw0 = p;

  SolveResult res;
  const long stride = std::max<long>(1, opts.max_iters / 1024);
  Eigen::VectorXd s(dp.total_nodes());

  long iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    s = p + dp.field();
    double J = dp.stable_dot(w, p) + 2.0 * dp.stable_dot(dp.field(), w);
    if (iter % stride == 0) res.history.push_back(J);

    SparseVertex v =
        detail::select_vertex(dp, s, vertices ? &vertices.value() : nullptr);
    double gw = 2.0 * dp.stable_dot(s, w);
    double gv = 2.0 * detail::sparse_dot(dp, s, v);
    double gap = gw - gv;

    if (gap <= opts.gap_tol * (1.0 + std::abs(J))) {
      // Recompute from scratch before trusting the incremental numbers.
      p = dp.partial_potentials(w);
      s = p + dp.field();
      J = dp.stable_dot(w, p) + 2.0 * dp.stable_dot(dp.field(), w);
      v = detail::select_vertex(dp, s, vertices ? &vertices.value() : nullptr);
      gw = 2.0 * dp.stable_dot(s, w);
      gv = 2.0 * detail::sparse_dot(dp, s, v);
      gap = gw - gv;
      if (gap <= opts.gap_tol * (1.0 + std::abs(J))) {
        res.converged = true;
        res.gap = gap;
        res.objective = J;
        break;
      }
    }

    // Away candidate: active atom with the largest gradient inner product.
    bool do_away = false;
    int away_idx = -2;  // -1 = dense start atom
    double away_score = 0.0;
    if (opts.away_steps) {
      double best = -std::numeric_limits<double>::infinity();
      if (alpha0 > 0.0) {
        best = 2.0 * dp.stable_dot(s, w0);
        away_idx = -1;
      }
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (alpha[k] <= 0.0) continue;
        double sc = 2.0 * detail::sparse_dot(dp, s, atoms[k]);
        if (sc > best) {
          best = sc;
          away_idx = static_cast<int>(k);
        }
      }
      away_score = best - gw;  // g'(u - w)
      double au = (away_idx == -1) ? alpha0
                  : (away_idx >= 0) ? alpha[static_cast<std::size_t>(away_idx)]
                                    : 1.0;
      do_away = away_idx != -2 && away_score > gap && au < 1.0;
    }

    if (!do_away) {
      // Forward step toward v: w' = w + gamma (v - w).
      Eigen::VectorXd mv = detail::sparse_matvec(dp, v);
      double vMv = detail::sparse_quadratic(dp, v, v);
      double vp = detail::sparse_dot(dp, p, v);
      double wp = dp.stable_dot(w, p);
      double curv = vMv - 2.0 * vp + wp;  // (v-w)' M (v-w)
      double gamma = 1.0;
      if (curv > 0.0) gamma = std::min(1.0, std::max(0.0, gap / (2.0 * curv)));
      w *= (1.0 - gamma);
      for (int i = 0; i < d; ++i) w(v.node[static_cast<std::size_t>(i)]) += gamma * v.t(i);
      p = (1.0 - gamma) * p + gamma * mv;
      if (opts.away_steps) {
        if (gamma == 1.0) {
          alpha0 = 0.0;
          atoms.clear();
          alpha.clear();
          atoms.push_back(v);
          alpha.push_back(1.0);
        } else {
          alpha0 *= (1.0 - gamma);
          for (double& ak : alpha) ak *= (1.0 - gamma);
          atoms.push_back(v);
          alpha.push_back(gamma);
        }
      }
    } else {
      // Away step from atom u: w' = w + gamma (w - u), gamma <= au/(1-au).
      double au = (away_idx < 0) ? alpha0 : alpha[static_cast<std::size_t>(away_idx)];
      Eigen::VectorXd mu;
      double uMu, up, gu;
      if (away_idx < 0) {
        mu = mw0;
        uMu = dp.stable_dot(w0, mw0);
        up = dp.stable_dot(w0, p);
        gu = 2.0 * dp.stable_dot(s, w0);
      } else {
        const SparseVertex& u = atoms[static_cast<std::size_t>(away_idx)];
        mu = detail::sparse_matvec(dp, u);
        uMu = detail::sparse_quadratic(dp, u, u);
        up = detail::sparse_dot(dp, p, u);
        gu = 2.0 * detail::sparse_dot(dp, s, u);
      }
      double wp = dp.stable_dot(w, p);
      double curv = wp - 2.0 * up + uMu;  // (w-u)' M (w-u)
      double gamma_max = au / (1.0 - au);
      double descent = gu - gw;           // -g'(w-u) = away_score
      double gamma = gamma_max;
      if (curv > 0.0) gamma = std::min(gamma_max, std::max(0.0, descent / (2.0 * curv)));
      w *= (1.0 + gamma);
      if (away_idx < 0) {
        w -= gamma * w0;
      } else {
        const SparseVertex& u = atoms[static_cast<std::size_t>(away_idx)];
        for (int i = 0; i < d; ++i)
          w(u.node[static_cast<std::size_t>(i)]) -= gamma * u.t(i);
      }
      w = w.cwiseMax(0.0);
      p = (1.0 + gamma) * p - gamma * mu;
      alpha0 *= (1.0 + gamma);
      for (double& ak : alpha) ak *= (1.0 + gamma);
      if (away_idx < 0)
        alpha0 -= gamma;
      else
        alpha[static_cast<std::size_t>(away_idx)] -= gamma;
      if (away_idx < 0) alpha0 = std::max(0.0, alpha0);
      else alpha[static_cast<std::size_t>(away_idx)] =
               std::max(0.0, alpha[static_cast<std::size_t>(away_idx)]);
    }

    if ((iter + 1) % refresh_every == 0) p = dp.partial_potentials(w);
  }

  if (!res.converged) {
    p = dp.partial_potentials(w);
    s = p + dp.field();
    res.objective = dp.stable_dot(w, p) + 2.0 * dp.stable_dot(dp.field(), w);
    SparseVertex v = detail::select_vertex(dp, s, vertices ? &vertices.value() : nullptr);
    res.gap = 2.0 * dp.stable_dot(s, w) - 2.0 * detail::sparse_dot(dp, s, v);
    res.iterations = iter;
  } else {
    res.iterations = iter + 1;
  }
  res.history.push_back(res.objective);
  res.weights.grids = dp.grids();
  res.weights.weights = w;
  return res;
}

}  // namespace vequil
