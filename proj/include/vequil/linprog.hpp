#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vequil {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;        // primal solution when status == optimal
  double objective = 0.0;   // c'x at the solution
};

namespace detail {

/// Dense two-phase primal simplex on the standard form
///   min c'x  s.t.  A x = b,  x >= 0.
/// Entering and leaving variables follow Bland's smallest-index rule, which
/// rules out cycling; problem sizes here are tiny, so the dense tableau and
/// the slow-but-safe pivot rule are the right trade-off.
class SimplexTableau {
 public:
  SimplexTableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
    double scale = 1.0;
    if (A.size() > 0) scale = std::max(scale, A.cwiseAbs().maxCoeff());
    if (b.size() > 0) scale = std::max(scale, b.cwiseAbs().maxCoeff());
    pivot_tol_ = 1e-11 * scale;
    cost_tol_ = 1e-9 * std::max(1.0, c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0);
    feas_tol_ = 1e-9 * std::max(1.0, b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

    // Columns: n originals, m artificials, then the rhs. Rows: m constraints,
    // phase-2 reduced costs, phase-1 reduced costs.
    T_.setZero(m_ + 2, n_ + m_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    active_.assign(static_cast<std::size_t>(m_), true);
    for (int i = 0; i < m_; ++i) {
      double s = (b(i) < 0.0) ? -1.0 : 1.0;
      T_.block(i, 0, 1, n_) = s * A.row(i);
      T_(i, n_ + i) = 1.0;
      T_(i, n_ + m_) = s * b(i);
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
    // Phase-2 reduced costs start at c (artificials cost 0 in phase 2).
    T_.row(m_).setZero();
    T_.block(m_, 0, 1, n_) = c.transpose();
    // Phase-1 objective: sum of artificials; with the artificial basis the
    // reduced cost of original column j is -sum_i T(i, j).
    T_.row(m_ + 1).setZero();
    for (int j = 0; j <= n_ + m_; ++j) {
      if (j >= n_ && j < n_ + m_) continue;
      double s = 0.0;
      for (int i = 0; i < m_; ++i) s += T_(i, j);
      T_(m_ + 1, j) = -s;
    }
  }

  LpResult solve() {
    LpResult res;
    if (m_ > 0) {
      if (!run(m_ + 1, /*allow_artificial=*/true))
        throw std::runtime_error("simplex: phase 1 reported unbounded");
      double phase1 = 0.0;
      for (int i = 0; i < m_; ++i)
        if (active_[static_cast<std::size_t>(i)] && basis_[static_cast<std::size_t>(i)] >= n_)
          phase1 += T_(i, n_ + m_);
      if (phase1 > feas_tol_) {
        res.status = LpStatus::infeasible;
        return res;
      }
      drive_out_artificials();
    }
    if (!run(m_, /*allow_artificial=*/false)) {
      res.status = LpStatus::unbounded;
      return res;
    }
    res.status = LpStatus::optimal;
    res.x.setZero(n_);
    for (int i = 0; i < m_; ++i) {
      std::size_t si = static_cast<std::size_t>(i);
      if (active_[si] && basis_[si] >= 0 && basis_[si] < n_)
        res.x(basis_[si]) = std::max(0.0, T_(i, n_ + m_));
    }
    return res;
  }

 private:
  void pivot(int row, int col) {
    T_.row(row) /= T_(row, col);
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == row) continue;
      double f = T_(i, col);
      if (f != 0.0) T_.row(i) -= f * T_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  /// Bland-rule simplex iterations minimizing the given objective row.
  /// Returns false when the objective is unbounded below.
  bool run(int obj_row, bool allow_artificial) {
    const int col_limit = allow_artificial ? n_ + m_ : n_;
    const long max_iters = 20000L + 200L * (n_ + m_ + 1);
    for (long iter = 0; iter < max_iters; ++iter) {
      int enter = -1;
      for (int j = 0; j < col_limit; ++j) {
        if (T_(obj_row, j) < -cost_tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (!active_[static_cast<std::size_t>(i)]) continue;
        double a = T_(i, enter);
        if (a <= pivot_tol_) continue;
        double ratio = T_(i, n_ + m_) / a;
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit exceeded");
  }

  /// After phase 1, swap artificial basic variables for original columns via
  /// degenerate pivots; an all-zero row is a redundant constraint and is
  /// deactivated.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      std::size_t si = static_cast<std::size_t>(i);
      if (!active_[si] || basis_[si] < n_) continue;
      int col = -1;
      for (int j = 0; j < n_; ++j) {
        if (std::abs(T_(i, j)) > pivot_tol_) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        active_[si] = false;
        T_.row(i).setZero();
        basis_[si] = -1;
      }
    }
  }

  int m_, n_;
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
  std::vector<bool> active_;
  double pivot_tol_, cost_tol_, feas_tol_;
};

}  // namespace detail

/// min c'x subject to A x = b, x >= 0.
inline LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c) {
  if (A.rows() != b.size() || A.cols() != c.size())
    throw std::invalid_argument("solve_lp: dimension mismatch");
  if (A.cols() == 0) throw std::invalid_argument("solve_lp: no variables");
  detail::SimplexTableau tab(A, b, c);
  LpResult res = tab.solve();
  if (res.status == LpStatus::optimal) res.objective = c.dot(res.x);
  return res;
}

/// A feasible point of {x >= 0 : A x = b}, or nullopt when empty.
inline std::optional<Eigen::VectorXd> lp_feasible_point(const Eigen::MatrixXd& A,
                                                        const Eigen::VectorXd& b) {
  LpResult r = solve_lp(A, b, Eigen::VectorXd::Zero(A.cols()));
  if (r.status != LpStatus::optimal) return std::nullopt;
  return r.x;
}

/// max sum(x) over {A x = 0, 0 <= x <= 1}. The optimum is 0 exactly when the
/// recession cone {x >= 0 : A x = 0} is trivial; otherwise the maximizer is a
/// nonzero recession direction of {x >= 0 : A x = a}.
struct BoxKernelMax {
  double value = 0.0;
  Eigen::VectorXd direction;
};

inline BoxKernelMax max_sum_box_kernel(const Eigen::MatrixXd& A) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  // Variables (x, s) with x + s = 1 encode the upper bounds.
  Eigen::MatrixXd Aeq(m + d, 2 * d);
  Aeq.setZero();
  Aeq.block(0, 0, m, d) = A;
  Aeq.block(m, 0, d, d).setIdentity();
  Aeq.block(m, d, d, d).setIdentity();
  Eigen::VectorXd beq(m + d);
  beq.setZero();
  beq.tail(d).setOnes();
  Eigen::VectorXd c(2 * d);
  c.setZero();
  c.head(d).setConstant(-1.0);
  LpResult r = solve_lp(Aeq, beq, c);
  if (r.status != LpStatus::optimal)
    throw std::runtime_error("max_sum_box_kernel: box LP must be solvable");
  BoxKernelMax out;
  out.value = -r.objective;
  out.direction = r.x.head(d);
  return out;
}

/// max x_j over {x >= 0 : A x = a}; status unbounded when x_j is unbounded.
inline LpResult maximize_coordinate(const Eigen::MatrixXd& A, const Eigen::VectorXd& a, int j) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(A.cols());
  c(j) = -1.0;
  LpResult r = solve_lp(A, a, c);
  if (r.status == LpStatus::optimal) r.objective = -r.objective;
  return r;
}

}  // namespace vequil
