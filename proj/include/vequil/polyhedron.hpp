#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include <vequil/linprog.hpp>

namespace vequil {

/// Mass polyhedron K = {x in R^d : x >= 0, A x = a}. Feasibility and
/// compactness are established at construction time by linear programming:
/// K is compact iff its recession cone {x >= 0 : A x = 0} is {0}, which is
/// decided by maximizing sum(x) over the recession cone boxed to [0,1]^d.
class MassPolyhedron {
 public:
  MassPolyhedron(Eigen::MatrixXd A, Eigen::VectorXd a) : A_(std::move(A)), a_(std::move(a)) {
    if (A_.rows() != a_.size())
      throw std::invalid_argument("MassPolyhedron: A and a dimensions disagree");
    if (A_.cols() == 0) throw std::invalid_argument("MassPolyhedron: zero-dimensional domain");
    auto fp = lp_feasible_point(A_, a_);
    feasible_ = fp.has_value();
    if (feasible_) feasible_point_ = *fp;
    BoxKernelMax rec = max_sum_box_kernel(A_);
    compact_ = rec.value <= 1e-9;
    if (!compact_) recession_direction_ = rec.direction;
  }

  /// Fixed masses t: K = {t}, encoded as the singleton {x >= 0 : I x = t}.
  static MassPolyhedron fixed(const Eigen::VectorXd& t) {
    const auto d = t.size();
    return MassPolyhedron(Eigen::MatrixXd::Identity(d, d), t);
  }

  /// Simplex {x >= 0 : sum x = total}.
  static MassPolyhedron simplex(int d, double total) {
    return MassPolyhedron(Eigen::MatrixXd::Ones(1, d), Eigen::VectorXd::Constant(1, total));
  }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& a() const { return a_; }
  int dimension() const { return static_cast<int>(A_.cols()); }
  int constraint_count() const { return static_cast<int>(A_.rows()); }

  bool feasible() const { return feasible_; }
  bool compact() const { return compact_; }

  /// A point of K; only valid when feasible().
  const Eigen::VectorXd& feasible_point() const {
    if (!feasible_) throw std::logic_error("MassPolyhedron: K is empty");
    return feasible_point_;
  }

  /// A nonzero recession direction; only valid when !compact().
  const Eigen::VectorXd& recession_direction() const {
    if (compact_) throw std::logic_error("MassPolyhedron: K is compact");
    return recession_direction_;
  }

  /// Supremum of x_j over K (+inf when unbounded, NaN when infeasible).
  double coordinate_max(int j) const {
    LpResult r = maximize_coordinate(A_, a_, j);
    if (r.status == LpStatus::unbounded) return std::numeric_limits<double>::infinity();
    if (r.status == LpStatus::infeasible) return std::numeric_limits<double>::quiet_NaN();
    return r.objective;
  }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    if (x.size() != A_.cols()) return false;
    if (x.minCoeff() < -tol) return false;
    if (A_.rows() == 0) return true;
    double scale = 1.0 + a_.cwiseAbs().maxCoeff();
    return (A_ * x - a_).cwiseAbs().maxCoeff() <= tol * scale;
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd a_;
  bool feasible_ = false;
  bool compact_ = false;
  Eigen::VectorXd feasible_point_;
  Eigen::VectorXd recession_direction_;
};

}  // namespace vequil
