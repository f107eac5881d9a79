#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace vequil {

/// Symmetric positive semidefinite interaction matrix C together with a
/// factorization C = B' B where B has full row rank r = rank(C). B is built
/// from the spectral decomposition: rows sqrt(lambda_k) v_k' over the
/// eigenvalues above the PSD tolerance.
class InteractionMatrix {
 public:
  /// Validates symmetry and positive semidefiniteness (eigenvalues >=
  /// -tol_psd * max|lambda|), then factorizes. The factorization residual
  /// max|B'B - C| is checked against tol_fac * (1 + max|C|).
  static InteractionMatrix factorize(const Eigen::MatrixXd& C, double tol_psd = 1e-10,
                                     double tol_fac = 1e-12) {
    if (C.rows() != C.cols()) throw std::invalid_argument("InteractionMatrix: C must be square");
    if (C.rows() == 0) throw std::invalid_argument("InteractionMatrix: C must be nonempty");
    if ((C - C.transpose()).cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("InteractionMatrix: C must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("InteractionMatrix: eigendecomposition failed");
    Eigen::VectorXd lambda = es.eigenvalues();  // ascending
    double scale = lambda.cwiseAbs().maxCoeff();
    if (lambda.minCoeff() < -tol_psd * scale)
      throw std::invalid_argument("InteractionMatrix: C is not positive semidefinite");

    InteractionMatrix out;
    out.C_ = C;
    const int d = static_cast<int>(C.rows());
    int r = 0;
    for (int k = 0; k < d; ++k)
      if (lambda(k) > tol_psd * scale) ++r;
    out.B_.resize(r, d);
    int row = 0;
    for (int k = 0; k < d; ++k) {
      if (lambda(k) > tol_psd * scale)
        out.B_.row(row++) = std::sqrt(lambda(k)) * es.eigenvectors().col(k).transpose();
    }
    double resid = (out.B_.transpose() * out.B_ - C).cwiseAbs().maxCoeff();
    double cmax = C.cwiseAbs().maxCoeff();
    if (resid > tol_fac * (1.0 + cmax))
      throw std::runtime_error("InteractionMatrix: factorization residual too large");
    return out;
  }

  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& B() const { return B_; }
  int dimension() const { return static_cast<int>(C_.rows()); }
  int rank() const { return static_cast<int>(B_.rows()); }
  double coeff(int i, int j) const { return C_(i, j); }
  bool invertible() const { return rank() == dimension(); }

 private:
  InteractionMatrix() = default;
  Eigen::MatrixXd C_;
  Eigen::MatrixXd B_;
};

}  // namespace vequil
