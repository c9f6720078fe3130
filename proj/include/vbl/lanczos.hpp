#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <memory>

namespace vbl {

using SpMat = Eigen::SparseMatrix<double>;

/// Factorization of A - sigma I for symmetric sparse A. LDL^T is tried first; SparseLU takes over
/// when LDL^T fails or its solves do not pass the residual check. Tridiagonal matrices take an O(n)
/// path. A must outlive the factor.
class ShiftedFactor {
 public:
  ShiftedFactor(const SpMat& a, double sigma);
  ~ShiftedFactor();
  ShiftedFactor(ShiftedFactor&&) noexcept;
  ShiftedFactor& operator=(ShiftedFactor&&) noexcept;

  double shift() const { return sigma_; }
  /// Solves (A - sigma) x = b with iterative refinement. Throws NumericalError when the normwise
  /// backward error stays above 1e-12 or the residual stays above 1e-10 ||b|| while the backward
  /// error is not small.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Number of eigenvalues of A below sigma, from the LDL^T pivots (Sylvester inertia).
  int negative_count() const;
  double last_relative_residual() const { return last_residual_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  const SpMat* a_;
  double sigma_;
  double norm_a_;
  mutable double last_residual_ = 0.0;
};

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // unit columns
  Eigen::VectorXd residuals;
};

/// nev eigenpairs of A closest to sigma by shift-invert Lanczos with full reorthogonalization.
/// The start vector comes from a fixed seed so repeated runs agree bit for bit. Converged when every
/// residual is below tol * max(1, ||A||_inf).
EigenPairs shift_invert_lanczos(const SpMat& a, double sigma, int nev, double tol = 1e-13,
                                unsigned seed = 20240601u);

/// Eigenvalue count of A in the half-open window [lo, hi).
int count_in_window(const SpMat& a, double lo, double hi);

/// All eigenpairs of A in [lo, hi); lo may be -infinity. Dense solve for n <= dense_limit. Otherwise
/// inertia bisection isolates every eigenvalue (or cluster of width below 64 eps ||A||) and shift-invert
/// Lanczos next to it, deflated against vectors already found, converges each pair to a residual below
/// tol * max(1, ||A||_inf).
EigenPairs eigen_in_window(const SpMat& a, double lo, double hi, int dense_limit = 800, double tol = 1e-13);

}  // namespace vbl
