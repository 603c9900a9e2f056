#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bfda/types.hpp"

namespace bfda {

/// Cholesky-first solver for symmetric systems. When the factorization fails
/// the matrix is jittered (eigenvalue clamping) and refactored; if that also
/// fails, solves fall back to an eigendecomposition pseudo-inverse.
class SymSolver {
 public:
  SymSolver() = default;
  explicit SymSolver(const Matrix& m, double pd_floor = 1e-10);

  Eigen::Index size() const { return dim_; }
  bool used_repair() const { return repaired_; }
  bool used_pseudo_inverse() const { return pseudo_; }

  /// The (possibly repaired) matrix the solver factored.
  const Matrix& matrix() const { return m_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  /// x with cov(x) = matrix()^{-1} given iid standard normal z: x = L^{-T} z.
  Vector inv_sqrt_mul(const Vector& z) const;

  /// x with cov(x) = matrix() given iid standard normal z: x = L z.
  Vector sqrt_mul(const Vector& z) const;

  double log_det() const;

 private:
  Eigen::Index dim_ = 0;
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
  bool repaired_ = false;
  bool pseudo_ = false;
  // pseudo-inverse pieces (eigendecomposition route)
  Matrix evec_;
  Vector eval_;
  Vector inv_eval_;
};

/// Largest eigenvalue of a symmetric PSD matrix by fixed-iteration power
/// method with a deterministic start vector.
double power_lambda_max(const Matrix& m, int iters = 50);

/// Largest eigenvalue of F F^T without forming the product.
double power_lambda_max_factor(const Matrix& f, int iters = 50);

}  // namespace bfda
