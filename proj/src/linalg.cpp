#include "bfda/linalg.hpp"

#include <cmath>

#include "bfda/kernels.hpp"

namespace bfda {

SymSolver::SymSolver(const Matrix& m, double pd_floor) : dim_(m.rows()), m_(m) {
  if (m.rows() != m.cols()) throw numeric_error("SymSolver needs a square matrix");
  llt_.compute(m_);
  if (llt_.info() == Eigen::Success) return;
  repaired_ = true;
  m_ = nearest_pd(m_, pd_floor);
  llt_.compute(m_);
  if (llt_.info() == Eigen::Success) return;
  // generalized-inverse fallback
  pseudo_ = true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
  if (es.info() != Eigen::Success) throw numeric_error("SymSolver: eigendecomposition failed");
  evec_ = es.eigenvectors();
  eval_ = es.eigenvalues().cwiseMax(0.0);
  const double tol = 1e-14 * std::max(eval_[dim_ - 1], 1.0);
  inv_eval_.resize(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i) inv_eval_[i] = eval_[i] > tol ? 1.0 / eval_[i] : 0.0;
}

Vector SymSolver::solve(const Vector& b) const {
  if (!pseudo_) return llt_.solve(b);
  return evec_ * (inv_eval_.asDiagonal() * (evec_.transpose() * b));
}

Matrix SymSolver::solve(const Matrix& b) const {
  if (!pseudo_) return llt_.solve(b);
  return evec_ * (inv_eval_.asDiagonal() * (evec_.transpose() * b));
}

Vector SymSolver::inv_sqrt_mul(const Vector& z) const {
  if (!pseudo_) return llt_.matrixU().solve(z);
  return evec_ * (inv_eval_.cwiseSqrt().asDiagonal() * z);
}

Vector SymSolver::sqrt_mul(const Vector& z) const {
  if (!pseudo_) return llt_.matrixL() * z;
  return evec_ * (eval_.cwiseSqrt().asDiagonal() * z);
}

double SymSolver::log_det() const {
  if (!pseudo_) {
    double s = 0.0;
    const auto& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < dim_; ++i) s += std::log(l(i, i));
    return 2.0 * s;
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < dim_; ++i)
    if (eval_[i] > 0) s += std::log(eval_[i]);
  return s;
}

double power_lambda_max(const Matrix& m, int iters) {
  const Eigen::Index p = m.rows();
  Vector v = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = m.selfadjointView<Eigen::Lower>() * v;
    lam = w.norm();
    if (lam <= 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

double power_lambda_max_factor(const Matrix& f, int iters) {
  const Eigen::Index p = f.rows();
  Vector v = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = f * (f.transpose() * v);
    lam = w.norm();
    if (lam <= 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

}  // namespace bfda
