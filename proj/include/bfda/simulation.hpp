#pragma once

#include <cstdint>
#include <string>

#include "bfda/dataset.hpp"
#include "bfda/randmat.hpp"
#include "bfda/types.hpp"

namespace bfda {

enum class SimKind { stationary, nonstationary };

/// Synthetic-benchmark description: n GP paths with sinusoidal mean and a
/// Matern covariance on an equispaced grid, iid Gaussian noise, optional
/// per-curve sparsification to a fraction of the grid.
struct SimSpec {
  SimKind kind = SimKind::stationary;
  Eigen::Index n = 50;
  Eigen::Index p = 80;
  double t0 = 0.0;
  double t1 = 1.5707963267948966;  // pi/2
  double mean_amp = 3.0;
  double mean_freq = 4.0;
  double sigma2 = 5.0;
  double rho = 0.5;
  double nu = 3.5;
  double sigma_eps = 1.118033988749895;  // sqrt(5)/2
  double retain_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

SimKind sim_kind_from_name(const std::string& name);
std::string to_string(SimKind kind);

struct SimResult {
  Vector grid;
  Matrix truth;  // p x n noiseless paths
  FunctionalDataset data;
  Vector true_mean;
  Matrix true_cov;
};

/// Noiseless mean/covariance of the generating process on a grid.
Vector sim_true_mean(const SimSpec& spec, const Vector& grid);
Matrix sim_true_cov(const SimSpec& spec, const Vector& grid);

/// Draws the paths and noisy observations; applies sparsification when
/// retain_fraction < 1. Reproducible per (spec.seed).
SimResult generate(const SimSpec& spec);

/// Keeps ceil(fraction * p_i) uniformly chosen points per curve, order
/// preserved, independently across curves.
FunctionalDataset sparsify(const FunctionalDataset& data, double retain_fraction, RngStream& rng);

struct BlsResult {
  Matrix smoothed;  // p x n conditional means
  Matrix cond_cov;  // shared conditional covariance
};

/// Conditional-mean smoother under the true mean, covariance, and noise
/// variance; the oracle comparator on a common grid.
BlsResult bls_oracle(const Matrix& y, const Vector& true_mu, const Matrix& true_sigma,
                     double sigma_eps2);

}  // namespace bfda
