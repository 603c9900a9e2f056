#pragma once

#include <optional>

#include "bfda/dataset.hpp"
#include "bfda/kernels.hpp"
#include "bfda/types.hpp"

namespace bfda {

/// Everything the sampler needs that is fixed before the first sweep.
struct Hyperparams {
  double c = 1.0;
  Vector mu0;          // prior mean on the pooled grid
  double delta = 5.0;  // IWP shape
  double a_eps = 1.0, b_eps = 1.0;
  double a_s = 1.0, b_s = 20.0;
  Matrix scale_kernel;  // evaluated A on the pooled grid, PD
  ScaleKernelSpec scale_spec;
  int window = 5;
  double pd_floor = 1e-10;

  // empirical estimates feeding the above (kept for reporting)
  double sigma_eps2_hat = 0.0;
  double sigma_s2_hat = 0.0;
  std::optional<double> rho_hat;
  std::optional<double> nu_hat;

  void validate(Eigen::Index p) const;
};

/// Overrides and knobs for the empirical setup; unset fields fall back to
/// the estimators.
struct EbConfig {
  double c = 1.0;
  double delta = 5.0;
  double b_eps = 1.0;
  double b_s = 20.0;
  int window = 5;
  double pd_floor = 1e-10;
  ScaleKernelSpec scale_kernel;
  std::optional<double> sigma_eps2;  // bypass differencing estimator
  std::optional<double> sigma_s2;    // bypass moment estimator
  std::optional<double> a_eps;       // bypass moment matching
  std::optional<double> a_s;
  std::optional<double> rho;  // bypass the (rho, nu) fit
  std::optional<double> nu;
  std::optional<Vector> mu0;  // bypass the smoothed sample mean
};

struct MaternFit {
  double rho = 0.0;
  double nu = 0.0;
  double objective = 0.0;
  bool at_lower_bound = false;
};

/// Differencing estimator of the noise variance, Eq.-(6)-style:
/// sum of squared first differences over 2 * sum(p_i - 1).
double estimate_noise_variance(const FunctionalDataset& data);

/// Per-point cross-sectional mean over observing curves, then a centered
/// moving average (window shrinks symmetrically at the edges).
Vector estimate_prior_mean(const FunctionalDataset& data, const PooledGrid& grid, int window);

/// Empirical correlation fed to the Matern fit: sample covariance
/// (pairwise-complete on uncommon grids) with the noise variance removed
/// from the diagonal, normalized to correlation, PD-repaired.
Matrix empirical_correlation(const FunctionalDataset& data, const PooledGrid& grid,
                             double noise_var, double pd_floor = 1e-10);

/// Least-squares Matern fit over the strict upper triangle: coarse log-grid
/// search (60 rho values, nu in {2.5, 3, ..., 10}) followed by Nelder-Mead
/// refinement, nu clamped to >= 2.5. Ties prefer smaller rho, then smaller nu.
MaternFit fit_matern_params(const Matrix& emp_cor, const Matrix& dist);

/// Moment estimator of sigma_s2: (trace_cov_y - p * noise_var) / (trace_A /
/// (delta - 2)), with a nonpositive numerator clamped to 1e-6 * trace_cov_y.
double estimate_sigma_s2(double trace_cov_y, double noise_var, double trace_A, Eigen::Index p,
                         double delta);

/// Moment matching against the priors: a_eps = b_eps / noise_var and
/// a_s = b_s * sigma_s2_hat.
std::pair<double, double> derive_hyperpriors(double noise_var, double sigma_s2_hat, double b_eps,
                                             double b_s);

/// Cross-sectional variance at each pooled point over the curves observing
/// it (zero where fewer than two curves observe).
Vector pointwise_variance(const FunctionalDataset& data, const PooledGrid& grid);

/// Full empirical setup of Section-2.2 style hyperparameters, honoring any
/// overrides in the config.
Hyperparams default_hyperparams(const FunctionalDataset& data, const PooledGrid& grid,
                                const EbConfig& config = {});

}  // namespace bfda
