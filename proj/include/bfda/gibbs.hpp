#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfda/dataset.hpp"
#include "bfda/empirical_bayes.hpp"
#include "bfda/randmat.hpp"
#include "bfda/types.hpp"

namespace bfda {

/// One sweep's state: pooled-grid signals (column per curve), mean vector,
/// covariance as square-root factors, and the two scalar variances.
struct SamplerState {
  Matrix z;  // p x n, Z_i(t) in column i
  Vector mu;
  Matrix sigma_sqrt;  // M with Sigma = M M^T
  Matrix prec_sqrt;   // N with Sigma^{-1} = N N^T
  Matrix prec;        // Sigma^{-1} explicit
  double sigma_eps2 = 1.0;
  double sigma_s2 = 1.0;
  long iteration = 0;

  Matrix sigma() const;  // M M^T, formed on demand
};

struct StoreFlags {
  bool signals = true;
  bool mean = true;
  bool cov_diag = true;
  int cov_full_every = 10;  // keep every k-th full covariance draw; 0 = never
};

struct SamplerConfig {
  long n_burnin = 2000;
  long n_samples = 10000;
  long thin = 1;
  std::uint64_t seed = 0;
  double degenerate_threshold = 1e-8;  // relative to the spectral radius of Sigma
  double pd_floor = 1e-10;
  StoreFlags store;
  long checkpoint_every = 0;  // sweeps; 0 = off
  std::string checkpoint_dir;
  bool force_sparse_path = false;  // route common grids through the sparse updates

  // Step toggles; a disabled step keeps its block frozen. Used by the
  // calibration tests (e.g. Step 1 alone against the oracle smoother).
  bool update_signals = true;
  bool update_noise = true;
  bool update_mean = true;
  bool update_covariance = true;
  bool update_sigma_s = true;

  void validate() const;
};

/// Retained draws and bookkeeping from one chain.
struct Chain {
  Vector grid;
  std::vector<std::string> curve_ids;
  Eigen::Index n = 0, p = 0;
  long kept = 0;

  Matrix signals;   // (p*n) x kept, column per draw (empty unless stored)
  Matrix mean;      // p x kept
  Matrix cov_diag;  // p x kept
  std::vector<Matrix> cov_full;
  long cov_full_stride = 0;  // kept-index stride between cov_full entries
  Vector sigma_eps2;
  Vector sigma_s2;
  Vector loglik;

  Hyperparams hyper;
  SamplerConfig config;
  double wall_seconds = 0.0;
  long degenerate_curve_sweeps = 0;  // curve-sweeps that used the fallback
  long q_repairs = 0;

  Matrix signal_mean() const;  // p x n posterior mean of the signals
};

SamplerState init_state(const FunctionalDataset& data, const PooledGrid& grid,
                        const Hyperparams& hyper);

Chain run_chain(const FunctionalDataset& data, const PooledGrid& grid, const Hyperparams& hyper,
                const SamplerConfig& config);

/// As run_chain but starting from a caller-supplied state instead of
/// init_state; paired with the step toggles for conditional-law checks.
Chain run_chain_from(const FunctionalDataset& data, const PooledGrid& grid,
                     const Hyperparams& hyper, const SamplerConfig& config,
                     const SamplerState& initial);

/// Resume from a checkpoint directory written during a previous run; the
/// completed chain is identical to an uninterrupted one.
Chain resume_chain(const std::string& checkpoint_dir, const FunctionalDataset& data,
                   const PooledGrid& grid, const Hyperparams& hyper, const SamplerConfig& config);

// --- conditional moments, exposed for direct verification ---

/// Mean and covariance of Z at the missing points given observed signal
/// values (the conditional-Gaussian update).
struct CondGauss {
  Vector mean;
  Matrix cov;
};
CondGauss missing_conditional(const Matrix& sigma, const Vector& mu, const IndexVec& obs,
                              const IndexVec& mis, const Vector& z_obs);

/// Mean and covariance of Z at the observed points given data and, when
/// `coupled`, the current missing values (B^T V*^{-1} terms included).
CondGauss observed_conditional(const Matrix& sigma, const Vector& mu, double sigma_eps2,
                               const IndexVec& obs, const IndexVec& mis, const Vector& y_obs,
                               const Vector& z_mis, bool coupled);

/// Log density of the observation model given the current state, summed over
/// observed points; recorded each sweep for monitoring.
double observation_loglik(const FunctionalDataset& data, const PooledGrid& grid, const Matrix& z,
                          double sigma_eps2);

}  // namespace bfda
