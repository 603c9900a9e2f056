#pragma once

#include <map>
#include <string>
#include <vector>

#include "bfda/gibbs.hpp"
#include "bfda/types.hpp"

namespace bfda {

struct ScalarSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Point estimates, pointwise credible bounds, and diagnostics distilled
/// from retained draws.
struct PosteriorSummary {
  Vector grid;
  std::vector<std::string> curve_ids;
  double level = 0.95;

  Matrix signal_mean, signal_lower, signal_upper;  // p x n
  Vector mean_curve, mean_lower, mean_upper;       // p
  Matrix covariance_mean;                          // p x p
  Matrix covariance_lower, covariance_upper;       // p x p (from stored full draws)
  Matrix correlation_mean;                         // p x p
  Vector cov_diag_mean;                            // p
  ScalarSummary sigma_eps2;
  ScalarSummary sigma_s2;
  std::map<std::string, double> rhat;
  long kept = 0;
  double wall_seconds = 0.0;
  long degenerate_curve_sweeps = 0;
};

/// Empirical-quantile summaries of one chain at the given credibility level.
/// Covariance credible bounds need at least 100 stored full draws; below
/// that they are omitted, or rejected when require_cov_ci is set.
PosteriorSummary summarize(const Chain& chain, double level, bool require_cov_ci = false);

/// Split-chain potential scale reduction over >= 2 equal-length scalar
/// chains. Constant chains give 1 when they agree and +inf when they don't.
double gelman_rubin(const std::vector<Vector>& chains);

/// Fraction of coordinates whose truth lies inside [lower, upper].
double coverage_probability(const Matrix& lower, const Matrix& upper, const Matrix& truth);

/// Monitored scalars for convergence checks: sigma_eps2, sigma_s2, the mean
/// at five equispaced grid points, and three covariance diagonal entries.
std::map<std::string, Vector> monitored_scalars(const Chain& chain);

/// R-hat per monitored scalar across chains (all chains equal length).
std::map<std::string, double> diagnose_chains(const std::vector<Chain>& chains);

/// Writes the summary as a directory of CSV files plus scalars.json.
void write_summary(const PosteriorSummary& s, const std::string& dir);

/// Writes retained scalar chains (and monitored scalars) as one CSV.
void write_scalar_chains(const Chain& chain, const std::string& path);

/// Reads back a scalar-chain CSV: column name -> draws.
std::map<std::string, Vector> read_scalar_chains(const std::string& path);

Vector empirical_quantiles(const Vector& draws, const std::vector<double>& probs);

}  // namespace bfda
