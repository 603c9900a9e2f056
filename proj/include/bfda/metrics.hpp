#pragma once

#include <optional>
#include <vector>

#include "bfda/types.hpp"

namespace bfda {

/// Per-replicate evaluation row mirroring the benchmark tables.
struct ReplicateReport {
  double rimse_signals = 0.0;  // mean over curves of per-curve RIMSE
  double rimse_mean = 0.0;
  double rimse_cov = 0.0;
  double rimse_cor = 0.0;
  double coverage_z = 0.0;
  double coverage_mu = 0.0;
  double coverage_sigma = 0.0;
  std::optional<double> prediction_rmse;
};

struct AggregateReport {
  ReplicateReport mean;
  ReplicateReport se;
  std::size_t replicates = 0;
};

/// Trapezoid weights of a strictly increasing grid.
Vector trapezoid_weights(const Vector& grid);

/// sqrt of the trapezoid-integrated squared error of est against truth.
double rimse_curve(const Vector& est, const Vector& truth, const Vector& grid);

/// 2-D analogue via iterated 1-D trapezoid rules.
double rimse_surface(const Matrix& est, const Matrix& truth, const Vector& grid);

/// Linear interpolation of each smoothed curve (columns) at val_grid, RMSE
/// against val_values over all (curve, point) pairs. Extrapolation is an error.
double predict_validation(const Matrix& smoothed, const Vector& train_grid, const Vector& val_grid,
                          const Matrix& val_values);

Vector interpolate_linear(const Vector& x, const Vector& y, const Vector& xq);

AggregateReport aggregate_replicates(const std::vector<ReplicateReport>& reports);

}  // namespace bfda
